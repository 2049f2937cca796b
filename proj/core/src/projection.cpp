#include "esgnn/projection.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

#include "esgnn/errors.hpp"
#include "esgnn/rng.hpp"

namespace esgnn {

ProjectionMethod projection_method_from_string(const std::string& s) {
  if (s == "pca") return ProjectionMethod::pca;
  if (s == "tsne") return ProjectionMethod::tsne;
  if (s == "none") return ProjectionMethod::none;
  throw ConfigError("unknown projection method '" + s + "'");
}

std::string to_string(ProjectionMethod m) {
  switch (m) {
    case ProjectionMethod::pca:
      return "pca";
    case ProjectionMethod::tsne:
      return "tsne";
    case ProjectionMethod::none:
      return "none";
  }
  return "?";
}

Eigen::MatrixXd project_pca_2d(const Eigen::MatrixXd& points,
                               bool* degenerate) {
  const Eigen::Index n = points.rows();
  const Eigen::Index d = points.cols();
  if (degenerate) *degenerate = false;
  Eigen::MatrixXd centered = points.rowwise() - points.colwise().mean();
  Eigen::MatrixXd cov =
      centered.transpose() * centered / std::max<double>(1.0, double(n - 1));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  if (es.info() != Eigen::Success)
    throw NumericalError("project_pca_2d: eigensolver failed");
  const auto& evals = es.eigenvalues();  // ascending
  if (evals(d - 1) <= 1e-30) {
    if (degenerate) *degenerate = true;
    return Eigen::MatrixXd::Zero(n, 2);
  }
  Eigen::MatrixXd axes = Eigen::MatrixXd::Zero(d, 2);
  axes.col(0) = es.eigenvectors().col(d - 1);
  if (d >= 2) axes.col(1) = es.eigenvectors().col(d - 2);
  // sign convention: dominant loading nonnegative
  for (int c = 0; c < 2; ++c) {
    Eigen::Index imax = 0;
    axes.col(c).cwiseAbs().maxCoeff(&imax);
    if (axes(imax, c) < 0.0) axes.col(c) = -axes.col(c);
  }
  return centered * axes;
}

Eigen::MatrixXd project_tsne_2d(const Eigen::MatrixXd& points,
                                const TsneParams& params, std::uint64_t seed) {
  const Eigen::Index n = points.rows();
  if (n < 3) throw ConfigError("project_tsne_2d: need at least 3 points");

  // pairwise squared distances
  Eigen::VectorXd sq = points.rowwise().squaredNorm();
  Eigen::MatrixXd d2 = sq.replicate(1, n) + sq.transpose().replicate(n, 1) -
                       2.0 * (points * points.transpose());
  d2 = d2.cwiseMax(0.0);

  // conditional affinities via per-point binary search on beta
  const double target_entropy =
      std::log(std::min<double>(params.perplexity, double(n - 1)));
  Eigen::MatrixXd p(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double beta = 1.0, beta_min = 0.0, beta_max = 1e300;
    Eigen::VectorXd row(n);
    for (int it = 0; it < 64; ++it) {
      double sum = 0.0;
      for (Eigen::Index j = 0; j < n; ++j) {
        row[j] = (j == i) ? 0.0 : std::exp(-beta * d2(i, j));
        sum += row[j];
      }
      if (sum <= 0.0) {
        row.setConstant(1.0 / double(n - 1));
        row[i] = 0.0;
        break;
      }
      double entropy = 0.0;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (row[j] > 0.0) {
          const double pj = row[j] / sum;
          entropy -= pj * std::log(pj);
        }
      }
      row /= sum;
      const double diff = entropy - target_entropy;
      if (std::abs(diff) < 1e-5) break;
      if (diff > 0.0) {
        beta_min = beta;
        beta = (beta_max >= 1e300) ? beta * 2.0 : 0.5 * (beta + beta_max);
      } else {
        beta_max = beta;
        beta = 0.5 * (beta + beta_min);
      }
    }
    p.row(i) = row.transpose();
  }
  // symmetrize
  p = (p + p.transpose()) / (2.0 * double(n));
  p = p.cwiseMax(1e-12);

  Rng rng(derive_seed(seed, "tsne-init"));
  Eigen::MatrixXd y(n, 2);
  for (Eigen::Index i = 0; i < n; ++i)
    for (int c = 0; c < 2; ++c) y(i, c) = rng.next_gaussian() * 1e-4;

  Eigen::MatrixXd vel = Eigen::MatrixXd::Zero(n, 2);
  Eigen::MatrixXd gains = Eigen::MatrixXd::Ones(n, 2);
  Eigen::MatrixXd grad(n, 2);

  for (int iter = 0; iter < params.iterations; ++iter) {
    const double exaggeration =
        iter < params.exaggeration_iters ? params.early_exaggeration : 1.0;
    const double momentum = iter < 250 ? 0.5 : 0.8;

    Eigen::VectorXd ysq = y.rowwise().squaredNorm();
    Eigen::MatrixXd num = ysq.replicate(1, n) + ysq.transpose().replicate(n, 1) -
                          2.0 * (y * y.transpose());
    num = (1.0 + num.cwiseMax(0.0).array()).inverse().matrix();
    num.diagonal().setZero();
    const double qsum = std::max(num.sum(), 1e-12);

    grad.setZero();
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        if (i == j) continue;
        const double q = num(i, j) / qsum;
        const double mult =
            (exaggeration * p(i, j) - q) * num(i, j);
        grad(i, 0) += 4.0 * mult * (y(i, 0) - y(j, 0));
        grad(i, 1) += 4.0 * mult * (y(i, 1) - y(j, 1));
      }
    }
    for (Eigen::Index i = 0; i < n; ++i)
      for (int c = 0; c < 2; ++c) {
        gains(i, c) = (grad(i, c) > 0.0) == (vel(i, c) > 0.0)
                          ? std::max(gains(i, c) * 0.8, 0.01)
                          : gains(i, c) + 0.2;
        vel(i, c) = momentum * vel(i, c) -
                    params.learning_rate * gains(i, c) * grad(i, c);
        y(i, c) += vel(i, c);
      }
    y.rowwise() -= y.colwise().mean();
  }
  return y;
}

Eigen::MatrixXd project_2d(const Eigen::MatrixXd& points, ProjectionMethod m,
                           std::uint64_t seed) {
  if (points.rows() < 3)
    throw ConfigError("project_2d: need at least 3 points");
  switch (m) {
    case ProjectionMethod::pca:
      return project_pca_2d(points);
    case ProjectionMethod::tsne:
      return project_tsne_2d(points, TsneParams{}, seed);
    case ProjectionMethod::none:
      return Eigen::MatrixXd(0, 2);
  }
  throw ConfigError("project_2d: bad method");
}

}  // namespace esgnn

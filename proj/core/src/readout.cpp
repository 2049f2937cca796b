#include "esgnn/readout.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "esgnn/errors.hpp"
#include "esgnn/rng.hpp"

namespace esgnn {

namespace {

Eigen::MatrixXd with_bias_column(const Eigen::MatrixXd& e) {
  Eigen::MatrixXd d(e.rows(), e.cols() + 1);
  d.leftCols(e.cols()) = e;
  d.col(e.cols()).setOnes();
  return d;
}

int argmax_lowest(const Eigen::RowVectorXd& row) {
  int best = 0;
  for (int c = 1; c < row.size(); ++c)
    if (row[c] > row[best]) best = c;
  return best;
}

}  // namespace

LinearReadout fit_linear(const Eigen::MatrixXd& embeddings,
                         const std::vector<int>& labels, int num_classes,
                         double ridge, LinearFitInfo* info) {
  const auto n_samples = embeddings.rows();
  if (n_samples < 1) throw ConfigError("fit_linear: no samples");
  if (static_cast<Eigen::Index>(labels.size()) != n_samples)
    throw ShapeError("fit_linear: labels/embeddings length mismatch");
  if (num_classes < 1) throw ConfigError("fit_linear: num_classes must be >= 1");
  for (int y : labels)
    if (y < 0 || y >= num_classes)
      throw ConfigError("fit_linear: label out of range");
  if (ridge < 0.0) throw ConfigError("fit_linear: ridge must be >= 0");

  const Eigen::Index dim = embeddings.cols() + 1;
  const Eigen::MatrixXd design = with_bias_column(embeddings);
  Eigen::MatrixXd targets = Eigen::MatrixXd::Zero(n_samples, num_classes);
  for (Eigen::Index s = 0; s < n_samples; ++s)
    targets(s, labels[static_cast<std::size_t>(s)]) = 1.0;

  std::uint64_t macs = 0;
  std::uint64_t divs = 0;

  // normal equations: A = D^T D + lambda I, B = D^T Y
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(dim, dim);
  for (Eigen::Index i = 0; i < dim; ++i) {
    for (Eigen::Index j = 0; j < dim; ++j) {
      double acc = 0.0;
      for (Eigen::Index s = 0; s < n_samples; ++s)
        acc += design(s, i) * design(s, j);
      a(i, j) = acc;
    }
  }
  macs += static_cast<std::uint64_t>(dim) * static_cast<std::uint64_t>(dim) *
          static_cast<std::uint64_t>(n_samples);
  a.diagonal().array() += ridge;

  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(dim, num_classes);
  for (Eigen::Index j = 0; j < dim; ++j)
    for (int c = 0; c < num_classes; ++c) {
      double acc = 0.0;
      for (Eigen::Index s = 0; s < n_samples; ++s)
        acc += design(s, j) * targets(s, c);
      b(j, c) = acc;
    }
  macs += static_cast<std::uint64_t>(dim) *
          static_cast<std::uint64_t>(num_classes) *
          static_cast<std::uint64_t>(n_samples);

  // partial-pivot LU, in place
  Eigen::MatrixXd lu = a;
  std::vector<Eigen::Index> perm(static_cast<std::size_t>(dim));
  for (Eigen::Index i = 0; i < dim; ++i)
    perm[static_cast<std::size_t>(i)] = i;
  bool singular = false;
  double max_pivot = 0.0;
  double min_pivot = std::numeric_limits<double>::infinity();
  const double pivot_floor =
      std::numeric_limits<double>::epsilon() * a.norm() * double(dim);
  for (Eigen::Index k = 0; k < dim && !singular; ++k) {
    Eigen::Index pivot_row = k;
    for (Eigen::Index i = k + 1; i < dim; ++i)
      if (std::abs(lu(i, k)) > std::abs(lu(pivot_row, k))) pivot_row = i;
    if (std::abs(lu(pivot_row, k)) <= pivot_floor) {
      singular = true;
      break;
    }
    if (pivot_row != k) {
      lu.row(pivot_row).swap(lu.row(k));
      std::swap(perm[static_cast<std::size_t>(pivot_row)],
                perm[static_cast<std::size_t>(k)]);
    }
    const double pivot = lu(k, k);
    max_pivot = std::max(max_pivot, std::abs(pivot));
    min_pivot = std::min(min_pivot, std::abs(pivot));
    for (Eigen::Index i = k + 1; i < dim; ++i) {
      const double m = lu(i, k) / pivot;
      ++divs;
      lu(i, k) = m;
      for (Eigen::Index j = k + 1; j < dim; ++j) lu(i, j) -= m * lu(k, j);
      macs += static_cast<std::uint64_t>(dim - k - 1);
    }
  }

  LinearReadout readout;
  if (singular) {
    // minimum-norm least squares on the original system
    Eigen::BDCSVD<Eigen::MatrixXd> svd(
        design, Eigen::ComputeThinU | Eigen::ComputeThinV);
    readout.weights = svd.solve(targets);
    if (info) {
      const auto& sv = svd.singularValues();
      double smin = std::numeric_limits<double>::infinity();
      for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv[i] > sv[0] * 1e-15) smin = std::min(smin, sv[i]);
      info->condition_estimate = sv.size() ? sv[0] / smin : 0.0;
      info->used_pseudoinverse = true;
      info->ops = 2 * macs + divs;
      info->ridge = ridge;
    }
    return readout;
  }

  // forward (unit lower) and back substitution per right-hand side
  readout.weights.resize(dim, num_classes);
  for (int c = 0; c < num_classes; ++c) {
    Eigen::VectorXd y(dim);
    for (Eigen::Index i = 0; i < dim; ++i) {
      double acc = b(perm[static_cast<std::size_t>(i)], c);
      for (Eigen::Index j = 0; j < i; ++j) acc -= lu(i, j) * y(j);
      macs += static_cast<std::uint64_t>(i);
      y(i) = acc;
    }
    for (Eigen::Index i = dim - 1; i >= 0; --i) {
      double acc = y(i);
      for (Eigen::Index j = i + 1; j < dim; ++j)
        acc -= lu(i, j) * readout.weights(j, c);
      macs += static_cast<std::uint64_t>(dim - i - 1);
      readout.weights(i, c) = acc / lu(i, i);
      ++divs;
    }
  }

  if (info) {
    info->condition_estimate = min_pivot > 0.0 ? max_pivot / min_pivot : 0.0;
    info->used_pseudoinverse = false;
    info->ops = 2 * macs + divs;
    info->ridge = ridge;
  }
  return readout;
}

std::vector<int> predict_linear(const LinearReadout& readout,
                                const Eigen::MatrixXd& embeddings,
                                OpCounter* ops) {
  if (embeddings.cols() + 1 != readout.weights.rows())
    throw ShapeError("predict_linear: embedding dim " +
                     std::to_string(embeddings.cols()) +
                     " does not match readout rows " +
                     std::to_string(readout.weights.rows()));
  const Eigen::MatrixXd scores = with_bias_column(embeddings) * readout.weights;
  std::vector<int> out(static_cast<std::size_t>(scores.rows()));
  for (Eigen::Index i = 0; i < scores.rows(); ++i)
    out[static_cast<std::size_t>(i)] = argmax_lowest(scores.row(i));
  if (ops)
    ops->readout_inference += 2ull *
                              static_cast<std::uint64_t>(scores.rows()) *
                              static_cast<std::uint64_t>(readout.weights.rows()) *
                              static_cast<std::uint64_t>(readout.weights.cols());
  return out;
}

NormalizedAdjacency normalized_adjacency(const GraphData& g) {
  const int n = g.num_nodes;
  // A+I as multiplicity counts; a source self-loop stacks on the added one
  Eigen::VectorXd degree = Eigen::VectorXd::Ones(n);  // the +I
  for (const auto& e : g.edges) {
    if (e.first == e.second) {
      degree[e.first] += 1.0;
    } else {
      degree[e.first] += 1.0;
      degree[e.second] += 1.0;
    }
  }
  NormalizedAdjacency a;
  a.num_nodes = n;
  const auto push = [&](int i, int j, double mult) {
    a.row.push_back(i);
    a.col.push_back(j);
    a.value.push_back(mult / std::sqrt(degree[i] * degree[j]));
  };
  std::vector<std::vector<std::pair<int, double>>> rows(
      static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    rows[static_cast<std::size_t>(i)].emplace_back(i, 1.0);  // self loop
  for (const auto& e : g.edges) {
    if (e.first == e.second) {
      rows[static_cast<std::size_t>(e.first)].front().second += 1.0;
    } else {
      rows[static_cast<std::size_t>(e.first)].emplace_back(e.second, 1.0);
      rows[static_cast<std::size_t>(e.second)].emplace_back(e.first, 1.0);
    }
  }
  for (int i = 0; i < n; ++i) {
    auto& r = rows[static_cast<std::size_t>(i)];
    std::sort(r.begin(), r.end());
    for (const auto& [j, mult] : r) push(i, j, mult);
  }
  return a;
}

Eigen::MatrixXd NormalizedAdjacency::apply(const Eigen::MatrixXd& x) const {
  if (x.rows() != num_nodes)
    throw ShapeError("NormalizedAdjacency::apply: row mismatch");
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(x.rows(), x.cols());
  for (std::size_t e = 0; e < value.size(); ++e)
    y.row(row[e]) += value[e] * x.row(col[e]);
  return y;
}

Eigen::MatrixXd NormalizedAdjacency::dense() const {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(num_nodes, num_nodes);
  for (std::size_t e = 0; e < value.size(); ++e) m(row[e], col[e]) = value[e];
  return m;
}

GraphConvGrad graphconv_loss_grad(const NormalizedAdjacency& a_hat,
                                  const Eigen::MatrixXd& x,
                                  const std::vector<int>& labels,
                                  const std::vector<int>& train_mask,
                                  const Eigen::MatrixXd& weights,
                                  const Eigen::VectorXd& bias) {
  if (train_mask.empty())
    throw ConfigError("graphconv_loss_grad: empty training mask");
  const auto c = weights.cols();
  const Eigen::MatrixXd xw = x * weights;          // n x C
  Eigen::MatrixXd logits = a_hat.apply(xw);        // n x C
  logits.rowwise() += bias.transpose();

  const double inv_count = 1.0 / static_cast<double>(train_mask.size());
  Eigen::MatrixXd dlogits = Eigen::MatrixXd::Zero(logits.rows(), c);
  double loss = 0.0;
  for (int i : train_mask) {
    const int y = labels[static_cast<std::size_t>(i)];
    if (y < 0 || y >= c)
      throw ConfigError("graphconv_loss_grad: label out of range");
    Eigen::RowVectorXd z = logits.row(i);
    const double zmax = z.maxCoeff();
    const Eigen::RowVectorXd ez = (z.array() - zmax).exp();
    const double denom = ez.sum();
    loss -= (z[y] - zmax - std::log(denom)) * inv_count;
    dlogits.row(i) = (ez / denom) * inv_count;
    dlogits(i, y) -= inv_count;
  }

  GraphConvGrad grad;
  grad.loss = loss;
  const Eigen::MatrixXd back = a_hat.apply(dlogits);  // A_hat symmetric
  grad.d_weights = x.transpose() * back;
  grad.d_bias = dlogits.colwise().sum().transpose();
  return grad;
}

GraphConvReadout fit_graphconv(const Eigen::MatrixXd& node_embeddings,
                               const GraphData& g,
                               const std::vector<int>& labels,
                               const std::vector<int>& train_mask,
                               int num_classes,
                               const GraphConvHyperparams& hp,
                               std::uint64_t seed, GraphConvFitInfo* info) {
  if (node_embeddings.rows() != g.num_nodes)
    throw ShapeError("fit_graphconv: embeddings/graph node count mismatch");
  if (train_mask.empty())
    throw ConfigError("fit_graphconv: empty training mask");
  if (!(hp.dropout >= 0.0 && hp.dropout < 1.0))
    throw ConfigError("fit_graphconv: dropout must be in [0,1)");
  if (hp.epochs < 0) throw ConfigError("fit_graphconv: negative epochs");

  const auto h = node_embeddings.cols();
  const NormalizedAdjacency a_hat = normalized_adjacency(g);

  GraphConvReadout readout;
  readout.hp = hp;
  Rng rng(derive_seed(seed, "graphconv"));
  const double init_scale =
      std::sqrt(6.0 / static_cast<double>(h + num_classes));
  readout.weights.resize(h, num_classes);
  for (Eigen::Index i = 0; i < h; ++i)
    for (int c = 0; c < num_classes; ++c)
      readout.weights(i, c) = (2.0 * rng.next_double() - 1.0) * init_scale;
  readout.bias = Eigen::VectorXd::Zero(num_classes);

  Eigen::MatrixXd vel_w = Eigen::MatrixXd::Zero(h, num_classes);
  Eigen::VectorXd vel_b = Eigen::VectorXd::Zero(num_classes);
  Eigen::MatrixXd dropped(node_embeddings.rows(), h);

  for (int epoch = 0; epoch < hp.epochs; ++epoch) {
    const Eigen::MatrixXd* input = &node_embeddings;
    if (hp.dropout > 0.0) {
      const double keep = 1.0 - hp.dropout;
      const double inv_keep = 1.0 / keep;
      for (Eigen::Index i = 0; i < node_embeddings.rows(); ++i)
        for (Eigen::Index j = 0; j < h; ++j)
          dropped(i, j) = rng.next_double() < keep
                              ? node_embeddings(i, j) * inv_keep
                              : 0.0;
      input = &dropped;
    }
    GraphConvGrad grad = graphconv_loss_grad(a_hat, *input, labels, train_mask,
                                             readout.weights, readout.bias);
    if (info) info->loss_history.push_back(grad.loss);
    // SGD with momentum; weight decay folds into the gradient
    grad.d_weights += hp.weight_decay * readout.weights;
    grad.d_bias += hp.weight_decay * readout.bias;
    vel_w = hp.momentum * vel_w + grad.d_weights;
    vel_b = hp.momentum * vel_b + grad.d_bias;
    readout.weights -= hp.learning_rate * vel_w;
    readout.bias -= hp.learning_rate * vel_b;
  }
  return readout;
}

std::vector<int> predict_graphconv(const GraphConvReadout& readout,
                                   const Eigen::MatrixXd& node_embeddings,
                                   const GraphData& g, OpCounter* ops) {
  if (node_embeddings.rows() != g.num_nodes)
    throw ShapeError("predict_graphconv: node count mismatch");
  if (node_embeddings.cols() != readout.weights.rows())
    throw ShapeError("predict_graphconv: embedding dim mismatch");
  const NormalizedAdjacency a_hat = normalized_adjacency(g);
  Eigen::MatrixXd logits = a_hat.apply(node_embeddings * readout.weights);
  logits.rowwise() += readout.bias.transpose();
  std::vector<int> out(static_cast<std::size_t>(logits.rows()));
  for (Eigen::Index i = 0; i < logits.rows(); ++i)
    out[static_cast<std::size_t>(i)] = argmax_lowest(logits.row(i));
  if (ops) {
    const auto c = static_cast<std::uint64_t>(readout.weights.cols());
    ops->readout_inference +=
        2ull * (static_cast<std::uint64_t>(node_embeddings.rows()) *
                    static_cast<std::uint64_t>(node_embeddings.cols()) * c +
                static_cast<std::uint64_t>(a_hat.value.size()) * c);
  }
  return out;
}

}  // namespace esgnn

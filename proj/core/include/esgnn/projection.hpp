#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>

namespace esgnn {

enum class ProjectionMethod { pca, tsne, none };

ProjectionMethod projection_method_from_string(const std::string& s);
std::string to_string(ProjectionMethod m);

// Top-2 principal components of the mean-centered points; deterministic up
// to sign, canonicalized so each axis has nonnegative dominant loading.
// All-identical inputs yield zeros and set *degenerate.
Eigen::MatrixXd project_pca_2d(const Eigen::MatrixXd& points,
                               bool* degenerate = nullptr);

struct TsneParams {
  double perplexity = 30.0;
  int iterations = 1000;
  double learning_rate = 200.0;
  double early_exaggeration = 12.0;
  int exaggeration_iters = 250;
};

// Exact (quadratic) tSNE; fine at desk scale. Seeded Gaussian init.
Eigen::MatrixXd project_tsne_2d(const Eigen::MatrixXd& points,
                                const TsneParams& params, std::uint64_t seed);

// Dispatch on method; requires at least 3 points.
Eigen::MatrixXd project_2d(const Eigen::MatrixXd& points, ProjectionMethod m,
                           std::uint64_t seed);

}  // namespace esgnn

#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "esgnn/graph_data.hpp"
#include "esgnn/op_counting.hpp"

namespace esgnn {

// Fully connected readout; weights (h+1) x C with the bias in the last row.
struct LinearReadout {
  Eigen::MatrixXd weights;
};

struct LinearFitInfo {
  double condition_estimate = 0.0;
  bool used_pseudoinverse = false;  // lambda = 0 rank-deficient fallback
  std::uint64_t ops = 0;            // instrumented count, 2 OPs/MAC + divs
  double ridge = 0.0;
};

// Solves min ||[E|1] W - Y||^2 + lambda ||W||^2 with one-hot targets via
// the normal equations (partial-pivot LU, instrumented). lambda = 0 on a
// rank-deficient system falls back to the minimum-norm solution.
LinearReadout fit_linear(const Eigen::MatrixXd& embeddings,
                         const std::vector<int>& labels, int num_classes,
                         double ridge, LinearFitInfo* info = nullptr);

// argmax over o = [E|1] W rows; ties break to the lowest class index.
std::vector<int> predict_linear(const LinearReadout& readout,
                                const Eigen::MatrixXd& embeddings,
                                OpCounter* ops = nullptr);

struct GraphConvHyperparams {
  int epochs = 200;
  double learning_rate = 0.01;
  double weight_decay = 0.005;
  double momentum = 0.9;
  double dropout = 0.2;
};

struct GraphConvReadout {
  Eigen::MatrixXd weights;  // h x C
  Eigen::VectorXd bias;     // C
  GraphConvHyperparams hp;
};

// Add-self-loop symmetric normalization D^{-1/2}(A+I)D^{-1/2}, stored as
// sorted COO (symmetric, nonnegative; equals I for an edgeless graph).
struct NormalizedAdjacency {
  int num_nodes = 0;
  std::vector<int> row;
  std::vector<int> col;
  std::vector<double> value;

  // Y = A_hat * X
  Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const;
  Eigen::MatrixXd dense() const;
};

NormalizedAdjacency normalized_adjacency(const GraphData& g);

// Cross-entropy loss over the masked rows of A_hat*(X W) + b and its
// analytic gradient; the single forward/backward used by training and by
// the finite-difference checks.
struct GraphConvGrad {
  double loss = 0.0;
  Eigen::MatrixXd d_weights;
  Eigen::VectorXd d_bias;
};

GraphConvGrad graphconv_loss_grad(const NormalizedAdjacency& a_hat,
                                  const Eigen::MatrixXd& x,
                                  const std::vector<int>& labels,
                                  const std::vector<int>& train_mask,
                                  const Eigen::MatrixXd& weights,
                                  const Eigen::VectorXd& bias);

struct GraphConvFitInfo {
  std::vector<double> loss_history;
};

// Full-batch SGD with momentum and weight decay on the single
// graph-convolution readout; inverted dropout on the node embeddings
// during training only. Deterministic per seed.
GraphConvReadout fit_graphconv(const Eigen::MatrixXd& node_embeddings,
                               const GraphData& g,
                               const std::vector<int>& labels,
                               const std::vector<int>& train_mask,
                               int num_classes,
                               const GraphConvHyperparams& hp,
                               std::uint64_t seed,
                               GraphConvFitInfo* info = nullptr);

std::vector<int> predict_graphconv(const GraphConvReadout& readout,
                                   const Eigen::MatrixXd& node_embeddings,
                                   const GraphData& g,
                                   OpCounter* ops = nullptr);

}  // namespace esgnn

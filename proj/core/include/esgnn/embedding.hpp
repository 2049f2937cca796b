#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <vector>

#include "esgnn/device.hpp"
#include "esgnn/graph_data.hpp"
#include "esgnn/op_counting.hpp"

namespace esgnn {

enum class Activation { tanh };

Activation activation_from_string(const std::string& s);
std::string to_string(Activation a);

struct EsgnnConfig {
  int hidden_dim = 50;             // h
  int steps = 4;                   // T
  double leak = 0.2;               // a
  double alpha_input = 0.0016;     // 1/uS
  double alpha_recursive = 0.006;  // 1/uS
  Activation activation = Activation::tanh;
  QuantConfig quant;
  // Opt-in approximation: one crossbar read of the (clamped) neighbor-state
  // sum per node instead of one read per neighbor. Identical before
  // quantization, not after; default off (per-neighbor is the reference).
  bool fused_aggregation = false;

  void validate() const;
};

// The two weight matrices live as conductances; W = alpha * G. The
// echo-state check rho(alpha_r * G_R) < 1 runs at construction and throws
// ConfigError unless allow_unstable is set.
class EsgnnModel {
 public:
  EsgnnModel(CrossbarArray w_input, CrossbarArray w_recursive,
             EsgnnConfig config, double read_noise_std,
             bool allow_unstable = false);

  const CrossbarArray& input_array() const { return w_input_; }
  const CrossbarArray& recursive_array() const { return w_recursive_; }
  const EsgnnConfig& config() const { return config_; }
  double read_noise_std() const { return read_noise_std_; }
  double recursive_spectral_radius() const { return rho_; }
  // Graph-aware contraction bound rho * max_degree; > 1 is reported as a
  // warning by callers, never enforced (see embed notes).
  double degree_bound(const GraphData& g) const {
    return rho_ * g.max_degree();
  }

 private:
  CrossbarArray w_input_;
  CrossbarArray w_recursive_;
  EsgnnConfig config_;
  double read_noise_std_;
  double rho_;
};

// Generates fresh (G_I, G_R) pairs from one seed; the unit used by
// cross-validation folds and repeated trials.
struct ModelFactory {
  EsgnnConfig config;
  DeviceModel device;
  int feature_dim = 0;  // u+1
  bool allow_unstable = false;

  EsgnnModel make(std::uint64_t seed) const;
};

struct NodeStates {
  Eigen::MatrixXd values;  // n x h
  int step = 0;
};

struct EmbedOptions {
  bool noise = true;            // read noise on/off (std from the model)
  std::uint64_t noise_seed = 0;
  OpCounter* ops = nullptr;     // logical crossbar-op tallies
  VmmStats* vmm_stats = nullptr;
  std::vector<Eigen::MatrixXd>* trajectory = nullptr;  // s^(0) .. s^(T)
};

// u_j = alpha_I * analog_vmm(G_I, x_j) for every node; n x h.
Eigen::MatrixXd input_projection(const EsgnnModel& model, const GraphData& g,
                                 const EmbedOptions& opts = {});

// One synchronous update
//   s_j' = a s_j + (1-a) tanh(u_j + sum_{k in N(j)} alpha_R * vmm(G_R, s_k))
// with every s_k quantized to m bits for the read. Aggregation order is
// fixed (ascending k) so sums are bit-reproducible.
NodeStates esgnn_step(const EsgnnModel& model, const GraphData& g,
                      const NodeStates& states, const Eigen::MatrixXd& u,
                      Rng* noise_rng = nullptr, OpCounter* ops = nullptr,
                      VmmStats* stats = nullptr);

// T steps from zero states; returns sum-pooled g = sum_j s_j^(T).
Eigen::VectorXd embed_graph(const EsgnnModel& model, const GraphData& g,
                            const EmbedOptions& opts = {});

// Same trajectory, but returns s^(T) per node (n x h).
Eigen::MatrixXd embed_nodes(const EsgnnModel& model, const GraphData& g,
                            const EmbedOptions& opts = {});

}  // namespace esgnn

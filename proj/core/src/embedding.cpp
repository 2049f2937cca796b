#include "esgnn/embedding.hpp"

#include <cmath>

#include "esgnn/errors.hpp"

namespace esgnn {

Activation activation_from_string(const std::string& s) {
  if (s == "tanh") return Activation::tanh;
  throw ConfigError("unknown activation '" + s + "'");
}

std::string to_string(Activation) { return "tanh"; }

void EsgnnConfig::validate() const {
  if (hidden_dim < 1) throw ConfigError("EsgnnConfig: hidden_dim must be >= 1");
  if (steps < 1) throw ConfigError("EsgnnConfig: steps must be >= 1");
  if (!(leak >= 0.0 && leak <= 1.0))
    throw ConfigError("EsgnnConfig: leak must be in [0,1]");
  if (!(alpha_input > 0.0))
    throw ConfigError("EsgnnConfig: alpha_input must be > 0");
  if (!(alpha_recursive > 0.0))
    throw ConfigError("EsgnnConfig: alpha_recursive must be > 0");
  quant.validate();
}

EsgnnModel::EsgnnModel(CrossbarArray w_input, CrossbarArray w_recursive,
                       EsgnnConfig config, double read_noise_std,
                       bool allow_unstable)
    : w_input_(std::move(w_input)),
      w_recursive_(std::move(w_recursive)),
      config_(std::move(config)),
      read_noise_std_(read_noise_std) {
  config_.validate();
  if (read_noise_std_ < 0.0)
    throw ConfigError("EsgnnModel: read_noise_std must be >= 0");
  if (w_recursive_.rows() != w_recursive_.cols())
    throw ShapeError("EsgnnModel: recursive array must be square");
  if (w_input_.rows() != config_.hidden_dim ||
      w_recursive_.rows() != config_.hidden_dim)
    throw ShapeError("EsgnnModel: array rows must equal hidden_dim");
  rho_ = spectral_radius(w_recursive_, config_.alpha_recursive);
  if (rho_ >= 1.0 && !allow_unstable)
    throw ConfigError(
        "EsgnnModel: echo-state condition violated, rho(alpha_R*G_R) = " +
        std::to_string(rho_) + " >= 1 (pass allow_unstable to override)");
}

EsgnnModel ModelFactory::make(std::uint64_t seed) const {
  if (feature_dim < 1)
    throw ConfigError("ModelFactory: feature_dim must be set");
  CrossbarArray g_input =
      form_random_array(config.hidden_dim, feature_dim, device,
                        derive_seed(seed, "w_input"));
  CrossbarArray g_recursive =
      form_random_array(config.hidden_dim, config.hidden_dim, device,
                        derive_seed(seed, "w_recursive"));
  return EsgnnModel(std::move(g_input), std::move(g_recursive), config,
                    device.read_noise_std, allow_unstable);
}

Eigen::MatrixXd input_projection(const EsgnnModel& model, const GraphData& g,
                                 const EmbedOptions& opts) {
  const auto& cfg = model.config();
  if (g.features.cols() != model.input_array().cols())
    throw ShapeError("input_projection: feature_dim " +
                     std::to_string(g.features.cols()) + " != array cols " +
                     std::to_string(model.input_array().cols()));
  Eigen::MatrixXd u(g.num_nodes, cfg.hidden_dim);
  const double noise_std = opts.noise ? model.read_noise_std() : 0.0;
  Rng rng(derive_seed(opts.noise_seed, "input_projection"));
  Rng* rng_ptr = (opts.noise && noise_std > 0.0) ? &rng : nullptr;
  VmmStats stats;
  for (int j = 0; j < g.num_nodes; ++j) {
    u.row(j) = (analog_vmm(model.input_array(), g.features.row(j).transpose(),
                           cfg.quant, noise_std, rng_ptr, &stats) *
                cfg.alpha_input)
                   .transpose();
  }
  if (opts.vmm_stats) *opts.vmm_stats += stats;
  if (opts.ops)
    opts.ops->input_projection += 2ull * stats.mac_count;
  return u;
}

namespace {

// Shared step kernel. Messages are read per directed edge (the reference
// crossbar semantics): the clean bit-plane currents of a source node are
// identical for every receiver, so they are computed once, while the read
// noise is drawn fresh per edge and plane. Draw order is fixed: source
// ascending, receiver ascending, plane, row.
Eigen::MatrixXd step_states(const EsgnnModel& model, const GraphData& g,
                            const std::vector<std::vector<int>>& nbr,
                            const Eigen::MatrixXd& states,
                            const Eigen::MatrixXd& u, Rng* noise_rng,
                            OpCounter* ops, VmmStats* stats) {
  const auto& cfg = model.config();
  const int n = g.num_nodes;
  const int h = cfg.hidden_dim;
  const auto& garr = model.recursive_array();
  const double noise_std = noise_rng ? model.read_noise_std() : 0.0;
  const double scale =
      cfg.quant.x_max / static_cast<double>(cfg.quant.levels());
  const double alpha = cfg.alpha_recursive;

  Eigen::MatrixXd agg = u;  // u_j + incoming messages
  std::uint64_t clamped = 0;
  std::uint64_t reads = 0;

  if (cfg.fused_aggregation) {
    // One read per receiving node over the clamped state sum.
    Rng local_rng(0);
    for (int j = 0; j < n; ++j) {
      if (nbr[static_cast<std::size_t>(j)].empty()) continue;
      Eigen::VectorXd sum = Eigen::VectorXd::Zero(h);
      for (int k : nbr[static_cast<std::size_t>(j)])
        sum += states.row(k).transpose();
      VmmStats s;
      agg.row(j) += (analog_vmm(garr, sum, cfg.quant, noise_std, noise_rng,
                                &s) *
                     alpha)
                        .transpose();
      clamped += s.clamped;
      ++reads;
    }
  } else if (noise_std == 0.0 || noise_rng == nullptr) {
    // Clean reads: one per source, reused by every receiver (bitwise equal
    // to reading per edge).
    Eigen::VectorXd msg(h);
    for (int k = 0; k < n; ++k) {
      if (nbr[static_cast<std::size_t>(k)].empty()) continue;
      const Eigen::VectorXd codes =
          quantize_to_codes(states.row(k).transpose(), cfg.quant, &clamped);
      msg.noalias() = (garr.conductance() * codes) * (scale * alpha);
      for (int j : nbr[static_cast<std::size_t>(k)]) {
        agg.row(j) += msg.transpose();
        ++reads;
      }
    }
  } else {
    // Noisy reads per edge. Per source and bit plane the clean current and
    // its noise variance are matvecs; each edge then draws its own
    // Gaussian per row with std sigma*sqrt(sum_j (G_ij b_j v)^2).
    const int m = cfg.quant.m_bits;
    Eigen::MatrixXd clean(h, m);
    Eigen::MatrixXd noise_sd(h, m);
    Eigen::VectorXd mask(h);
    Eigen::VectorXd edge_sum(h);
    std::vector<bool> plane_active(static_cast<std::size_t>(m));
    for (int k = 0; k < n; ++k) {
      if (nbr[static_cast<std::size_t>(k)].empty()) continue;
      const Eigen::VectorXd codes =
          quantize_to_codes(states.row(k).transpose(), cfg.quant, &clamped);
      for (int p = 0; p < m; ++p) {
        bool any = false;
        for (int i = 0; i < h; ++i) {
          const bool bit =
              (static_cast<std::uint64_t>(codes[i]) >> p) & 1ULL;
          mask[i] = bit ? 1.0 : 0.0;
          any |= bit;
        }
        plane_active[static_cast<std::size_t>(p)] = any;
        if (!any) continue;
        clean.col(p).noalias() = garr.conductance() * mask;
        noise_sd.col(p) =
            ((garr.conductance_sq() * mask).array() *
             (noise_std * noise_std))
                .sqrt();
      }
      for (int j : nbr[static_cast<std::size_t>(k)]) {
        edge_sum.setZero();
        for (int p = 0; p < m; ++p) {
          if (!plane_active[static_cast<std::size_t>(p)]) continue;
          const double w = static_cast<double>(1u << p);
          for (int i = 0; i < h; ++i) {
            edge_sum[i] +=
                w * (clean(i, p) + noise_sd(i, p) * noise_rng->next_gaussian());
          }
        }
        agg.row(j) += edge_sum.transpose() * (scale * alpha);
        ++reads;
      }
    }
  }

  if (stats) {
    stats->clamped += clamped;
    stats->mac_count += reads * static_cast<std::uint64_t>(h) *
                        static_cast<std::uint64_t>(h);
  }
  if (ops) {
    ops->recursion += 2ull * reads * static_cast<std::uint64_t>(h) *
                      static_cast<std::uint64_t>(h);
    ops->pooling_activation +=
        4ull * static_cast<std::uint64_t>(h) * static_cast<std::uint64_t>(n);
  }

  const double a = cfg.leak;
  Eigen::MatrixXd next(n, h);
  next = a * states + (1.0 - a) * agg.array().tanh().matrix();
  return next;
}

}  // namespace

NodeStates esgnn_step(const EsgnnModel& model, const GraphData& g,
                      const NodeStates& states, const Eigen::MatrixXd& u,
                      Rng* noise_rng, OpCounter* ops, VmmStats* stats) {
  if (states.values.rows() != g.num_nodes ||
      states.values.cols() != model.config().hidden_dim)
    throw ShapeError("esgnn_step: state shape mismatch");
  if (u.rows() != g.num_nodes || u.cols() != model.config().hidden_dim)
    throw ShapeError("esgnn_step: projection shape mismatch");
  if (states.step >= model.config().steps)
    throw ConfigError("esgnn_step: step index " + std::to_string(states.step) +
                      " is not below T = " +
                      std::to_string(model.config().steps));
  NodeStates next;
  next.values = step_states(model, g, neighbor_lists(g), states.values, u,
                            noise_rng, ops, stats);
  next.step = states.step + 1;
  return next;
}

namespace {

Eigen::MatrixXd run_embedding(const EsgnnModel& model, const GraphData& g,
                              const EmbedOptions& opts) {
  const auto& cfg = model.config();
  const Eigen::MatrixXd u = input_projection(model, g, opts);
  const auto nbr = neighbor_lists(g);
  Eigen::MatrixXd states =
      Eigen::MatrixXd::Zero(g.num_nodes, cfg.hidden_dim);
  if (opts.trajectory) {
    opts.trajectory->clear();
    opts.trajectory->push_back(states);
  }
  Rng noise_rng(derive_seed(opts.noise_seed, "recursion"));
  Rng* rng_ptr =
      (opts.noise && model.read_noise_std() > 0.0) ? &noise_rng : nullptr;
  for (int t = 0; t < cfg.steps; ++t) {
    states = step_states(model, g, nbr, states, u, rng_ptr, opts.ops,
                         opts.vmm_stats);
    if (opts.trajectory) opts.trajectory->push_back(states);
  }
  return states;
}

}  // namespace

Eigen::VectorXd embed_graph(const EsgnnModel& model, const GraphData& g,
                            const EmbedOptions& opts) {
  const Eigen::MatrixXd states = run_embedding(model, g, opts);
  if (opts.ops)
    opts.ops->pooling_activation +=
        static_cast<std::uint64_t>(model.config().hidden_dim) *
        static_cast<std::uint64_t>(g.num_nodes);
  // fixed ascending reduction order
  Eigen::VectorXd pooled = Eigen::VectorXd::Zero(model.config().hidden_dim);
  for (int j = 0; j < g.num_nodes; ++j) pooled += states.row(j).transpose();
  return pooled;
}

Eigen::MatrixXd embed_nodes(const EsgnnModel& model, const GraphData& g,
                            const EmbedOptions& opts) {
  return run_embedding(model, g, opts);
}

}  // namespace esgnn

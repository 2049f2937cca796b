#include "esgnn/op_counting.hpp"

#include <cmath>

#include "esgnn/embedding.hpp"
#include "esgnn/errors.hpp"
#include "esgnn/graph_data.hpp"
#include "json.hpp"

namespace esgnn {

using nlohmann::json;

ReadoutKind readout_kind_from_string(const std::string& s) {
  if (s == "linear") return ReadoutKind::linear;
  if (s == "graph_conv") return ReadoutKind::graph_conv;
  throw ConfigError("unknown readout kind '" + s + "'");
}

std::string to_string(ReadoutKind k) {
  return k == ReadoutKind::linear ? "linear" : "graph_conv";
}

OpCounter count_ops(const Dataset& dataset, const EsgnnConfig& config,
                    ReadoutKind readout, int num_classes) {
  const auto h = static_cast<std::uint64_t>(config.hidden_dim);
  const auto u1 = static_cast<std::uint64_t>(dataset.feature_dim);
  const auto t = static_cast<std::uint64_t>(config.steps);
  const auto sum_n = static_cast<std::uint64_t>(dataset.total_nodes());
  const auto messages =
      static_cast<std::uint64_t>(dataset.total_directed_messages());
  const auto c = static_cast<std::uint64_t>(num_classes);
  const auto graphs = static_cast<std::uint64_t>(dataset.graphs.size());

  OpCounter ops;
  ops.input_projection = 2 * h * u1 * sum_n;
  ops.recursion = 2 * h * h * messages * t;
  ops.pooling_activation = 4 * h * sum_n * t;
  if (readout == ReadoutKind::linear) {
    ops.pooling_activation += h * sum_n;  // sum pooling adds
    ops.readout_inference = 2 * (h + 1) * c * graphs;
  } else {
    ops.readout_inference = 2 * (h * c * sum_n + c * (messages + sum_n));
  }
  return ops;
}

OpCounter count_training_ops(const Dataset& dataset, const EsgnnConfig& config,
                             ReadoutKind readout, int num_classes,
                             int epochs) {
  const auto h1 = static_cast<std::uint64_t>(config.hidden_dim) + 1;
  const auto c = static_cast<std::uint64_t>(num_classes);
  const auto n = static_cast<std::uint64_t>(dataset.graphs.size());
  OpCounter ops;
  if (readout == ReadoutKind::linear) {
    // normal equations + solve + right-hand sides
    const double solve = 2.0 / 3.0 * static_cast<double>(h1 * h1 * h1);
    ops.readout_training = 2 * n * h1 * h1 +
                           static_cast<std::uint64_t>(std::llround(solve)) +
                           2 * n * h1 * c;
  } else {
    const OpCounter inference =
        count_ops(dataset, config, ReadoutKind::graph_conv, num_classes);
    ops.readout_training = static_cast<std::uint64_t>(epochs) * 3ull *
                           inference.readout_inference;
  }
  return ops;
}

void EnergyModel::validate() const {
  if (!(e_digital_per_op > 0.0) || !(e_analog_per_op > 0.0))
    throw ConfigError("EnergyModel: per-op energies must be > 0");
}

EnergyReport energy_report(const OpCounter& counter, const EnergyModel& model) {
  model.validate();
  const auto row = [&](const std::string& stage, std::uint64_t ops,
                       bool on_crossbar) {
    EnergyStageRow r;
    r.stage = stage;
    r.ops = ops;
    r.on_crossbar = on_crossbar;
    r.digital_energy_j = static_cast<double>(ops) * model.e_digital_per_op;
    r.analog_energy_j = static_cast<double>(ops) *
                        (on_crossbar ? model.e_analog_per_op
                                     : model.e_digital_per_op);
    return r;
  };
  EnergyReport report;
  report.breakdown = {
      row("input_projection", counter.input_projection, true),
      row("recursion", counter.recursion, true),
      row("pooling_activation", counter.pooling_activation, false),
      row("readout_inference", counter.readout_inference, false),
      row("readout_training", counter.readout_training, false),
  };
  for (const auto& r : report.breakdown) {
    const bool forward = r.stage != "readout_training" &&
                         r.stage != "pooling_activation";
    if (forward) report.digital_forward_j += r.digital_energy_j;
    if (r.on_crossbar) report.analog_forward_j += r.analog_energy_j;
  }
  report.analog_system_forward_j =
      report.analog_forward_j +
      static_cast<double>(counter.readout_inference) * model.e_digital_per_op;
  report.efficiency_ratio =
      report.analog_forward_j > 0.0
          ? report.digital_forward_j / report.analog_forward_j
          : 0.0;
  report.note =
      "per-op energies are calibration constants back-solved from reported "
      "totals; the ratio is a self-consistency check, not a measurement";
  return report;
}

std::string EnergyReport::to_json() const {
  json doc;
  json rows = json::array();
  for (const auto& r : breakdown) {
    rows.push_back({{"stage", r.stage},
                    {"ops", r.ops},
                    {"digital_energy_J", r.digital_energy_j},
                    {"analog_energy_J", r.analog_energy_j},
                    {"on_crossbar", r.on_crossbar}});
  }
  doc["breakdown"] = std::move(rows);
  doc["digital_forward_J"] = digital_forward_j;
  doc["analog_forward_J"] = analog_forward_j;
  doc["analog_system_forward_J"] = analog_system_forward_j;
  doc["efficiency_ratio"] = efficiency_ratio;
  doc["note"] = note;
  return doc.dump(2);
}

}  // namespace esgnn

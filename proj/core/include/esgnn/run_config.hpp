#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "esgnn/device.hpp"
#include "esgnn/embedding.hpp"
#include "esgnn/evaluation.hpp"
#include "esgnn/graph_data.hpp"
#include "esgnn/op_counting.hpp"
#include "esgnn/projection.hpp"
#include "esgnn/readout.hpp"

namespace esgnn {

struct DatasetSpec {
  std::string kind;  // "tudataset" | "cora"
  std::string name;
  std::filesystem::path dir;           // tudataset root
  std::filesystem::path content_path;  // cora
  std::filesystem::path cites_path;
  FeatureRecipe recipe = FeatureRecipe::raw;
  int subsample_k = 0;  // 0 -> whole dataset
  std::uint64_t subsample_seed = 0;
};

// One experiment, fully pinned: every seed explicit, every path resolved
// at validation time. Serialized as a versioned JSON document.
struct RunConfig {
  int version = 1;
  std::string name;
  DatasetSpec dataset;
  DeviceModel device;
  EsgnnConfig esgnn;
  ReadoutKind readout = ReadoutKind::linear;
  double ridge = 1e-6;
  GraphConvHyperparams graphconv;
  int folds = 10;
  int trials = 10;
  std::uint64_t seed = 1;
  bool noise = true;
  double train_frac = 0.6;
  double val_frac = 0.2;
  ProjectionMethod projection = ProjectionMethod::pca;
  EnergyModel energy;
  std::filesystem::path output_dir = "out";
  int jobs = 1;
  bool allow_unstable = false;

  void validate_paths() const;  // throws ConfigError on missing inputs
};

// Parses a config JSON document. "${ESGNN_DATA_DIR}" in path values is
// substituted from the environment; when a dataset path does not exist and
// ESGNN_DATA_DIR is set, the path is retried under that root.
RunConfig load_run_config(const std::filesystem::path& path);
RunConfig parse_run_config(const std::string& json_text,
                           const std::filesystem::path& base_dir);

// Resolved round-trip form embedded into reports; parseable by
// parse_run_config so a report reproduces its own run.
std::string run_config_to_json(const RunConfig& config);

// Loads + feature-builds + optionally subsamples the configured dataset.
Dataset load_dataset(const RunConfig& config);

// Input files and their content hashes, for report stamping.
std::vector<std::pair<std::string, std::string>> dataset_input_hashes(
    const RunConfig& config);

ModelFactory make_model_factory(const RunConfig& config, int feature_dim);

}  // namespace esgnn

#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace esgnn {

// One graph in canonical form: undirected edges stored once as (min,max)
// pairs in ascending order (self-loops allowed when present in the source),
// features per node with a trailing bias element fixed at 1.0.
struct GraphData {
  int num_nodes = 0;
  std::vector<std::pair<int, int>> edges;
  Eigen::MatrixXd features;       // num_nodes x (u+1)
  std::vector<int> node_labels;   // empty when absent
  int graph_label = -1;           // -1 when absent

  // Directed message endpoints: every non-self edge counts twice, a
  // self-loop once (the node is its own neighbor exactly once).
  std::int64_t directed_messages() const;
  int max_degree() const;
  void validate() const;
};

// Ascending neighbor lists; the fixed reduction order for Eq-style sums.
std::vector<std::vector<int>> neighbor_lists(const GraphData& g);

struct Dataset {
  std::string name;
  int num_classes = 0;
  int feature_dim = 0;  // u+1
  std::vector<GraphData> graphs;
  // class index -> original label text, in mapping order (recorded in
  // reports so label remapping is reproducible)
  std::vector<std::string> class_names;

  std::int64_t total_nodes() const;
  std::int64_t total_directed_messages() const;
  std::vector<int> graph_labels() const;
  void validate() const;
};

// TUDataset text layout: <name>_A.txt (1-based global edge pairs),
// <name>_graph_indicator.txt, <name>_graph_labels.txt and optionally
// <name>_node_labels.txt. Graph labels are remapped to contiguous 0-based
// indices by ascending numeric value.
Dataset parse_tudataset(const std::filesystem::path& dir,
                        const std::string& name);

// CORA layout: content lines "<id> <1433 binary values> <class name>",
// cites lines "<cited> <citing>". Class names map to indices in first-
// appearance order. Returns a single graph; feature length 1434 incl bias.
GraphData parse_cora(const std::filesystem::path& content_path,
                     const std::filesystem::path& cites_path,
                     std::vector<std::string>* class_names = nullptr);
Dataset cora_dataset(const std::filesystem::path& content_path,
                     const std::filesystem::path& cites_path);

enum class FeatureRecipe { one_hot_node_label, constant_unit, raw };

FeatureRecipe feature_recipe_from_string(const std::string& s);
std::string to_string(FeatureRecipe r);

// Rebuilds per-node features: one_hot_node_label -> one-hot over the
// dataset's distinct node labels + bias; constant_unit -> (1, 1); raw ->
// keep parsed features.
Dataset build_features(const Dataset& dataset, FeatureRecipe recipe);

// Uniform subset without replacement, deterministic per seed.
Dataset subsample(const Dataset& dataset, int k, std::uint64_t seed);

// Canonical JSON document (schema_version 1) round-trip.
std::string dataset_to_json(const Dataset& dataset);
Dataset dataset_from_json(const std::string& text);

}  // namespace esgnn

#include "esgnn/graph_data.hpp"

#include <algorithm>
#include <charconv>
#include <map>
#include <set>
#include <unordered_map>

#include "esgnn/errors.hpp"
#include "esgnn/matrix_io.hpp"
#include "esgnn/rng.hpp"
#include "json.hpp"

namespace esgnn {

using nlohmann::json;

namespace {

// Line-oriented cursor over a whole file kept in memory; keeps file+line
// context for parse errors.
class LineReader {
 public:
  LineReader(const std::filesystem::path& path)
      : path_(path.string()), text_(read_text_file(path)) {}

  bool next(std::string_view& line) {
    while (pos_ < text_.size()) {
      std::size_t eol = text_.find('\n', pos_);
      if (eol == std::string::npos) eol = text_.size();
      line = std::string_view(text_.data() + pos_, eol - pos_);
      pos_ = eol + 1;
      ++line_no_;
      if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
      if (!line.empty()) return true;
    }
    return false;
  }

  [[noreturn]] void fail(const std::string& why) const {
    throw DataError(path_ + ":" + std::to_string(line_no_) + ": " + why);
  }

  std::size_t line_no() const { return line_no_; }
  const std::string& path() const { return path_; }

 private:
  std::string path_;
  std::string text_;
  std::size_t pos_ = 0;
  std::size_t line_no_ = 0;
};

long parse_long(LineReader& r, std::string_view token) {
  long v = 0;
  const char* first = token.data();
  const char* last = token.data() + token.size();
  while (first < last && (*first == ' ' || *first == '\t')) ++first;
  while (last > first && (*(last - 1) == ' ' || *(last - 1) == '\t')) --last;
  auto [p, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || p != last)
    r.fail("malformed integer '" + std::string(token) + "'");
  return v;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    std::size_t p = s.find(sep, start);
    if (p == std::string_view::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, p - start));
    start = p + 1;
  }
}

void canonicalize_edges(std::vector<std::pair<int, int>>& edges) {
  for (auto& e : edges)
    if (e.first > e.second) std::swap(e.first, e.second);
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
}

void append_bias_column(Eigen::MatrixXd& features) {
  features.conservativeResize(Eigen::NoChange, features.cols() + 1);
  features.col(features.cols() - 1).setOnes();
}

}  // namespace

std::int64_t GraphData::directed_messages() const {
  std::int64_t m = 0;
  for (const auto& e : edges) m += (e.first == e.second) ? 1 : 2;
  return m;
}

int GraphData::max_degree() const {
  std::vector<int> deg(static_cast<std::size_t>(num_nodes), 0);
  for (const auto& e : edges) {
    if (e.first == e.second) {
      ++deg[static_cast<std::size_t>(e.first)];
    } else {
      ++deg[static_cast<std::size_t>(e.first)];
      ++deg[static_cast<std::size_t>(e.second)];
    }
  }
  return deg.empty() ? 0 : *std::max_element(deg.begin(), deg.end());
}

void GraphData::validate() const {
  if (num_nodes < 1) throw DataError("GraphData: no nodes");
  for (const auto& e : edges) {
    if (e.first < 0 || e.second < 0 || e.first >= num_nodes ||
        e.second >= num_nodes)
      throw DataError("GraphData: edge endpoint out of range");
    if (e.first > e.second) throw DataError("GraphData: non-canonical edge");
  }
  if (features.rows() != num_nodes)
    throw DataError("GraphData: feature rows != num_nodes");
  for (Eigen::Index j = 0; j < features.rows(); ++j)
    if (features(j, features.cols() - 1) != 1.0)
      throw DataError("GraphData: feature vector missing unit bias");
}

std::vector<std::vector<int>> neighbor_lists(const GraphData& g) {
  std::vector<std::vector<int>> nbr(static_cast<std::size_t>(g.num_nodes));
  for (const auto& e : g.edges) {
    if (e.first == e.second) {
      nbr[static_cast<std::size_t>(e.first)].push_back(e.first);
    } else {
      nbr[static_cast<std::size_t>(e.first)].push_back(e.second);
      nbr[static_cast<std::size_t>(e.second)].push_back(e.first);
    }
  }
  for (auto& lst : nbr) std::sort(lst.begin(), lst.end());
  return nbr;
}

std::int64_t Dataset::total_nodes() const {
  std::int64_t n = 0;
  for (const auto& g : graphs) n += g.num_nodes;
  return n;
}

std::int64_t Dataset::total_directed_messages() const {
  std::int64_t m = 0;
  for (const auto& g : graphs) m += g.directed_messages();
  return m;
}

std::vector<int> Dataset::graph_labels() const {
  std::vector<int> labels;
  labels.reserve(graphs.size());
  for (const auto& g : graphs) labels.push_back(g.graph_label);
  return labels;
}

void Dataset::validate() const {
  for (const auto& g : graphs) {
    g.validate();
    if (g.features.cols() != feature_dim)
      throw DataError("Dataset: inconsistent feature_dim");
    if (g.graph_label >= num_classes)
      throw DataError("Dataset: graph label out of range");
    for (int lbl : g.node_labels)
      if (lbl < 0) throw DataError("Dataset: negative node label");
  }
}

Dataset parse_tudataset(const std::filesystem::path& dir,
                        const std::string& name) {
  const auto a_path = dir / (name + "_A.txt");
  const auto indicator_path = dir / (name + "_graph_indicator.txt");
  const auto graph_labels_path = dir / (name + "_graph_labels.txt");
  const auto node_labels_path = dir / (name + "_node_labels.txt");
  for (const auto& p : {a_path, indicator_path, graph_labels_path})
    if (!std::filesystem::exists(p))
      throw DataError("parse_tudataset: missing file " + p.string());

  // node -> graph membership (1-based ids in the file)
  std::vector<int> node_graph;  // 0-based graph index per 0-based global node
  {
    LineReader r(indicator_path);
    std::string_view line;
    while (r.next(line)) {
      const long gid = parse_long(r, line);
      if (gid < 1) r.fail("graph id must be >= 1");
      node_graph.push_back(static_cast<int>(gid - 1));
    }
  }
  const int total_nodes = static_cast<int>(node_graph.size());
  if (total_nodes == 0)
    throw DataError("parse_tudataset: empty graph_indicator file");

  std::vector<long> raw_graph_labels;
  {
    LineReader r(graph_labels_path);
    std::string_view line;
    while (r.next(line)) raw_graph_labels.push_back(parse_long(r, line));
  }
  const int num_graphs = static_cast<int>(raw_graph_labels.size());
  for (std::size_t i = 0; i < node_graph.size(); ++i)
    if (node_graph[i] >= num_graphs)
      throw DataError(indicator_path.string() + ":" + std::to_string(i + 1) +
                      ": node references nonexistent graph " +
                      std::to_string(node_graph[i] + 1));

  // TU convention: nodes of one graph occupy a contiguous 1-based range.
  std::vector<int> first_node(static_cast<std::size_t>(num_graphs), -1);
  std::vector<int> node_count(static_cast<std::size_t>(num_graphs), 0);
  for (int v = 0; v < total_nodes; ++v) {
    const int g = node_graph[static_cast<std::size_t>(v)];
    if (first_node[static_cast<std::size_t>(g)] < 0)
      first_node[static_cast<std::size_t>(g)] = v;
    ++node_count[static_cast<std::size_t>(g)];
  }
  for (int g = 0; g < num_graphs; ++g)
    if (node_count[static_cast<std::size_t>(g)] == 0)
      throw DataError("parse_tudataset: graph " + std::to_string(g + 1) +
                      " has no nodes");

  std::vector<int> node_labels;
  if (std::filesystem::exists(node_labels_path)) {
    LineReader r(node_labels_path);
    std::string_view line;
    while (r.next(line)) {
      // some TU files carry "attr, label" style lines; the label is the
      // last comma-separated field
      const auto fields = split(line, ',');
      node_labels.push_back(static_cast<int>(parse_long(r, fields.back())));
    }
    if (static_cast<int>(node_labels.size()) != total_nodes)
      throw DataError("parse_tudataset: node_labels line count " +
                      std::to_string(node_labels.size()) +
                      " != node count " + std::to_string(total_nodes));
  }

  // label remap: ascending numeric value -> contiguous 0-based
  std::map<long, int> label_map;
  for (long l : raw_graph_labels) label_map.emplace(l, 0);
  {
    int next = 0;
    for (auto& kv : label_map) kv.second = next++;
  }

  Dataset ds;
  ds.name = name;
  ds.num_classes = static_cast<int>(label_map.size());
  ds.graphs.resize(static_cast<std::size_t>(num_graphs));
  for (int g = 0; g < num_graphs; ++g) {
    auto& graph = ds.graphs[static_cast<std::size_t>(g)];
    graph.num_nodes = node_count[static_cast<std::size_t>(g)];
    graph.graph_label =
        label_map.at(raw_graph_labels[static_cast<std::size_t>(g)]);
    if (!node_labels.empty()) {
      graph.node_labels.resize(static_cast<std::size_t>(graph.num_nodes));
      for (int j = 0; j < graph.num_nodes; ++j)
        graph.node_labels[static_cast<std::size_t>(j)] =
            node_labels[static_cast<std::size_t>(
                first_node[static_cast<std::size_t>(g)] + j)];
    }
  }
  for (auto& kv : label_map)
    ds.class_names.push_back(std::to_string(kv.first));

  // edges
  {
    LineReader r(a_path);
    std::string_view line;
    while (r.next(line)) {
      const auto fields = split(line, ',');
      if (fields.size() != 2) r.fail("expected 'i, j'");
      const long a = parse_long(r, fields[0]);
      const long b = parse_long(r, fields[1]);
      if (a < 1 || a > total_nodes || b < 1 || b > total_nodes)
        r.fail("node id out of range");
      const int ga = node_graph[static_cast<std::size_t>(a - 1)];
      const int gb = node_graph[static_cast<std::size_t>(b - 1)];
      if (ga != gb) r.fail("edge spans two graphs");
      const int base = first_node[static_cast<std::size_t>(ga)];
      ds.graphs[static_cast<std::size_t>(ga)].edges.emplace_back(
          static_cast<int>(a - 1 - base), static_cast<int>(b - 1 - base));
    }
  }
  for (auto& graph : ds.graphs) canonicalize_edges(graph.edges);

  // placeholder features (bias only) until a recipe is applied
  for (auto& graph : ds.graphs)
    graph.features = Eigen::MatrixXd::Ones(graph.num_nodes, 1);
  ds.feature_dim = 1;
  return ds;
}

GraphData parse_cora(const std::filesystem::path& content_path,
                     const std::filesystem::path& cites_path,
                     std::vector<std::string>* class_names) {
  GraphData g;
  std::unordered_map<std::string, int> id_index;
  std::vector<std::vector<double>> feature_rows;
  std::vector<int> labels;
  std::vector<std::string> classes;
  std::unordered_map<std::string, int> class_index;
  std::size_t feature_count = 0;
  {
    LineReader r(content_path);
    std::string_view line;
    while (r.next(line)) {
      auto fields = split(line, '\t');
      if (fields.size() == 1) fields = split(line, ' ');
      if (fields.size() < 3) r.fail("expected '<id> <features...> <class>'");
      if (feature_count == 0) {
        feature_count = fields.size() - 2;
      } else if (fields.size() - 2 != feature_count) {
        r.fail("expected " + std::to_string(feature_count) +
               " feature values, got " + std::to_string(fields.size() - 2));
      }
      const std::string id(fields.front());
      if (!id_index.emplace(id, static_cast<int>(feature_rows.size())).second)
        r.fail("duplicate node id '" + id + "'");
      std::vector<double> row;
      row.reserve(feature_count + 1);
      for (std::size_t j = 1; j + 1 < fields.size(); ++j)
        row.push_back(static_cast<double>(parse_long(r, fields[j])));
      row.push_back(1.0);  // bias
      feature_rows.push_back(std::move(row));
      const std::string cls(fields.back());
      auto [it, inserted] =
          class_index.emplace(cls, static_cast<int>(classes.size()));
      if (inserted) classes.push_back(cls);
      labels.push_back(it->second);
    }
  }
  if (feature_rows.empty())
    throw DataError("parse_cora: empty content file " + content_path.string());

  g.num_nodes = static_cast<int>(feature_rows.size());
  g.features.resize(g.num_nodes, static_cast<Eigen::Index>(feature_count + 1));
  for (int i = 0; i < g.num_nodes; ++i)
    for (std::size_t j = 0; j <= feature_count; ++j)
      g.features(i, static_cast<Eigen::Index>(j)) =
          feature_rows[static_cast<std::size_t>(i)][j];
  g.node_labels = std::move(labels);

  {
    LineReader r(cites_path);
    std::string_view line;
    while (r.next(line)) {
      auto fields = split(line, '\t');
      if (fields.size() == 1) fields = split(line, ' ');
      if (fields.size() != 2) r.fail("expected '<cited> <citing>'");
      const auto a = id_index.find(std::string(fields[0]));
      const auto b = id_index.find(std::string(fields[1]));
      if (a == id_index.end())
        r.fail("unknown node id '" + std::string(fields[0]) + "'");
      if (b == id_index.end())
        r.fail("unknown node id '" + std::string(fields[1]) + "'");
      g.edges.emplace_back(a->second, b->second);
    }
  }
  canonicalize_edges(g.edges);
  if (class_names) *class_names = classes;
  return g;
}

Dataset cora_dataset(const std::filesystem::path& content_path,
                     const std::filesystem::path& cites_path) {
  Dataset ds;
  ds.name = "CORA";
  GraphData g = parse_cora(content_path, cites_path, &ds.class_names);
  ds.num_classes = static_cast<int>(ds.class_names.size());
  ds.feature_dim = static_cast<int>(g.features.cols());
  ds.graphs.push_back(std::move(g));
  return ds;
}

FeatureRecipe feature_recipe_from_string(const std::string& s) {
  if (s == "one_hot_node_label") return FeatureRecipe::one_hot_node_label;
  if (s == "constant_unit") return FeatureRecipe::constant_unit;
  if (s == "raw") return FeatureRecipe::raw;
  throw ConfigError("unknown feature recipe '" + s + "'");
}

std::string to_string(FeatureRecipe r) {
  switch (r) {
    case FeatureRecipe::one_hot_node_label:
      return "one_hot_node_label";
    case FeatureRecipe::constant_unit:
      return "constant_unit";
    case FeatureRecipe::raw:
      return "raw";
  }
  return "?";
}

Dataset build_features(const Dataset& dataset, FeatureRecipe recipe) {
  Dataset out = dataset;
  switch (recipe) {
    case FeatureRecipe::raw:
      return out;
    case FeatureRecipe::constant_unit: {
      for (auto& g : out.graphs) {
        g.features = Eigen::MatrixXd::Ones(g.num_nodes, 2);
      }
      out.feature_dim = 2;
      return out;
    }
    case FeatureRecipe::one_hot_node_label: {
      std::set<int> values;
      for (const auto& g : out.graphs) {
        if (g.node_labels.empty())
          throw ConfigError(
              "build_features: one_hot_node_label requires node labels");
        values.insert(g.node_labels.begin(), g.node_labels.end());
      }
      std::map<int, int> slot;
      int next = 0;
      for (int v : values) slot[v] = next++;
      const int u = static_cast<int>(values.size());
      for (auto& g : out.graphs) {
        g.features = Eigen::MatrixXd::Zero(g.num_nodes, u + 1);
        for (int j = 0; j < g.num_nodes; ++j) {
          g.features(j, slot.at(g.node_labels[static_cast<std::size_t>(j)])) =
              1.0;
          g.features(j, u) = 1.0;
        }
      }
      out.feature_dim = u + 1;
      return out;
    }
  }
  throw ConfigError("build_features: bad recipe");
}

Dataset subsample(const Dataset& dataset, int k, std::uint64_t seed) {
  const int n = static_cast<int>(dataset.graphs.size());
  if (k > n)
    throw ConfigError("subsample: k=" + std::to_string(k) +
                      " exceeds dataset size " + std::to_string(n));
  if (k < 0) throw ConfigError("subsample: k must be >= 0");
  // partial Fisher-Yates over the index vector
  std::vector<int> idx(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
  Rng rng(derive_seed(seed, "subsample"));
  for (int i = 0; i < k; ++i) {
    const auto j =
        i + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(n - i)));
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
  }
  Dataset out;
  out.name = dataset.name;
  out.num_classes = dataset.num_classes;
  out.feature_dim = dataset.feature_dim;
  out.class_names = dataset.class_names;
  out.graphs.reserve(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i)
    out.graphs.push_back(dataset.graphs[static_cast<std::size_t>(idx[i])]);
  return out;
}

std::string dataset_to_json(const Dataset& dataset) {
  json doc;
  doc["schema_version"] = 1;
  doc["name"] = dataset.name;
  doc["num_classes"] = dataset.num_classes;
  doc["feature_dim"] = dataset.feature_dim;
  doc["class_names"] = dataset.class_names;
  json graphs = json::array();
  for (const auto& g : dataset.graphs) {
    json jg;
    jg["num_nodes"] = g.num_nodes;
    json edges = json::array();
    for (const auto& e : g.edges) edges.push_back({e.first, e.second});
    jg["edges"] = std::move(edges);
    if (g.graph_label >= 0) jg["graph_label"] = g.graph_label;
    if (!g.node_labels.empty()) jg["node_labels"] = g.node_labels;
    json features = json::array();
    for (Eigen::Index i = 0; i < g.features.rows(); ++i) {
      json row = json::array();
      for (Eigen::Index j = 0; j < g.features.cols(); ++j)
        row.push_back(g.features(i, j));
      features.push_back(std::move(row));
    }
    jg["features"] = std::move(features);
    graphs.push_back(std::move(jg));
  }
  doc["graphs"] = std::move(graphs);
  return doc.dump();
}

Dataset dataset_from_json(const std::string& text) {
  json doc = json::parse(text);
  if (doc.value("schema_version", 0) != 1)
    throw DataError("dataset_from_json: unsupported schema_version");
  Dataset ds;
  ds.name = doc.value("name", "");
  ds.num_classes = doc.value("num_classes", 0);
  ds.feature_dim = doc.value("feature_dim", 0);
  ds.class_names =
      doc.value("class_names", std::vector<std::string>{});
  for (const auto& jg : doc.at("graphs")) {
    GraphData g;
    g.num_nodes = jg.at("num_nodes").get<int>();
    for (const auto& e : jg.at("edges"))
      g.edges.emplace_back(e.at(0).get<int>(), e.at(1).get<int>());
    g.graph_label = jg.value("graph_label", -1);
    g.node_labels = jg.value("node_labels", std::vector<int>{});
    const auto& features = jg.at("features");
    const auto rows = static_cast<Eigen::Index>(features.size());
    const auto cols =
        rows > 0 ? static_cast<Eigen::Index>(features.at(0).size()) : 0;
    g.features.resize(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
      for (Eigen::Index j = 0; j < cols; ++j)
        g.features(i, j) = features.at(static_cast<std::size_t>(i))
                               .at(static_cast<std::size_t>(j))
                               .get<double>();
    canonicalize_edges(g.edges);
    ds.graphs.push_back(std::move(g));
  }
  ds.validate();
  return ds;
}

}  // namespace esgnn

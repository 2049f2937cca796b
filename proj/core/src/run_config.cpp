#include "esgnn/run_config.hpp"

#include <cstdlib>

#include "esgnn/errors.hpp"
#include "esgnn/matrix_io.hpp"
#include "json.hpp"

namespace esgnn {

using nlohmann::json;

namespace {

std::string substitute_data_dir(std::string s) {
  const char* data_dir = std::getenv("ESGNN_DATA_DIR");
  const std::string token = "${ESGNN_DATA_DIR}";
  std::size_t pos;
  while ((pos = s.find(token)) != std::string::npos) {
    if (!data_dir)
      throw ConfigError(
          "config path references ${ESGNN_DATA_DIR} but the variable is not "
          "set");
    s.replace(pos, token.size(), data_dir);
  }
  return s;
}

// Missing paths fall back to ESGNN_DATA_DIR/<filename or name>.
std::filesystem::path resolve_path(const std::string& raw,
                                   const std::filesystem::path& base_dir) {
  std::filesystem::path p = substitute_data_dir(raw);
  if (p.is_relative() && !base_dir.empty() &&
      std::filesystem::exists(base_dir / p))
    return base_dir / p;
  if (!std::filesystem::exists(p)) {
    if (const char* data_dir = std::getenv("ESGNN_DATA_DIR")) {
      const auto candidate = std::filesystem::path(data_dir) / p.filename();
      if (std::filesystem::exists(candidate)) return candidate;
    }
  }
  return p;
}

}  // namespace

void RunConfig::validate_paths() const {
  if (dataset.kind == "tudataset") {
    if (!std::filesystem::is_directory(dataset.dir))
      throw ConfigError("dataset directory not found: " +
                        dataset.dir.string() +
                        " (set ESGNN_DATA_DIR or fix the config)");
  } else if (dataset.kind == "cora") {
    for (const auto& p : {dataset.content_path, dataset.cites_path})
      if (!std::filesystem::exists(p))
        throw ConfigError("dataset file not found: " + p.string() +
                          " (set ESGNN_DATA_DIR or fix the config)");
  } else {
    throw ConfigError("unknown dataset kind '" + dataset.kind + "'");
  }
}

RunConfig parse_run_config(const std::string& json_text,
                           const std::filesystem::path& base_dir) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  RunConfig c;
  c.version = doc.value("version", 0);
  if (c.version != 1)
    throw ConfigError("unsupported config version " +
                      std::to_string(c.version));
  c.name = doc.value("name", "");

  const auto& jd = doc.at("dataset");
  c.dataset.kind = jd.value("kind", "");
  c.dataset.name = jd.value("name", "");
  if (jd.contains("dir"))
    c.dataset.dir = resolve_path(jd["dir"].get<std::string>(), base_dir);
  if (jd.contains("content"))
    c.dataset.content_path =
        resolve_path(jd["content"].get<std::string>(), base_dir);
  if (jd.contains("cites"))
    c.dataset.cites_path =
        resolve_path(jd["cites"].get<std::string>(), base_dir);
  c.dataset.recipe =
      feature_recipe_from_string(jd.value("feature_recipe", "raw"));
  if (jd.contains("subsample") && !jd["subsample"].is_null()) {
    c.dataset.subsample_k = jd["subsample"].value("k", 0);
    c.dataset.subsample_seed = jd["subsample"].value("seed", 0ull);
  }

  if (doc.contains("device")) {
    const auto& j = doc["device"];
    c.device.p_break = j.value("p_break", c.device.p_break);
    c.device.g_on_mean = j.value("g_on_mean_us", c.device.g_on_mean);
    c.device.g_on_std = j.value("g_on_std_us", c.device.g_on_std);
    c.device.g_off = j.value("g_off_us", c.device.g_off);
    c.device.read_noise_std = j.value("read_noise_std", c.device.read_noise_std);
  }
  if (doc.contains("esgnn")) {
    const auto& j = doc["esgnn"];
    c.esgnn.hidden_dim = j.value("hidden_dim", c.esgnn.hidden_dim);
    c.esgnn.steps = j.value("steps", c.esgnn.steps);
    c.esgnn.leak = j.value("leak", c.esgnn.leak);
    c.esgnn.alpha_input = j.value("alpha_input_per_us", c.esgnn.alpha_input);
    c.esgnn.alpha_recursive =
        j.value("alpha_recursive_per_us", c.esgnn.alpha_recursive);
    c.esgnn.activation =
        activation_from_string(j.value("activation", "tanh"));
    c.esgnn.fused_aggregation =
        j.value("fused_aggregation", c.esgnn.fused_aggregation);
    if (j.contains("quant")) {
      const auto& q = j["quant"];
      c.esgnn.quant.m_bits = q.value("m_bits", c.esgnn.quant.m_bits);
      c.esgnn.quant.v_read = q.value("v_read_volts", c.esgnn.quant.v_read);
      c.esgnn.quant.x_max = q.value("x_max", c.esgnn.quant.x_max);
    }
  }
  if (doc.contains("readout")) {
    const auto& j = doc["readout"];
    c.readout = readout_kind_from_string(j.value("kind", "linear"));
    c.ridge = j.value("ridge", c.ridge);
    c.graphconv.epochs = j.value("epochs", c.graphconv.epochs);
    c.graphconv.learning_rate = j.value("learning_rate", c.graphconv.learning_rate);
    c.graphconv.weight_decay = j.value("weight_decay", c.graphconv.weight_decay);
    c.graphconv.momentum = j.value("momentum", c.graphconv.momentum);
    c.graphconv.dropout = j.value("dropout", c.graphconv.dropout);
  }
  if (doc.contains("eval")) {
    const auto& j = doc["eval"];
    c.folds = j.value("folds", c.folds);
    c.trials = j.value("trials", c.trials);
    c.seed = j.value("seed", c.seed);
    c.noise = j.value("noise", c.noise);
    c.train_frac = j.value("train_frac", c.train_frac);
    c.val_frac = j.value("val_frac", c.val_frac);
    c.projection =
        projection_method_from_string(j.value("projection", "pca"));
  }
  if (doc.contains("energy")) {
    const auto& j = doc["energy"];
    c.energy.e_digital_per_op =
        j.value("e_digital_per_op_j", c.energy.e_digital_per_op);
    c.energy.e_analog_per_op =
        j.value("e_analog_per_op_j", c.energy.e_analog_per_op);
  }
  c.output_dir = doc.value("output_dir", std::string("out"));
  c.jobs = doc.value("jobs", c.jobs);
  c.allow_unstable = doc.value("allow_unstable", c.allow_unstable);

  c.device.validate();
  c.esgnn.validate();
  c.energy.validate();
  if (c.folds < 2) throw ConfigError("config: folds must be >= 2");
  if (c.trials < 1) throw ConfigError("config: trials must be >= 1");
  if (c.jobs < 1) throw ConfigError("config: jobs must be >= 1");
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  return parse_run_config(read_text_file(path), path.parent_path());
}

std::string run_config_to_json(const RunConfig& c) {
  json jd = {{"kind", c.dataset.kind},
             {"name", c.dataset.name},
             {"feature_recipe", to_string(c.dataset.recipe)}};
  if (!c.dataset.dir.empty()) jd["dir"] = c.dataset.dir.string();
  if (!c.dataset.content_path.empty())
    jd["content"] = c.dataset.content_path.string();
  if (!c.dataset.cites_path.empty())
    jd["cites"] = c.dataset.cites_path.string();
  if (c.dataset.subsample_k > 0)
    jd["subsample"] = {{"k", c.dataset.subsample_k},
                       {"seed", c.dataset.subsample_seed}};
  else
    jd["subsample"] = nullptr;

  json doc = {
      {"version", 1},
      {"name", c.name},
      {"dataset", std::move(jd)},
      {"device",
       {{"p_break", c.device.p_break},
        {"g_on_mean_us", c.device.g_on_mean},
        {"g_on_std_us", c.device.g_on_std},
        {"g_off_us", c.device.g_off},
        {"read_noise_std", c.device.read_noise_std}}},
      {"esgnn",
       {{"hidden_dim", c.esgnn.hidden_dim},
        {"steps", c.esgnn.steps},
        {"leak", c.esgnn.leak},
        {"alpha_input_per_us", c.esgnn.alpha_input},
        {"alpha_recursive_per_us", c.esgnn.alpha_recursive},
        {"activation", to_string(c.esgnn.activation)},
        {"fused_aggregation", c.esgnn.fused_aggregation},
        {"quant",
         {{"m_bits", c.esgnn.quant.m_bits},
          {"v_read_volts", c.esgnn.quant.v_read},
          {"x_max", c.esgnn.quant.x_max}}}}},
      {"readout",
       {{"kind", to_string(c.readout)},
        {"ridge", c.ridge},
        {"epochs", c.graphconv.epochs},
        {"learning_rate", c.graphconv.learning_rate},
        {"weight_decay", c.graphconv.weight_decay},
        {"momentum", c.graphconv.momentum},
        {"dropout", c.graphconv.dropout}}},
      {"eval",
       {{"folds", c.folds},
        {"trials", c.trials},
        {"seed", c.seed},
        {"noise", c.noise},
        {"train_frac", c.train_frac},
        {"val_frac", c.val_frac},
        {"projection", to_string(c.projection)}}},
      {"energy",
       {{"e_digital_per_op_j", c.energy.e_digital_per_op},
        {"e_analog_per_op_j", c.energy.e_analog_per_op}}},
      {"output_dir", c.output_dir.string()},
      {"jobs", c.jobs},
      {"allow_unstable", c.allow_unstable},
  };
  return doc.dump(2);
}

Dataset load_dataset(const RunConfig& config) {
  config.validate_paths();
  Dataset ds;
  if (config.dataset.kind == "tudataset") {
    ds = parse_tudataset(config.dataset.dir, config.dataset.name);
  } else {
    ds = cora_dataset(config.dataset.content_path, config.dataset.cites_path);
  }
  ds = build_features(ds, config.dataset.recipe);
  if (config.dataset.subsample_k > 0)
    ds = subsample(ds, config.dataset.subsample_k,
                   config.dataset.subsample_seed);
  ds.validate();
  return ds;
}

std::vector<std::pair<std::string, std::string>> dataset_input_hashes(
    const RunConfig& config) {
  std::vector<std::pair<std::string, std::string>> hashes;
  if (config.dataset.kind == "tudataset") {
    for (const auto& suffix :
         {"_A.txt", "_graph_indicator.txt", "_graph_labels.txt",
          "_node_labels.txt"}) {
      const auto p = config.dataset.dir / (config.dataset.name + suffix);
      if (std::filesystem::exists(p))
        hashes.emplace_back(p.filename().string(), file_content_hash(p));
    }
  } else {
    for (const auto& p : {config.dataset.content_path, config.dataset.cites_path})
      hashes.emplace_back(p.filename().string(), file_content_hash(p));
  }
  return hashes;
}

ModelFactory make_model_factory(const RunConfig& config, int feature_dim) {
  ModelFactory f;
  f.config = config.esgnn;
  f.device = config.device;
  f.feature_dim = feature_dim;
  f.allow_unstable = config.allow_unstable;
  return f;
}

}  // namespace esgnn

#include "esgnn/evaluation.hpp"

#include <algorithm>
#include <map>
#include <mutex>
#include <set>

#include "esgnn/errors.hpp"
#include "esgnn/parallel.hpp"
#include "esgnn/rng.hpp"
#include "json.hpp"

namespace esgnn {

using nlohmann::json;

std::vector<std::vector<int>> stratified_kfold(const std::vector<int>& labels,
                                               int k, std::uint64_t seed) {
  if (k < 2) throw ConfigError("stratified_kfold: k must be >= 2");
  if (static_cast<int>(labels.size()) < k)
    throw ConfigError("stratified_kfold: fewer samples than folds");
  std::map<int, std::vector<int>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i)
    by_class[labels[i]].push_back(static_cast<int>(i));
  std::vector<std::vector<int>> folds(static_cast<std::size_t>(k));
  Rng rng(derive_seed(seed, "stratified-kfold"));
  // shuffle within each class, deal round-robin; the fold offset rotates
  // per class so small classes do not pile onto fold 0
  int fold_cursor = 0;
  for (auto& [cls, idx] : by_class) {
    (void)cls;
    for (std::size_t i = idx.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(rng.next_below(i));
      std::swap(idx[i - 1], idx[j]);
    }
    for (std::size_t i = 0; i < idx.size(); ++i) {
      folds[static_cast<std::size_t>(fold_cursor)].push_back(idx[i]);
      fold_cursor = (fold_cursor + 1) % k;
    }
  }
  for (auto& f : folds) std::sort(f.begin(), f.end());
  return folds;
}

NodeSplit stratified_split(const std::vector<int>& labels, double train_frac,
                           double val_frac, std::uint64_t seed) {
  if (!(train_frac > 0.0) || val_frac < 0.0 || train_frac + val_frac >= 1.0)
    throw ConfigError("stratified_split: bad fractions");
  std::map<int, std::vector<int>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i)
    by_class[labels[i]].push_back(static_cast<int>(i));
  NodeSplit split;
  Rng rng(derive_seed(seed, "stratified-split"));
  for (auto& [cls, idx] : by_class) {
    (void)cls;
    for (std::size_t i = idx.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(rng.next_below(i));
      std::swap(idx[i - 1], idx[j]);
    }
    const auto n = idx.size();
    auto n_train = static_cast<std::size_t>(
        std::llround(train_frac * static_cast<double>(n)));
    auto n_val = static_cast<std::size_t>(
        std::llround(val_frac * static_cast<double>(n)));
    n_train = std::min(n_train, n);
    n_val = std::min(n_val, n - n_train);
    for (std::size_t i = 0; i < n; ++i) {
      if (i < n_train)
        split.train.push_back(idx[i]);
      else if (i < n_train + n_val)
        split.val.push_back(idx[i]);
      else
        split.test.push_back(idx[i]);
    }
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.val.begin(), split.val.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

double accuracy_from_confusion(const Eigen::MatrixXd& confusion) {
  const double total = confusion.sum();
  return total > 0.0 ? confusion.trace() / total : 0.0;
}

Eigen::MatrixXd row_normalized(const Eigen::MatrixXd& confusion) {
  Eigen::MatrixXd out = confusion;
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    const double s = out.row(i).sum();
    if (s > 0.0) out.row(i) /= s;
  }
  return out;
}

namespace {

Eigen::MatrixXd confusion_matrix(const std::vector<int>& truth,
                                 const std::vector<int>& predicted,
                                 int num_classes) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(num_classes, num_classes);
  for (std::size_t i = 0; i < truth.size(); ++i)
    m(truth[i], predicted[i]) += 1.0;
  return m;
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

json ops_to_json(const OpCounter& ops) {
  return json{{"input_projection", ops.input_projection},
              {"recursion", ops.recursion},
              {"pooling_activation", ops.pooling_activation},
              {"readout_inference", ops.readout_inference},
              {"readout_training", ops.readout_training},
              {"total", ops.total()}};
}

}  // namespace

CvReport kfold_cv(const Dataset& dataset, const ModelFactory& factory,
                  const KfoldOptions& opts) {
  dataset.validate();
  const auto labels = dataset.graph_labels();
  for (int l : labels)
    if (l < 0) throw ConfigError("kfold_cv: dataset lacks graph labels");
  const int n = static_cast<int>(dataset.graphs.size());
  const auto folds = stratified_kfold(labels, opts.folds, opts.seed);

  CvReport report;
  report.folds = opts.folds;
  report.seed = opts.seed;
  report.averaged_confusion =
      Eigen::MatrixXd::Zero(dataset.num_classes, dataset.num_classes);
  std::mutex merge_mutex;

  for (int f = 0; f < opts.folds; ++f) {
    const std::uint64_t fold_seed = derive_seed(opts.seed, "fold-array", f);
    report.fold_seeds.push_back(fold_seed);
    const EsgnnModel model = factory.make(fold_seed);

    // embed every graph through this fold's array
    Eigen::MatrixXd embeddings(n, factory.config.hidden_dim);
    OpCounter fold_ops;
    std::uint64_t fold_clamped = 0;
    const std::uint64_t noise_base = derive_seed(opts.seed, "fold-noise", f);
    parallel_for(opts.jobs, static_cast<std::size_t>(n), [&](std::size_t gi) {
      EmbedOptions eo;
      eo.noise = opts.noise;
      eo.noise_seed = derive_seed(noise_base, "graph", gi);
      OpCounter ops;
      VmmStats stats;
      eo.ops = &ops;
      eo.vmm_stats = &stats;
      const Eigen::VectorXd g = embed_graph(
          model, dataset.graphs[gi], eo);
      std::lock_guard<std::mutex> lock(merge_mutex);
      embeddings.row(static_cast<Eigen::Index>(gi)) = g.transpose();
      fold_ops += ops;
      fold_clamped += stats.clamped;
    });

    const auto& test_idx = folds[static_cast<std::size_t>(f)];
    std::vector<char> in_test(static_cast<std::size_t>(n), 0);
    for (int i : test_idx) in_test[static_cast<std::size_t>(i)] = 1;
    std::vector<int> train_idx;
    train_idx.reserve(static_cast<std::size_t>(n - (int)test_idx.size()));
    for (int i = 0; i < n; ++i)
      if (!in_test[static_cast<std::size_t>(i)]) train_idx.push_back(i);

    std::set<int> train_classes;
    for (int i : train_idx) train_classes.insert(labels[(std::size_t)i]);
    if (static_cast<int>(train_classes.size()) < dataset.num_classes)
      report.warnings.push_back("fold " + std::to_string(f) +
                                ": some class absent from the training fold");

    Eigen::MatrixXd train_embed(train_idx.size(), embeddings.cols());
    std::vector<int> train_labels(train_idx.size());
    for (std::size_t i = 0; i < train_idx.size(); ++i) {
      train_embed.row(static_cast<Eigen::Index>(i)) =
          embeddings.row(train_idx[i]);
      train_labels[i] = labels[static_cast<std::size_t>(train_idx[i])];
    }
    LinearFitInfo fit_info;
    const LinearReadout readout = fit_linear(
        train_embed, train_labels, dataset.num_classes, opts.ridge, &fit_info);
    fold_ops.readout_training += fit_info.ops;

    Eigen::MatrixXd test_embed(test_idx.size(), embeddings.cols());
    std::vector<int> test_labels(test_idx.size());
    for (std::size_t i = 0; i < test_idx.size(); ++i) {
      test_embed.row(static_cast<Eigen::Index>(i)) =
          embeddings.row(test_idx[i]);
      test_labels[i] = labels[static_cast<std::size_t>(test_idx[i])];
    }
    const std::vector<int> predicted =
        predict_linear(readout, test_embed, &fold_ops);

    const Eigen::MatrixXd confusion =
        confusion_matrix(test_labels, predicted, dataset.num_classes);
    report.fold_confusions.push_back(confusion);
    report.fold_accuracies.push_back(accuracy_from_confusion(confusion));
    report.fold_spectral_radii.push_back(model.recursive_spectral_radius());
    report.averaged_confusion += confusion;
    report.ops += fold_ops;
    report.vmm_input_clamped += fold_clamped;
  }

  report.averaged_confusion /= static_cast<double>(opts.folds);
  report.normalized_confusion = row_normalized(report.averaged_confusion);
  double acc = 0.0;
  for (double a : report.fold_accuracies) acc += a;
  report.mean_accuracy = acc / static_cast<double>(opts.folds);
  return report;
}

std::string cv_report_to_json(const CvReport& report) {
  json doc;
  doc["folds"] = report.folds;
  doc["seed"] = report.seed;
  doc["fold_seeds"] = report.fold_seeds;
  doc["fold_accuracies"] = report.fold_accuracies;
  doc["mean_accuracy"] = report.mean_accuracy;
  doc["fold_spectral_radii"] = report.fold_spectral_radii;
  json confusions = json::array();
  for (const auto& c : report.fold_confusions)
    confusions.push_back(matrix_to_json(c));
  doc["fold_confusions"] = std::move(confusions);
  doc["averaged_confusion"] = matrix_to_json(report.averaged_confusion);
  doc["normalized_confusion"] = matrix_to_json(report.normalized_confusion);
  doc["ops_instrumented"] = ops_to_json(report.ops);
  doc["vmm_input_clamped"] = report.vmm_input_clamped;
  doc["warnings"] = report.warnings;
  return doc.dump(2);
}

TrialReport repeated_trials(const Dataset& dataset,
                            const ModelFactory& factory,
                            const NodeTaskOptions& opts) {
  dataset.validate();
  if (dataset.graphs.size() != 1)
    throw ConfigError("repeated_trials: expects a single-graph dataset");
  if (opts.trials < 1) throw ConfigError("repeated_trials: trials must be >= 1");
  const GraphData& graph = dataset.graphs.front();
  if (graph.node_labels.empty())
    throw ConfigError("repeated_trials: graph lacks node labels");

  const NodeSplit split = stratified_split(
      graph.node_labels, opts.train_frac, opts.val_frac,
      derive_seed(opts.seed, "split"));

  TrialReport report;
  report.trials = opts.trials;
  report.seed = opts.seed;
  report.train_count = static_cast<int>(split.train.size());
  report.val_count = static_cast<int>(split.val.size());
  report.test_count = static_cast<int>(split.test.size());
  report.trial_accuracies.resize(static_cast<std::size_t>(opts.trials));
  report.trial_final_losses.resize(static_cast<std::size_t>(opts.trials));
  report.trial_spectral_radii.resize(static_cast<std::size_t>(opts.trials));
  report.trial_seeds.resize(static_cast<std::size_t>(opts.trials));
  std::vector<Eigen::MatrixXd> confusions(
      static_cast<std::size_t>(opts.trials));
  std::vector<OpCounter> trial_ops(static_cast<std::size_t>(opts.trials));

  parallel_for(opts.jobs, static_cast<std::size_t>(opts.trials),
               [&](std::size_t t) {
    const std::uint64_t trial_seed = derive_seed(opts.seed, "trial", t);
    report.trial_seeds[t] = trial_seed;
    const EsgnnModel model = factory.make(derive_seed(trial_seed, "array"));
    report.trial_spectral_radii[t] = model.recursive_spectral_radius();

    EmbedOptions eo;
    eo.noise = opts.noise;
    eo.noise_seed = derive_seed(trial_seed, "noise");
    OpCounter ops;
    eo.ops = &ops;
    const Eigen::MatrixXd states = embed_nodes(model, graph, eo);

    GraphConvFitInfo fit_info;
    const GraphConvReadout readout = fit_graphconv(
        states, graph, graph.node_labels, split.train, dataset.num_classes,
        opts.hp, derive_seed(trial_seed, "readout-init"), &fit_info);
    const std::vector<int> predicted =
        predict_graphconv(readout, states, graph, &ops);

    std::vector<int> test_truth, test_pred;
    test_truth.reserve(split.test.size());
    for (int i : split.test) {
      test_truth.push_back(graph.node_labels[static_cast<std::size_t>(i)]);
      test_pred.push_back(predicted[static_cast<std::size_t>(i)]);
    }
    confusions[t] =
        confusion_matrix(test_truth, test_pred, dataset.num_classes);
    report.trial_accuracies[t] = accuracy_from_confusion(confusions[t]);
    report.trial_final_losses[t] =
        fit_info.loss_history.empty() ? 0.0 : fit_info.loss_history.back();
    trial_ops[t] = ops;
  });

  report.averaged_confusion =
      Eigen::MatrixXd::Zero(dataset.num_classes, dataset.num_classes);
  for (const auto& c : confusions) report.averaged_confusion += c;
  report.averaged_confusion /= static_cast<double>(opts.trials);
  report.normalized_confusion = row_normalized(report.averaged_confusion);
  double acc = 0.0;
  for (double a : report.trial_accuracies) acc += a;
  report.mean_accuracy = acc / static_cast<double>(opts.trials);
  for (const auto& ops : trial_ops) report.ops += ops;
  return report;
}

std::string trial_report_to_json(const TrialReport& report) {
  json doc;
  doc["trials"] = report.trials;
  doc["seed"] = report.seed;
  doc["trial_seeds"] = report.trial_seeds;
  doc["trial_accuracies"] = report.trial_accuracies;
  doc["mean_accuracy"] = report.mean_accuracy;
  doc["trial_final_losses"] = report.trial_final_losses;
  doc["trial_spectral_radii"] = report.trial_spectral_radii;
  doc["averaged_confusion"] = matrix_to_json(report.averaged_confusion);
  doc["normalized_confusion"] = matrix_to_json(report.normalized_confusion);
  doc["split"] = {{"train", report.train_count},
                  {"val", report.val_count},
                  {"test", report.test_count}};
  doc["ops_instrumented"] = ops_to_json(report.ops);
  doc["warnings"] = report.warnings;
  return doc.dump(2);
}

std::vector<GridEntry> grid_search(const Dataset& dataset,
                                   const ModelFactory& base,
                                   const GridSpec& grid,
                                   const KfoldOptions& opts) {
  const auto axis = [](const std::vector<double>& v, double base_value) {
    return v.empty() ? std::vector<double>{base_value} : v;
  };
  const auto alpha_inputs = axis(grid.alpha_input, base.config.alpha_input);
  const auto alpha_recursives =
      axis(grid.alpha_recursive, base.config.alpha_recursive);
  const auto leaks = axis(grid.leak, base.config.leak);
  const auto steps = grid.steps.empty() ? std::vector<int>{base.config.steps}
                                        : grid.steps;
  if (alpha_inputs.empty() || alpha_recursives.empty())
    throw ConfigError("grid_search: empty grid");

  std::vector<GridEntry> entries;
  for (double ai : alpha_inputs)
    for (double ar : alpha_recursives)
      for (double a : leaks)
        for (int t : steps) {
          GridEntry entry;
          entry.config = base.config;
          entry.config.alpha_input = ai;
          entry.config.alpha_recursive = ar;
          entry.config.leak = a;
          entry.config.steps = t;
          entries.push_back(std::move(entry));
        }

  for (auto& entry : entries) {
    ModelFactory factory = base;
    factory.config = entry.config;
    entry.forward_ops =
        count_ops(dataset, entry.config, ReadoutKind::linear,
                  dataset.num_classes)
            .forward_total();
    try {
      const CvReport r = kfold_cv(dataset, factory, opts);
      entry.mean_accuracy = r.mean_accuracy;
      entry.fold_accuracies = r.fold_accuracies;
    } catch (const ConfigError& e) {
      entry.skipped = true;
      entry.skip_reason = e.what();
    }
  }

  std::stable_sort(entries.begin(), entries.end(),
                   [](const GridEntry& x, const GridEntry& y) {
                     if (x.skipped != y.skipped) return !x.skipped;
                     if (x.mean_accuracy != y.mean_accuracy)
                       return x.mean_accuracy > y.mean_accuracy;
                     return x.forward_ops < y.forward_ops;
                   });
  return entries;
}

std::string grid_results_to_json(const std::vector<GridEntry>& entries) {
  json arr = json::array();
  for (const auto& e : entries) {
    json je;
    je["config"] = {{"alpha_input", e.config.alpha_input},
                    {"alpha_recursive", e.config.alpha_recursive},
                    {"leak", e.config.leak},
                    {"steps", e.config.steps},
                    {"hidden_dim", e.config.hidden_dim}};
    je["skipped"] = e.skipped;
    if (e.skipped) {
      je["skip_reason"] = e.skip_reason;
    } else {
      je["mean_accuracy"] = e.mean_accuracy;
      je["fold_accuracies"] = e.fold_accuracies;
    }
    je["forward_ops"] = e.forward_ops;
    arr.push_back(std::move(je));
  }
  return arr.dump(2);
}

}  // namespace esgnn

#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "esgnn/embedding.hpp"
#include "esgnn/graph_data.hpp"
#include "esgnn/op_counting.hpp"
#include "esgnn/readout.hpp"

namespace esgnn {

// Disjoint stratified folds covering [0, labels.size()); per-fold class
// proportions stay within one sample of the global proportions.
std::vector<std::vector<int>> stratified_kfold(const std::vector<int>& labels,
                                               int k, std::uint64_t seed);

// Stratified train/val/test node split by fractions (test takes the rest).
struct NodeSplit {
  std::vector<int> train, val, test;
};
NodeSplit stratified_split(const std::vector<int>& labels, double train_frac,
                           double val_frac, std::uint64_t seed);

double accuracy_from_confusion(const Eigen::MatrixXd& confusion);
Eigen::MatrixXd row_normalized(const Eigen::MatrixXd& confusion);

struct KfoldOptions {
  int folds = 10;
  std::uint64_t seed = 0;
  double ridge = 1e-6;
  bool noise = true;
  int jobs = 1;
};

struct CvReport {
  int folds = 0;
  std::uint64_t seed = 0;
  std::vector<std::uint64_t> fold_seeds;
  std::vector<double> fold_accuracies;
  double mean_accuracy = 0.0;
  std::vector<Eigen::MatrixXd> fold_confusions;   // raw counts, true x pred
  Eigen::MatrixXd averaged_confusion;             // mean of fold counts
  Eigen::MatrixXd normalized_confusion;           // row-normalized average
  std::vector<double> fold_spectral_radii;        // rho(alpha_R G_R) per fold
  OpCounter ops;                                  // instrumented, whole run
  std::uint64_t vmm_input_clamped = 0;
  std::vector<std::string> warnings;
};

// Ten-fold style CV: per fold a fresh random array (fold seed), every graph
// embedded through it, linear readout fit on the train folds and scored on
// the held-out fold. Confusions averaged then row-normalized.
CvReport kfold_cv(const Dataset& dataset, const ModelFactory& factory,
                  const KfoldOptions& opts);

std::string cv_report_to_json(const CvReport& report);

struct NodeTaskOptions {
  int trials = 10;
  std::uint64_t seed = 0;
  double train_frac = 0.6;
  double val_frac = 0.2;
  GraphConvHyperparams hp;
  bool noise = true;
  int jobs = 1;
};

struct TrialReport {
  int trials = 0;
  std::uint64_t seed = 0;
  std::vector<std::uint64_t> trial_seeds;
  std::vector<double> trial_accuracies;  // held-out test accuracy
  double mean_accuracy = 0.0;
  std::vector<double> trial_final_losses;
  Eigen::MatrixXd averaged_confusion;
  Eigen::MatrixXd normalized_confusion;
  int train_count = 0, val_count = 0, test_count = 0;
  std::vector<double> trial_spectral_radii;
  OpCounter ops;
  std::vector<std::string> warnings;
};

// Node-classification harness: a fixed stratified split, then per trial a
// fresh random array and readout initialization.
TrialReport repeated_trials(const Dataset& dataset, const ModelFactory& factory,
                            const NodeTaskOptions& opts);

std::string trial_report_to_json(const TrialReport& report);

struct GridSpec {
  // empty axis -> keep the base value
  std::vector<double> alpha_input;
  std::vector<double> alpha_recursive;
  std::vector<double> leak;
  std::vector<int> steps;
};

struct GridEntry {
  EsgnnConfig config;
  bool skipped = false;
  std::string skip_reason;
  double mean_accuracy = 0.0;
  std::uint64_t forward_ops = 0;  // closed-form; tie-break key
  std::vector<double> fold_accuracies;
};

// Exhaustive product of the grid axes, each point scored by kfold_cv on
// the shared evaluation seed. Unstable configs (echo-state violation) are
// skipped and logged, not fatal. Result is sorted by mean accuracy with
// ties broken toward fewer forward ops.
std::vector<GridEntry> grid_search(const Dataset& dataset,
                                   const ModelFactory& base,
                                   const GridSpec& grid,
                                   const KfoldOptions& opts);

std::string grid_results_to_json(const std::vector<GridEntry>& entries);

}  // namespace esgnn

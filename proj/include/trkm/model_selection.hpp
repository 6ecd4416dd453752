#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "trkm/data_io.hpp"
#include "trkm/hyperparams.hpp"

namespace trkm {

struct SplitSpec {
  double train_fraction = 0.7;
  std::uint64_t seed = 0;
  bool stratified = true;  // classification only
};

// Seeded shuffle shared by every sampling routine; identical across platforms.
std::vector<Eigen::Index> shuffled_indices(Eigen::Index n, std::uint64_t seed);

// floor(train_fraction * n) rows go to training. In stratified mode each class
// contributes floor(fraction * n_c) rows plus a largest-remainder share of the
// leftover. Both sides keep the original row order.
std::pair<Dataset, Dataset> split(const Dataset& dataset, const SplitSpec& spec);

struct Fold {
  std::vector<Eigen::Index> train;
  std::vector<Eigen::Index> valid;
};

// k folds whose validation sets partition 0..n-1; the first n % k folds get
// one extra sample.
std::vector<Fold> kfold_indices(Eigen::Index n, int k, std::uint64_t seed);

enum class ModelKind { TrkmClassifier, TrkmRegressor, Rkm };

std::string to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& name);
Task task_of(ModelKind kind);

struct GridSpec {
  std::vector<double> gamma_values;
  std::vector<double> eta_values;
  std::vector<double> sigma_values;
  bool equal_penalties = true;  // gamma1 = gamma2 and eta1 = eta2
  int folds = 5;

  // gamma, eta in {1e-5, ..., 1e5}; sigma in {2^-5, ..., 2^5}; five folds.
  static GridSpec defaults();
  static GridSpec single(double gamma, double eta, double sigma);

  void validate() const;
  // Number of cells the sweep visits for the given model.
  std::size_t cell_count(ModelKind kind) const;
  // Cells in sweep order: gamma outermost, sigma innermost, each ascending in
  // the order given.
  std::vector<TwinHyperparams> cells(ModelKind kind) const;
};

struct GridCell {
  TwinHyperparams params;
  double mean_score = 0.0;
  std::vector<double> fold_scores;
  bool failed = false;
  std::string failure;
};

struct GridResult {
  TwinHyperparams best_params;
  double best_cv_score = 0.0;
  std::size_t best_index = 0;
  std::vector<GridCell> table;
  bool higher_is_better = true;
};

// Mean k-fold CV score per cell: accuracy (%) for classifiers, RMSE for the
// regressor. A cell whose fit fails on any fold scores -inf / +inf and the
// sweep carries on. Ties go to the earliest cell in sweep order.
GridResult grid_search(const Dataset& train, const GridSpec& grid, ModelKind kind, std::uint64_t seed);
GridResult grid_search(const Dataset& train, const GridSpec& grid, Task task, std::uint64_t seed);

// Fit on one dataset and score on another with the task's metric.
double fit_and_score(const Dataset& train, const Dataset& test, ModelKind kind, const TwinHyperparams& params);

}  // namespace trkm

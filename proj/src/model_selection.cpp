#include "trkm/model_selection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "trkm/errors.hpp"
#include "trkm/parallel.hpp"
#include "trkm/rkm.hpp"
#include "trkm/stats.hpp"
#include "trkm/trkm_classifier.hpp"
#include "trkm/trkm_regressor.hpp"

namespace trkm {

std::vector<Eigen::Index> shuffled_indices(Eigen::Index n, std::uint64_t seed) {
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  // mt19937_64 output is fixed by the standard; the distributions are not.
  std::mt19937_64 rng(seed);
  for (std::size_t i = order.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng() % i);
    std::swap(order[i - 1], order[j]);
  }
  return order;
}

std::pair<Dataset, Dataset> split(const Dataset& dataset, const SplitSpec& spec) {
  const auto n = dataset.size();
  if (n == 0) throw DegenerateSplit("cannot split an empty dataset");
  if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0)) {
    throw InvalidArgument("train_fraction must lie strictly between 0 and 1");
  }
  const auto quota = [&](Eigen::Index count) {
    return static_cast<Eigen::Index>(std::floor(spec.train_fraction * static_cast<double>(count) + 1e-9));
  };
  const Eigen::Index n_train = quota(n);
  if (n_train == 0 || n_train == n) {
    throw DegenerateSplit("a " + std::to_string(spec.train_fraction) + " split of " + std::to_string(n) +
                          " samples leaves one side empty");
  }

  const auto order = shuffled_indices(n, spec.seed);
  std::vector<Eigen::Index> train;
  std::vector<Eigen::Index> test;
  const bool stratify = spec.stratified && dataset.task == Task::Classify;
  if (!stratify) {
    train.assign(order.begin(), order.begin() + n_train);
    test.assign(order.begin() + n_train, order.end());
  } else {
    // class slot 0 holds -1, slot 1 holds +1
    std::array<Eigen::Index, 2> counts{0, 0};
    for (Eigen::Index i = 0; i < n; ++i) ++counts[dataset.labels(i) > 0 ? 1 : 0];
    std::array<Eigen::Index, 2> take{quota(counts[0]), quota(counts[1])};
    const Eigen::Index leftover = n_train - take[0] - take[1];
    if (leftover > 0) {
      const auto remainder = [&](int c) {
        return spec.train_fraction * static_cast<double>(counts[c]) - static_cast<double>(take[c]);
      };
      take[remainder(1) > remainder(0) ? 1 : 0] += leftover;
    }
    for (int c = 0; c < 2; ++c) {
      if (counts[c] > 0 && take[c] == 0) {
        throw DegenerateSplit("stratified split leaves class " + std::string(c ? "+1" : "-1") +
                              " without training samples");
      }
    }
    for (const auto i : order) {
      auto& remaining = take[dataset.labels(i) > 0 ? 1 : 0];
      if (remaining > 0) {
        train.push_back(i);
        --remaining;
      } else {
        test.push_back(i);
      }
    }
  }
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());
  return {dataset.subset(train), dataset.subset(test)};
}

std::vector<Fold> kfold_indices(Eigen::Index n, int k, std::uint64_t seed) {
  if (k < 2) throw InvalidArgument("k-fold cross-validation needs k >= 2");
  if (k > n) {
    throw TooFewSamples("cannot make " + std::to_string(k) + " folds from " + std::to_string(n) + " samples");
  }
  const auto order = shuffled_indices(n, seed);
  std::vector<Fold> folds(static_cast<std::size_t>(k));
  const Eigen::Index base = n / k;
  const Eigen::Index extra = n % k;
  Eigen::Index start = 0;
  for (int f = 0; f < k; ++f) {
    const Eigen::Index size = base + (f < extra ? 1 : 0);
    auto& fold = folds[static_cast<std::size_t>(f)];
    fold.valid.assign(order.begin() + start, order.begin() + start + size);
    fold.train.assign(order.begin(), order.begin() + start);
    fold.train.insert(fold.train.end(), order.begin() + start + size, order.end());
    std::sort(fold.valid.begin(), fold.valid.end());
    std::sort(fold.train.begin(), fold.train.end());
    start += size;
  }
  return folds;
}

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::TrkmClassifier:
      return "trkm-c";
    case ModelKind::TrkmRegressor:
      return "trkm-r";
    case ModelKind::Rkm:
      return "rkm";
  }
  return "unknown";
}

ModelKind model_kind_from_string(const std::string& name) {
  if (name == "trkm-c") return ModelKind::TrkmClassifier;
  if (name == "trkm-r") return ModelKind::TrkmRegressor;
  if (name == "rkm") return ModelKind::Rkm;
  throw InvalidArgument("unknown model kind '" + name + "' (expected trkm-c, trkm-r or rkm)");
}

Task task_of(ModelKind kind) { return kind == ModelKind::TrkmRegressor ? Task::Regress : Task::Classify; }

GridSpec GridSpec::defaults() {
  GridSpec grid;
  for (int e = -5; e <= 5; ++e) {
    grid.gamma_values.push_back(std::pow(10.0, e));
    grid.sigma_values.push_back(std::ldexp(1.0, e));
  }
  grid.eta_values = grid.gamma_values;
  grid.equal_penalties = true;
  grid.folds = 5;
  return grid;
}

GridSpec GridSpec::single(double gamma, double eta, double sigma) {
  GridSpec grid;
  grid.gamma_values = {gamma};
  grid.eta_values = {eta};
  grid.sigma_values = {sigma};
  return grid;
}

void GridSpec::validate() const {
  if (gamma_values.empty() || eta_values.empty() || sigma_values.empty()) {
    throw InvalidArgument("grid lists must be non-empty");
  }
  if (folds < 2) throw InvalidArgument("grid search needs at least 2 folds");
}

std::size_t GridSpec::cell_count(ModelKind kind) const {
  const std::size_t g = gamma_values.size();
  const std::size_t e = eta_values.size();
  const std::size_t s = sigma_values.size();
  if (equal_penalties || kind == ModelKind::Rkm) return g * e * s;
  return g * g * e * e * s;
}

std::vector<TwinHyperparams> GridSpec::cells(ModelKind kind) const {
  std::vector<TwinHyperparams> out;
  out.reserve(cell_count(kind));
  if (equal_penalties || kind == ModelKind::Rkm) {
    for (const double g : gamma_values) {
      for (const double e : eta_values) {
        for (const double s : sigma_values) out.push_back(TwinHyperparams::equal_penalties(g, e, KernelSpec::gaussian(s)));
      }
    }
    return out;
  }
  for (const double g1 : gamma_values) {
    for (const double g2 : gamma_values) {
      for (const double e1 : eta_values) {
        for (const double e2 : eta_values) {
          for (const double s : sigma_values) out.push_back({g1, g2, e1, e2, KernelSpec::gaussian(s)});
        }
      }
    }
  }
  return out;
}

double fit_and_score(const Dataset& train, const Dataset& test, ModelKind kind, const TwinHyperparams& params) {
  switch (kind) {
    case ModelKind::TrkmClassifier: {
      const auto model = fit_classifier<double>(train.X, train.labels, params);
      return classification_accuracy(predict_labels(model, test.X), test.labels);
    }
    case ModelKind::Rkm: {
      const auto model = fit_rkm<double>(train.X, train.labels, params.gamma1, params.eta1, params.kernel);
      return classification_accuracy(predict_rkm(model, test.X), test.labels);
    }
    case ModelKind::TrkmRegressor: {
      const auto model = fit_regressor<double>(train.X, train.targets, params);
      return regression_errors(predict_regression(model, test.X), test.targets).rmse;
    }
  }
  throw InvalidArgument("unknown model kind");
}

GridResult grid_search(const Dataset& train, const GridSpec& grid, ModelKind kind, std::uint64_t seed) {
  grid.validate();
  if (train.task != task_of(kind)) throw InvalidArgument("dataset task does not match model " + to_string(kind));

  const auto folds = kfold_indices(train.size(), grid.folds, seed);
  std::vector<std::pair<Dataset, Dataset>> fold_data;
  fold_data.reserve(folds.size());
  for (const auto& fold : folds) fold_data.emplace_back(train.subset(fold.train), train.subset(fold.valid));

  const bool higher = task_of(kind) == Task::Classify;
  const double worst = higher ? -std::numeric_limits<double>::infinity() : std::numeric_limits<double>::infinity();

  GridResult result;
  result.higher_is_better = higher;
  const auto params = grid.cells(kind);
  result.table.resize(params.size());
  parallel_for(params.size(), [&](std::size_t c) {
    auto& cell = result.table[c];
    cell.params = params[c];
    try {
      for (const auto& [fit_set, valid_set] : fold_data) {
        cell.fold_scores.push_back(fit_and_score(fit_set, valid_set, kind, cell.params));
      }
      cell.mean_score = std::accumulate(cell.fold_scores.begin(), cell.fold_scores.end(), 0.0) /
                        static_cast<double>(cell.fold_scores.size());
    } catch (const std::exception& e) {
      cell.failed = true;
      cell.failure = e.what();
      cell.mean_score = worst;
    }
  });

  result.best_index = 0;
  for (std::size_t c = 1; c < result.table.size(); ++c) {
    const double score = result.table[c].mean_score;
    const double best = result.table[result.best_index].mean_score;
    if (higher ? score > best : score < best) result.best_index = c;
  }
  result.best_params = result.table[result.best_index].params;
  result.best_cv_score = result.table[result.best_index].mean_score;
  return result;
}

GridResult grid_search(const Dataset& train, const GridSpec& grid, Task task, std::uint64_t seed) {
  if (task == Task::Unlabeled) throw InvalidArgument("grid search needs a labelled dataset");
  return grid_search(train, grid, task == Task::Classify ? ModelKind::TrkmClassifier : ModelKind::TrkmRegressor,
                     seed);
}

}  // namespace trkm

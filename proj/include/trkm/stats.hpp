#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <optional>

#include "trkm/dense_solver.hpp"

namespace trkm {

enum class Better { Higher, Lower };

// Percentage of matching labels.
double classification_accuracy(const Eigen::VectorXi& predicted, const Eigen::VectorXi& truth);

// RMSE, MAE and the split of MAE into under-prediction (f(x) <= y) and
// over-prediction (f(x) > y) parts. Both parts divide by the full sample
// count, so pos_error + neg_error == mae.
struct RegressionErrors {
  double rmse = 0.0;
  double mae = 0.0;
  double pos_error = 0.0;
  double neg_error = 0.0;
  std::size_t count_pos = 0;
  std::size_t count_neg = 0;
};

RegressionErrors regression_errors(const Vector& predicted, const Vector& truth);

// Rows are datasets, columns are models. Rank 1 is best; ties share the
// mean of the ranks they span.
struct RankTable {
  Matrix scores;
  Matrix ranks;
  Vector average_ranks;

  Eigen::Index datasets() const { return scores.rows(); }
  Eigen::Index models() const { return scores.cols(); }
};

RankTable rank_models(const Matrix& scores, Better better);

struct FriedmanReport {
  double chi2 = 0.0;
  double ff = 0.0;
  int df1 = 0;
  int df2 = 0;
  std::optional<double> critical_value;
  bool reject_null = false;
};

// chi2_F = 12N / (p(p+1)) [sum_j R_j^2 - p(p+1)^2 / 4]
// F_F    = (N-1) chi2_F / (N(p-1) - chi2_F)
// reject_null compares F_F against the caller-supplied F critical value.
FriedmanReport friedman_test(const RankTable& ranks, std::optional<double> critical_value = std::nullopt);

// Nemenyi critical difference q_alpha * sqrt(p(p+1) / (6N)).
double nemenyi_cd(int models, int datasets, double q_alpha);

// Two-tailed Nemenyi q_alpha at alpha = 0.05 (studentized range / sqrt 2),
// tabulated for 2..10 models.
std::optional<double> nemenyi_q_alpha_005(int models);

struct WinTieLoss {
  int wins = 0;
  int ties = 0;
  int losses = 0;
  double threshold = 0.0;  // N/2 + 1.96 sqrt(N) / 2
  bool significant = false;
};

// Counts datasets where a beats, ties or loses to b. Ties are shared evenly
// (an odd tie is dropped) before comparing with the threshold.
WinTieLoss win_tie_loss(const Vector& a, const Vector& b, Better better);

double sign_test_threshold(int datasets);

}  // namespace trkm

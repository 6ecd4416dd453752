#include "trkm/stats.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "trkm/errors.hpp"

namespace trkm {

namespace {

void require_same_length(Eigen::Index a, Eigen::Index b, const char* what) {
  if (a != b) {
    throw DimensionMismatch(std::string(what) + ": lengths " + std::to_string(a) + " and " + std::to_string(b));
  }
  if (a == 0) throw EmptyInput(std::string(what) + ": empty input");
}

}  // namespace

double classification_accuracy(const Eigen::VectorXi& predicted, const Eigen::VectorXi& truth) {
  require_same_length(predicted.size(), truth.size(), "classification_accuracy");
  const auto correct = (predicted.array() == truth.array()).count();
  return 100.0 * static_cast<double>(correct) / static_cast<double>(truth.size());
}

RegressionErrors regression_errors(const Vector& predicted, const Vector& truth) {
  require_same_length(predicted.size(), truth.size(), "regression_errors");
  const double n = static_cast<double>(truth.size());
  RegressionErrors out;
  double squared = 0.0;
  double pos = 0.0;
  double neg = 0.0;
  for (Eigen::Index i = 0; i < truth.size(); ++i) {
    const double diff = predicted(i) - truth(i);
    squared += diff * diff;
    if (predicted(i) <= truth(i)) {
      pos += std::abs(diff);
      ++out.count_pos;
    } else {
      neg += std::abs(diff);
      ++out.count_neg;
    }
  }
  out.rmse = std::sqrt(squared / n);
  out.pos_error = pos / n;
  out.neg_error = neg / n;
  out.mae = out.pos_error + out.neg_error;
  return out;
}

RankTable rank_models(const Matrix& scores, Better better) {
  if (scores.rows() < 1 || scores.cols() < 2) {
    throw DimensionMismatch("rank_models needs at least 1 dataset and 2 models, got " +
                            std::to_string(scores.rows()) + "x" + std::to_string(scores.cols()));
  }
  if (!scores.allFinite()) throw InvalidArgument("rank_models: scores must be finite");

  RankTable table;
  table.scores = scores;
  table.ranks.resize(scores.rows(), scores.cols());
  const auto p = scores.cols();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(p));
  for (Eigen::Index row = 0; row < scores.rows(); ++row) {
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    const auto before = [&](Eigen::Index a, Eigen::Index b) {
      return better == Better::Higher ? scores(row, a) > scores(row, b) : scores(row, a) < scores(row, b);
    };
    std::stable_sort(order.begin(), order.end(), before);
    std::size_t start = 0;
    while (start < order.size()) {
      std::size_t end = start + 1;
      while (end < order.size() && scores(row, order[end]) == scores(row, order[start])) ++end;
      // positions start..end-1 hold ranks start+1..end
      const double midrank = 0.5 * static_cast<double>(start + 1 + end);
      for (std::size_t k = start; k < end; ++k) table.ranks(row, order[k]) = midrank;
      start = end;
    }
  }
  table.average_ranks = table.ranks.colwise().mean().transpose();
  return table;
}

FriedmanReport friedman_test(const RankTable& ranks, std::optional<double> critical_value) {
  const double n = static_cast<double>(ranks.datasets());
  const double p = static_cast<double>(ranks.models());
  if (ranks.datasets() < 2 || ranks.models() < 2) {
    throw DegenerateStatistic("Friedman test needs N >= 2 datasets and p >= 2 models");
  }
  FriedmanReport out;
  out.chi2 = 12.0 * n / (p * (p + 1.0)) *
             (ranks.average_ranks.squaredNorm() - p * (p + 1.0) * (p + 1.0) / 4.0);
  // midranks can leave a tiny negative residue for fully tied tables
  if (std::abs(out.chi2) < 1e-12) out.chi2 = 0.0;
  const double denominator = n * (p - 1.0) - out.chi2;
  if (!(denominator > 0.0)) {
    throw DegenerateStatistic("Friedman F_F denominator N(p-1) - chi2 is " + std::to_string(denominator));
  }
  out.ff = (n - 1.0) * out.chi2 / denominator;
  out.df1 = static_cast<int>(p) - 1;
  out.df2 = (static_cast<int>(n) - 1) * (static_cast<int>(p) - 1);
  out.critical_value = critical_value;
  out.reject_null = critical_value.has_value() && out.ff > *critical_value;
  return out;
}

double nemenyi_cd(int models, int datasets, double q_alpha) {
  if (models < 2 || datasets < 1 || !(q_alpha > 0.0)) {
    throw InvalidArgument("nemenyi_cd needs p >= 2, N >= 1 and q_alpha > 0");
  }
  const double p = models;
  return q_alpha * std::sqrt(p * (p + 1.0) / (6.0 * static_cast<double>(datasets)));
}

std::optional<double> nemenyi_q_alpha_005(int models) {
  static constexpr std::array<double, 9> table{1.960, 2.343, 2.569, 2.728, 2.850, 2.949, 3.031, 3.102, 3.164};
  if (models < 2 || models > 10) return std::nullopt;
  return table[static_cast<std::size_t>(models - 2)];
}

double sign_test_threshold(int datasets) {
  const double n = datasets;
  return n / 2.0 + 1.96 * std::sqrt(n) / 2.0;
}

WinTieLoss win_tie_loss(const Vector& a, const Vector& b, Better better) {
  require_same_length(a.size(), b.size(), "win_tie_loss");
  WinTieLoss out;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (a(i) == b(i)) {
      ++out.ties;
    } else if ((better == Better::Higher) == (a(i) > b(i))) {
      ++out.wins;
    } else {
      ++out.losses;
    }
  }
  out.threshold = sign_test_threshold(static_cast<int>(a.size()));
  out.significant = static_cast<double>(out.wins + out.ties / 2) >= out.threshold;
  return out;
}

}  // namespace trkm

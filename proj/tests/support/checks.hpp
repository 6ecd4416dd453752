#pragma once

// Optimality checks for fitted models, evaluated with the oracle kernels.

#include <algorithm>
#include <cmath>
#include <random>

#include "support/oracles.hpp"
#include "trkm/rkm.hpp"
#include "trkm/trkm_classifier.hpp"
#include "trkm/trkm_regressor.hpp"

namespace checks {

using oracle::Col;
using oracle::Real;

inline bool is_linear(const trkm::KernelSpec& k) { return k.family == trkm::KernelFamily::Linear; }

inline Col matvec(const oracle::Grid& K, const Eigen::VectorXd& v) {
  Col out(K.size(), 0);
  for (std::size_t i = 0; i < K.size(); ++i) {
    for (std::size_t j = 0; j < K[i].size(); ++j) out[i] += K[i][j] * Real(v(j));
  }
  return out;
}

inline Col ones_times(const oracle::Grid& K) { return oracle::row_sums(K); }

// Slack vectors implied by the constraints, written in kernel form:
//   xi1 = e1 - (1/g1)(K(A,A) h1 - K(A,B) e2) - e1 b1
//   xi2 = -e2 - (1/g2)(K(B,B) h2 + K(B,A) e1) - e2 b2
struct Slacks {
  Col xi1, xi2;
};

inline Slacks slacks(const trkm::TrkmClassifierModel<double>& m) {
  const auto& hp = m.hyperparams;
  const bool lin = is_linear(hp.kernel);
  const double s = hp.kernel.sigma;
  const auto kaa_h = matvec(oracle::gram(lin, s, m.A, m.A), m.h1);
  const auto kab_e = ones_times(oracle::gram(lin, s, m.A, m.B));
  const auto kbb_h = matvec(oracle::gram(lin, s, m.B, m.B), m.h2);
  const auto kba_e = ones_times(oracle::gram(lin, s, m.B, m.A));
  Slacks out{Col(kaa_h.size()), Col(kbb_h.size())};
  for (std::size_t i = 0; i < out.xi1.size(); ++i) {
    out.xi1[i] = 1 - (kaa_h[i] - kab_e[i]) / Real(hp.gamma1) - Real(m.b1);
  }
  for (std::size_t i = 0; i < out.xi2.size(); ++i) {
    out.xi2[i] = -1 - (kbb_h[i] + kba_e[i]) / Real(hp.gamma2) - Real(m.b2);
  }
  return out;
}

// Regressor slacks from Y = f1 - xi1 and Y = f2 + xi2 with the reconstructed
// weights: xi1 = (1/g1) K (e - h1) + e b1 - Y, xi2 = Y - (1/g2) K (h2 - e) - e b2.
inline Slacks slacks(const trkm::TrkmRegressorModel<double>& m) {
  const auto& hp = m.hyperparams;
  const auto K = oracle::gram(is_linear(hp.kernel), hp.kernel.sigma, m.X, m.X);
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(m.X.rows());
  const auto f1 = matvec(K, ones - m.h1);
  const auto f2 = matvec(K, m.h2 - ones);
  Slacks out{Col(f1.size()), Col(f2.size())};
  for (std::size_t i = 0; i < f1.size(); ++i) {
    out.xi1[i] = f1[i] / Real(hp.gamma1) + Real(m.b1) - Real(m.Y(i));
    out.xi2[i] = Real(m.Y(i)) - f2[i] / Real(hp.gamma2) - Real(m.b2);
  }
  return out;
}

// max |eta h - xi|: zero when the h-stationarity condition holds.
inline double stationarity(const Col& xi, const Eigen::VectorXd& h, double eta) {
  Real worst = 0;
  for (std::size_t i = 0; i < xi.size(); ++i) worst = std::max(worst, std::fabs(Real(eta) * Real(h(i)) - xi[i]));
  return double(worst);
}

struct FenchelYoung {
  bool inequality_holds = true;
  double equality_gap = 0;  // relative gap at h = xi / eta
};

// (1/(2 eta)) xi^T xi >= xi^T h - (eta/2) h^T h over random h, equality at xi / eta.
inline FenchelYoung fenchel_young(const Col& xi, double eta, std::mt19937_64& rng, int draws = 100) {
  const auto bound = [&](const Col& h) {
    Real dot = 0;
    Real hh = 0;
    for (std::size_t i = 0; i < xi.size(); ++i) {
      dot += xi[i] * h[i];
      hh += h[i] * h[i];
    }
    return dot - Real(eta) / 2 * hh;
  };
  Real xx = 0;
  Real scale = 1;
  for (const Real v : xi) {
    xx += v * v;
    scale = std::max(scale, std::fabs(v));
  }
  const Real lhs = xx / (2 * Real(eta));
  FenchelYoung out;
  std::normal_distribution<double> draw(0.0, 1.0);
  for (int d = 0; d < draws; ++d) {
    Col h(xi.size());
    // mix draws near the optimum with wide ones
    const double spread = d % 2 ? 1.0 : double(scale / Real(eta));
    for (std::size_t i = 0; i < h.size(); ++i) h[i] = xi[i] / Real(eta) + Real(spread * draw(rng));
    if (lhs - bound(h) < -1e-12 * std::max(Real(1), lhs)) out.inequality_holds = false;
  }
  Col opt(xi.size());
  for (std::size_t i = 0; i < xi.size(); ++i) opt[i] = xi[i] / Real(eta);
  out.equality_gap = double(std::fabs(lhs - bound(opt)) / std::max(Real(1), lhs));
  return out;
}

}  // namespace checks

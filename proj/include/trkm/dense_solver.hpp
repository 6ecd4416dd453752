#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "trkm/errors.hpp"

namespace trkm {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Matrix = MatrixX<double>;
using Vector = VectorX<double>;

// [[core, border_sign * border], [border^T, 0]] * [h; b] = [rhs_top; rhs_bottom]
template <typename Scalar>
struct BorderedSystem {
  MatrixX<Scalar> core;
  VectorX<Scalar> border;
  int border_sign = 1;
  VectorX<Scalar> rhs_top;
  Scalar rhs_bottom = Scalar(0);

  Eigen::Index size() const { return core.rows(); }
};

template <typename Scalar>
struct SolveReport {
  VectorX<Scalar> solution;  // n hidden features followed by the bias
  Scalar residual_norm = Scalar(0);
  Scalar condition_estimate = Scalar(0);

  auto hidden() const { return solution.head(solution.size() - 1); }
  Scalar bias() const { return solution(solution.size() - 1); }
};

// Pivots smaller than this fraction of the largest augmented entry mean the
// regularized block cannot be inverted reliably.
inline constexpr double kSingularPivotThreshold = 1e-12;
inline constexpr double kResidualTolerance = 1e-8;

namespace detail {

template <typename Scalar>
void validate(const BorderedSystem<Scalar>& system) {
  const auto n = system.core.rows();
  if (system.core.cols() != n) {
    throw DimensionMismatch("bordered system core is " + std::to_string(n) + "x" +
                            std::to_string(system.core.cols()) + ", expected square");
  }
  if (system.border.size() != n || system.rhs_top.size() != n) {
    throw DimensionMismatch("bordered system core has " + std::to_string(n) + " rows but border has " +
                            std::to_string(system.border.size()) + " and rhs has " +
                            std::to_string(system.rhs_top.size()));
  }
  if (system.border_sign != 1 && system.border_sign != -1) {
    throw InvalidArgument("border_sign must be +1 or -1");
  }
  if (!system.core.allFinite() || !system.border.allFinite() || !system.rhs_top.allFinite() ||
      !std::isfinite(static_cast<double>(system.rhs_bottom))) {
    throw InvalidArgument("bordered system contains non-finite entries");
  }
}

}  // namespace detail

template <typename Scalar>
MatrixX<Scalar> assemble_matrix(const BorderedSystem<Scalar>& system) {
  detail::validate(system);
  const auto n = system.size();
  MatrixX<Scalar> full(n + 1, n + 1);
  full.topLeftCorner(n, n) = system.core;
  full.topRightCorner(n, 1) = Scalar(system.border_sign) * system.border;
  full.bottomLeftCorner(1, n) = system.border.transpose();
  full(n, n) = Scalar(0);
  return full;
}

template <typename Scalar>
VectorX<Scalar> assemble_rhs(const BorderedSystem<Scalar>& system) {
  const auto n = system.size();
  VectorX<Scalar> rhs(n + 1);
  rhs.head(n) = system.rhs_top;
  rhs(n) = system.rhs_bottom;
  return rhs;
}

// ||A x - b||_inf on the assembled (n+1)x(n+1) system.
template <typename Scalar>
Scalar residual(const BorderedSystem<Scalar>& system, const VectorX<Scalar>& x) {
  detail::validate(system);
  if (x.size() != system.size() + 1) {
    throw DimensionMismatch("residual expects a vector of length " + std::to_string(system.size() + 1) +
                            ", got " + std::to_string(x.size()));
  }
  return (assemble_matrix(system) * x - assemble_rhs(system)).template lpNorm<Eigen::Infinity>();
}

template <typename Scalar>
SolveReport<Scalar> solve_bordered(const BorderedSystem<Scalar>& system) {
  const MatrixX<Scalar> full = assemble_matrix(system);
  const VectorX<Scalar> rhs = assemble_rhs(system);

  const Eigen::PartialPivLU<MatrixX<Scalar>> lu(full);
  const Scalar scale = std::max(full.cwiseAbs().maxCoeff(), std::numeric_limits<Scalar>::min());
  const Scalar smallest_pivot = lu.matrixLU().diagonal().cwiseAbs().minCoeff();
  if (!(smallest_pivot / scale >= Scalar(kSingularPivotThreshold))) {
    throw SingularSystem("bordered system is singular (relative pivot " +
                         std::to_string(static_cast<double>(smallest_pivot / scale)) + ")");
  }

  SolveReport<Scalar> report;
  report.solution = lu.solve(rhs);
  VectorX<Scalar> r = full * report.solution - rhs;
  const Scalar tolerance =
      Scalar(kResidualTolerance) * std::max(Scalar(1), rhs.template lpNorm<Eigen::Infinity>());
  if (r.template lpNorm<Eigen::Infinity>() > tolerance) {
    // one round of iterative refinement
    report.solution -= lu.solve(r);
    r = full * report.solution - rhs;
  }
  report.residual_norm = r.template lpNorm<Eigen::Infinity>();
  const Scalar rcond = lu.rcond();
  report.condition_estimate =
      rcond > Scalar(0) ? Scalar(1) / rcond : std::numeric_limits<Scalar>::infinity();
  return report;
}

}  // namespace trkm

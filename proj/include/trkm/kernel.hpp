#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <string>

#include "trkm/dense_solver.hpp"
#include "trkm/errors.hpp"
#include "trkm/parallel.hpp"

namespace trkm {

enum class KernelFamily { Gaussian, Linear };

struct KernelSpec {
  KernelFamily family = KernelFamily::Gaussian;
  double sigma = 1.0;  // bandwidth, Gaussian only

  static KernelSpec gaussian(double sigma) { return {KernelFamily::Gaussian, sigma}; }
  static KernelSpec linear() { return {KernelFamily::Linear, 1.0}; }

  void validate() const {
    if (family == KernelFamily::Gaussian && !(sigma > 0.0 && std::isfinite(sigma))) {
      throw InvalidArgument("Gaussian kernel requires sigma > 0");
    }
  }

  friend bool operator==(const KernelSpec&, const KernelSpec&) = default;
};

inline std::string to_string(KernelFamily family) {
  return family == KernelFamily::Gaussian ? "gaussian" : "linear";
}

// k(x, y) = exp(-||x - y||^2 / (2 sigma^2)) or x^T y. The squared distance is
// summed directly so that k(x, x) is exactly 1.
template <typename DerivedX, typename DerivedY>
typename DerivedX::Scalar kernel_eval(const KernelSpec& spec, const Eigen::MatrixBase<DerivedX>& x,
                                      const Eigen::MatrixBase<DerivedY>& y) {
  using Scalar = typename DerivedX::Scalar;
  if (x.size() != y.size()) {
    throw DimensionMismatch("kernel arguments have lengths " + std::to_string(x.size()) + " and " +
                            std::to_string(y.size()));
  }
  Scalar acc(0);
  if (spec.family == KernelFamily::Linear) {
    for (Eigen::Index k = 0; k < x.size(); ++k) acc += x(k) * y(k);
    return acc;
  }
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    const Scalar d = x(k) - y(k);
    acc += d * d;
  }
  const Scalar sigma(spec.sigma);
  return std::exp(-acc / (Scalar(2) * sigma * sigma));
}

// values(i, j) = k(left.row(i), right.row(j)); rows are samples.
template <typename DerivedL, typename DerivedR>
MatrixX<typename DerivedL::Scalar> gram(const KernelSpec& spec, const Eigen::MatrixBase<DerivedL>& left,
                                        const Eigen::MatrixBase<DerivedR>& right) {
  using Scalar = typename DerivedL::Scalar;
  spec.validate();
  if (left.cols() != right.cols()) {
    throw DimensionMismatch("gram operands have " + std::to_string(left.cols()) + " and " +
                            std::to_string(right.cols()) + " features");
  }
  MatrixX<Scalar> values(left.rows(), right.rows());
  const auto fill_row = [&](std::size_t i) {
    const auto row = static_cast<Eigen::Index>(i);
    for (Eigen::Index j = 0; j < right.rows(); ++j) {
      values(row, j) = kernel_eval(spec, left.row(row), right.row(j));
    }
  };
  const double work = double(left.rows()) * double(right.rows()) * double(left.cols() + 1);
  parallel_for(static_cast<std::size_t>(left.rows()), fill_row, work > 2e5 ? num_threads() : 1u);
  return values;
}

}  // namespace trkm

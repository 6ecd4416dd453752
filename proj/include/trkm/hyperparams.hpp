#pragma once

#include <cmath>
#include <string>

#include "trkm/errors.hpp"
#include "trkm/kernel.hpp"

namespace trkm {

// Penalties for the two twin systems. gamma weighs the weight norm, eta the
// hidden features paired with the error variables.
struct TwinHyperparams {
  double gamma1 = 1.0;
  double gamma2 = 1.0;
  double eta1 = 1.0;
  double eta2 = 1.0;
  KernelSpec kernel;

  static TwinHyperparams equal_penalties(double gamma, double eta, KernelSpec kernel) {
    return {gamma, gamma, eta, eta, kernel};
  }

  void validate() const {
    const auto positive = [](double v) { return v > 0.0 && std::isfinite(v); };
    if (!positive(gamma1) || !positive(gamma2) || !positive(eta1) || !positive(eta2)) {
      throw InvalidArgument("gamma1, gamma2, eta1 and eta2 must all be finite and > 0");
    }
    kernel.validate();
  }

  friend bool operator==(const TwinHyperparams&, const TwinHyperparams&) = default;
};

using TrkmClassifierHyperparams = TwinHyperparams;
using TrkmRegressorHyperparams = TwinHyperparams;

}  // namespace trkm

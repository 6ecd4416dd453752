#pragma once

#include <Eigen/Dense>

#include <array>
#include <string>

#include "trkm/dense_solver.hpp"
#include "trkm/errors.hpp"
#include "trkm/hyperparams.hpp"
#include "trkm/kernel.hpp"
#include "trkm/trkm_classifier.hpp"

namespace trkm {

template <typename Scalar = double>
struct TrkmRegressorModel {
  MatrixX<Scalar> X;
  VectorX<Scalar> Y;
  VectorX<Scalar> h1;
  Scalar b1 = Scalar(0);
  VectorX<Scalar> h2;
  Scalar b2 = Scalar(0);
  TrkmRegressorHyperparams hyperparams;
  std::array<SolveReport<Scalar>, 2> fit_diag;

  Eigen::Index features() const { return X.cols(); }
};

// Twin regression systems over the whole sample:
//   [(1/g1) K + e1 I, -e; e^T, 0] [h1; b1] = [-Y + (1/g1) K e; n]
//   [(1/g2) K + e2 I,  e; e^T, 0] [h2; b2] = [ Y + (1/g2) K e; n]
template <typename Scalar>
TrkmRegressorModel<Scalar> fit_regressor(const MatrixX<Scalar>& X, const VectorX<Scalar>& Y,
                                         const TrkmRegressorHyperparams& hp) {
  hp.validate();
  if (X.rows() < 2) {
    throw TooFewSamples("regression needs at least 2 samples, got " + std::to_string(X.rows()));
  }
  if (Y.size() != X.rows()) {
    throw DimensionMismatch("regression inputs have " + std::to_string(X.rows()) + " rows but " +
                            std::to_string(Y.size()) + " targets");
  }
  detail::check_finite(X, "regression inputs");
  detail::check_finite<Scalar>(Y, "regression targets");

  const auto n = X.rows();
  const MatrixX<Scalar> k = gram(hp.kernel, X, X);
  const VectorX<Scalar> k_row_sums = k.rowwise().sum();
  const VectorX<Scalar> ones = VectorX<Scalar>::Ones(n);

  BorderedSystem<Scalar> first;
  first.core = k / Scalar(hp.gamma1);
  first.core.diagonal().array() += Scalar(hp.eta1);
  first.border = ones;
  first.border_sign = -1;
  first.rhs_top = -Y + k_row_sums / Scalar(hp.gamma1);
  first.rhs_bottom = Scalar(n);

  BorderedSystem<Scalar> second;
  second.core = k / Scalar(hp.gamma2);
  second.core.diagonal().array() += Scalar(hp.eta2);
  second.border = ones;
  second.border_sign = 1;
  second.rhs_top = Y + k_row_sums / Scalar(hp.gamma2);
  second.rhs_bottom = Scalar(n);

  TrkmRegressorModel<Scalar> model;
  model.fit_diag[0] = detail::solve_labelled(first, "lower regressor system");
  model.fit_diag[1] = detail::solve_labelled(second, "upper regressor system");
  model.X = X;
  model.Y = Y;
  model.h1 = model.fit_diag[0].hidden();
  model.b1 = model.fit_diag[0].bias();
  model.h2 = model.fit_diag[1].hidden();
  model.b2 = model.fit_diag[1].bias();
  model.hyperparams = hp;
  return model;
}

template <typename Scalar>
DecisionValues<Scalar> regression_components(const TrkmRegressorModel<Scalar>& model, const MatrixX<Scalar>& X) {
  if (X.cols() != model.features()) {
    throw DimensionMismatch("model expects " + std::to_string(model.features()) + " features, input has " +
                            std::to_string(X.cols()));
  }
  const auto& hp = model.hyperparams;
  const MatrixX<Scalar> k = gram(hp.kernel, X, model.X);
  const VectorX<Scalar> ones = VectorX<Scalar>::Ones(model.X.rows());
  DecisionValues<Scalar> out;
  out.g1 = (k * (ones - model.h1) / Scalar(hp.gamma1)).array() + model.b1;
  out.g2 = (k * (model.h2 - ones) / Scalar(hp.gamma2)).array() + model.b2;
  return out;
}

// Averaged regressor (g1 + g2) / 2.
template <typename Scalar>
VectorX<Scalar> predict_regression(const TrkmRegressorModel<Scalar>& model, const MatrixX<Scalar>& X) {
  const auto parts = regression_components(model, X);
  return (parts.g1 + parts.g2) / Scalar(2);
}

}  // namespace trkm

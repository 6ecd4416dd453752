#pragma once

#include <Eigen/Dense>

#include <string>

#include "trkm/dense_solver.hpp"
#include "trkm/errors.hpp"
#include "trkm/kernel.hpp"
#include "trkm/trkm_classifier.hpp"

namespace trkm {

// Single-machine restricted kernel machine baseline. The hidden features h
// carry the label sign, so sum(h) = 0 plays the role of the LS-SVM dual
// constraint.
template <typename Scalar = double>
struct RkmModel {
  MatrixX<Scalar> X;
  Eigen::VectorXi y;
  VectorX<Scalar> h;
  Scalar b = Scalar(0);
  double gamma = 1.0;
  double eta = 1.0;
  KernelSpec kernel;
  SolveReport<Scalar> fit_diag;

  Eigen::Index features() const { return X.cols(); }
};

// [(1/gamma) K + eta I, e; e^T, 0] [h; b] = [y; 0]
template <typename Scalar>
RkmModel<Scalar> fit_rkm(const MatrixX<Scalar>& X, const Eigen::VectorXi& y, double gamma, double eta,
                         const KernelSpec& kernel) {
  if (!(gamma > 0.0) || !(eta > 0.0)) throw InvalidArgument("RKM requires gamma > 0 and eta > 0");
  kernel.validate();
  if (X.rows() < 2) throw TooFewSamples("RKM needs at least 2 samples, got " + std::to_string(X.rows()));
  if (y.size() != X.rows()) {
    throw DimensionMismatch("RKM inputs have " + std::to_string(X.rows()) + " rows but " +
                            std::to_string(y.size()) + " labels");
  }
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (y(i) != 1 && y(i) != -1) throw InvalidArgument("RKM labels must be +1 or -1");
  }
  detail::check_finite(X, "RKM inputs");

  const auto n = X.rows();
  BorderedSystem<Scalar> system;
  system.core = gram(kernel, X, X) / Scalar(gamma);
  system.core.diagonal().array() += Scalar(eta);
  system.border = VectorX<Scalar>::Ones(n);
  system.border_sign = 1;
  system.rhs_top = y.cast<Scalar>();
  system.rhs_bottom = Scalar(0);

  RkmModel<Scalar> model;
  model.fit_diag = detail::solve_labelled(system, "RKM system");
  model.X = X;
  model.y = y;
  model.h = model.fit_diag.hidden();
  model.b = model.fit_diag.bias();
  model.gamma = gamma;
  model.eta = eta;
  model.kernel = kernel;
  return model;
}

// (1/gamma) K(x, X) h + b. Only the training system is published for the RKM;
// this is the LS-SVM decision function it reformulates.
template <typename Scalar>
VectorX<Scalar> rkm_scores(const RkmModel<Scalar>& model, const MatrixX<Scalar>& X) {
  if (X.cols() != model.features()) {
    throw DimensionMismatch("model expects " + std::to_string(model.features()) + " features, input has " +
                            std::to_string(X.cols()));
  }
  return (gram(model.kernel, X, model.X) * model.h / Scalar(model.gamma)).array() + model.b;
}

template <typename Scalar>
Eigen::VectorXi predict_rkm(const RkmModel<Scalar>& model, const MatrixX<Scalar>& X) {
  return labels_from_scores<Scalar>(rkm_scores(model, X));
}

}  // namespace trkm

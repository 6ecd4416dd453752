#pragma once

#include <Eigen/Dense>

#include <array>
#include <string>
#include <utility>
#include <vector>

#include "trkm/dense_solver.hpp"
#include "trkm/errors.hpp"
#include "trkm/hyperparams.hpp"
#include "trkm/kernel.hpp"

namespace trkm {

// Fitted twin classifier. A holds the +1 samples, B the -1 samples; the
// hyperplane weights are never formed, every evaluation goes through the
// kernel expansion over A and B.
template <typename Scalar = double>
struct TrkmClassifierModel {
  MatrixX<Scalar> A;
  MatrixX<Scalar> B;
  VectorX<Scalar> h1;
  Scalar b1 = Scalar(0);
  VectorX<Scalar> h2;
  Scalar b2 = Scalar(0);
  TrkmClassifierHyperparams hyperparams;
  std::array<SolveReport<Scalar>, 2> fit_diag;

  Eigen::Index features() const { return A.cols(); }
};

template <typename Scalar = double>
struct DecisionValues {
  VectorX<Scalar> g1;
  VectorX<Scalar> g2;
};

namespace detail {

template <typename Scalar>
void check_finite(const MatrixX<Scalar>& m, const char* what) {
  if (!m.allFinite()) throw InvalidArgument(std::string(what) + " contains non-finite entries");
}

template <typename Scalar>
SolveReport<Scalar> solve_labelled(const BorderedSystem<Scalar>& system, const char* label) {
  try {
    return solve_bordered(system);
  } catch (const SingularSystem& e) {
    throw SingularSystem(std::string(label) + ": " + e.what());
  }
}

}  // namespace detail

// Builds and solves both twin systems:
//   [(1/g1) K(A,A) + e1 I, e1; e1^T, 0] [h1; b1] =  [e1 + (1/g1) K(A,B) e2; n2]
//   [(1/g2) K(B,B) + e2 I, e2; e2^T, 0] [h2; b2] = -[e2 + (1/g2) K(B,A) e1; n1]
template <typename Scalar>
TrkmClassifierModel<Scalar> fit_classifier(const MatrixX<Scalar>& A, const MatrixX<Scalar>& B,
                                           const TrkmClassifierHyperparams& hp) {
  hp.validate();
  if (A.rows() < 1 || B.rows() < 1) {
    throw EmptyClass("both classes need at least one sample (got " + std::to_string(A.rows()) + " positive, " +
                     std::to_string(B.rows()) + " negative)");
  }
  if (A.cols() != B.cols()) {
    throw DimensionMismatch("class matrices have " + std::to_string(A.cols()) + " and " +
                            std::to_string(B.cols()) + " features");
  }
  detail::check_finite(A, "positive class matrix");
  detail::check_finite(B, "negative class matrix");

  const auto n1 = A.rows();
  const auto n2 = B.rows();
  const Scalar inv_g1 = Scalar(1) / Scalar(hp.gamma1);
  const Scalar inv_g2 = Scalar(1) / Scalar(hp.gamma2);

  const MatrixX<Scalar> k_ab = gram(hp.kernel, A, B);

  BorderedSystem<Scalar> first;
  first.core = inv_g1 * gram(hp.kernel, A, A);
  first.core.diagonal().array() += Scalar(hp.eta1);
  first.border = VectorX<Scalar>::Ones(n1);
  first.border_sign = 1;
  first.rhs_top = VectorX<Scalar>::Ones(n1) + inv_g1 * k_ab.rowwise().sum();
  first.rhs_bottom = Scalar(n2);

  BorderedSystem<Scalar> second;
  second.core = inv_g2 * gram(hp.kernel, B, B);
  second.core.diagonal().array() += Scalar(hp.eta2);
  second.border = VectorX<Scalar>::Ones(n2);
  second.border_sign = 1;
  second.rhs_top = -(VectorX<Scalar>::Ones(n2) + inv_g2 * k_ab.colwise().sum().transpose());
  second.rhs_bottom = -Scalar(n1);

  TrkmClassifierModel<Scalar> model;
  model.fit_diag[0] = detail::solve_labelled(first, "class +1 system");
  model.fit_diag[1] = detail::solve_labelled(second, "class -1 system");
  model.A = A;
  model.B = B;
  model.h1 = model.fit_diag[0].hidden();
  model.b1 = model.fit_diag[0].bias();
  model.h2 = model.fit_diag[1].hidden();
  model.b2 = model.fit_diag[1].bias();
  model.hyperparams = hp;
  return model;
}

// Splits rows by label (+1 to A, -1 to B), preserving input order.
template <typename Scalar>
std::pair<MatrixX<Scalar>, MatrixX<Scalar>> split_by_label(const MatrixX<Scalar>& X,
                                                           const Eigen::VectorXi& labels) {
  if (X.rows() != labels.size()) {
    throw DimensionMismatch("sample matrix has " + std::to_string(X.rows()) + " rows but " +
                            std::to_string(labels.size()) + " labels");
  }
  std::vector<Eigen::Index> pos;
  std::vector<Eigen::Index> neg;
  for (Eigen::Index i = 0; i < labels.size(); ++i) {
    if (labels(i) == 1) {
      pos.push_back(i);
    } else if (labels(i) == -1) {
      neg.push_back(i);
    } else {
      throw InvalidArgument("labels must be +1 or -1, got " + std::to_string(labels(i)));
    }
  }
  return {X(pos, Eigen::all), X(neg, Eigen::all)};
}

template <typename Scalar>
TrkmClassifierModel<Scalar> fit_classifier(const MatrixX<Scalar>& X, const Eigen::VectorXi& labels,
                                           const TrkmClassifierHyperparams& hp) {
  auto [A, B] = split_by_label(X, labels);
  return fit_classifier<Scalar>(A, B, hp);
}

template <typename Scalar>
DecisionValues<Scalar> decision_values(const TrkmClassifierModel<Scalar>& model, const MatrixX<Scalar>& X) {
  if (X.cols() != model.features()) {
    throw DimensionMismatch("model expects " + std::to_string(model.features()) + " features, input has " +
                            std::to_string(X.cols()));
  }
  const auto& hp = model.hyperparams;
  const MatrixX<Scalar> k_xa = gram(hp.kernel, X, model.A);
  const MatrixX<Scalar> k_xb = gram(hp.kernel, X, model.B);
  const VectorX<Scalar> row_a = k_xa.rowwise().sum();
  const VectorX<Scalar> row_b = k_xb.rowwise().sum();

  DecisionValues<Scalar> out;
  out.g1 = ((k_xa * model.h1 - row_b) / Scalar(hp.gamma1)).array() + model.b1;
  out.g2 = ((k_xb * model.h2 + row_a) / Scalar(hp.gamma2)).array() + model.b2;
  return out;
}

// sign(g1 + g2) with a zero score mapped to +1.
template <typename Scalar>
Eigen::VectorXi labels_from_scores(const VectorX<Scalar>& score) {
  return score.unaryExpr([](Scalar s) { return s >= Scalar(0) ? 1 : -1; });
}

template <typename Scalar>
Eigen::VectorXi predict_labels(const TrkmClassifierModel<Scalar>& model, const MatrixX<Scalar>& X) {
  const auto values = decision_values(model, X);
  return labels_from_scores<Scalar>(values.g1 + values.g2);
}

}  // namespace trkm

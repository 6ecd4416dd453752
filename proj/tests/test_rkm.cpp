#include <doctest.h>

#include <random>

#include "support/oracles.hpp"
#include "trkm/rkm.hpp"

using namespace trkm;

namespace {

// J(w, b, h) = gamma/2 w^T w + sum_i (1 - (x_i^T w + b) y_i) h_i - eta/2 sum_i h_i^2
double objective(const Eigen::MatrixXd& X, const Eigen::VectorXi& y, double gamma, double eta,
                 const Eigen::VectorXd& w, double b, const Eigen::VectorXd& h) {
  double j = 0.5 * gamma * w.squaredNorm() - 0.5 * eta * h.squaredNorm();
  for (Eigen::Index i = 0; i < X.rows(); ++i) j += (1.0 - (X.row(i).dot(w) + b) * y(i)) * h(i);
  return j;
}

}  // namespace

TEST_CASE("two symmetric points") {
  Eigen::MatrixXd X(2, 1);
  X << 1, -1;
  const Eigen::Vector2i y(1, -1);
  const auto m = fit_rkm<double>(X, y, 1.0, 1.0, KernelSpec::linear());
  CHECK(std::abs(m.b) < 1e-15);
  CHECK(m.h(0) == doctest::Approx(-m.h(1)));
  CHECK(predict_rkm(m, X) == y);
  CHECK(std::abs(m.h.sum()) < 1e-15);
}

TEST_CASE("zero score is +1") {
  Eigen::MatrixXd X(2, 1);
  X << 1, -1;
  const auto m = fit_rkm<double>(X, Eigen::Vector2i(1, -1), 1.0, 1.0, KernelSpec::linear());
  CHECK(predict_rkm(m, Eigen::MatrixXd::Zero(1, 1).eval())(0) == 1);
}

TEST_CASE("blobs are fitted perfectly and balance holds") {
  const auto [X, y] = oracle::blobs(1, 20);
  const auto m = fit_rkm<double>(X, y, 1.0, 1.0, KernelSpec::gaussian(1));
  CHECK(predict_rkm(m, X) == y);
  CHECK(std::abs(m.h.sum()) < 1e-10);
}

TEST_CASE("matches the oracle system") {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 7);
    const Eigen::MatrixXd X = oracle::uniform(rng, n, 2);
    Eigen::VectorXi y(n);
    for (int i = 0; i < n; ++i) y(i) = (rng() & 1) ? 1 : -1;
    const double gamma = 0.1 * (1 + trial % 7);
    const double eta = 0.05 * (1 + trial % 5);
    const auto m = fit_rkm<double>(X, y, gamma, eta, KernelSpec::gaussian(0.9));
    oracle::Col top(n);
    for (int i = 0; i < n; ++i) top[i] = y(i);
    const auto x = oracle::solve(oracle::bordered(oracle::gram(false, 0.9, X, X), gamma, eta, 1, top, 0));
    for (int i = 0; i < n; ++i) CHECK(std::abs(m.h(i) - double(x[i])) < 1e-9);
    CHECK(std::abs(m.b - double(x[n])) < 1e-9);
  }
}

TEST_CASE("linear kernel primal-dual agreement") {
  std::mt19937_64 rng(42);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 3 + static_cast<int>(rng() % 20);
    const Eigen::MatrixXd X = oracle::uniform(rng, n, 3);
    Eigen::VectorXi y(n);
    for (int i = 0; i < n; ++i) y(i) = X(i, 0) > 0 ? 1 : -1;
    const double gamma = 0.3 + trial;
    const auto m = fit_rkm<double>(X, y, gamma, 0.2, KernelSpec::linear());
    const Eigen::VectorXd w = X.transpose() * m.h / gamma;
    const Eigen::MatrixXd T = oracle::uniform(rng, 10, 3, -2, 2);
    CHECK((rkm_scores(m, T) - ((T * w).array() + m.b).matrix()).lpNorm<Eigen::Infinity>() <= 1e-10);
  }
}

TEST_CASE("objective gradient vanishes at the fit") {
  // the system's h is y .* h of the objective's hidden units
  std::mt19937_64 rng(43);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 4 + static_cast<int>(rng() % 10);
    const Eigen::MatrixXd X = oracle::uniform(rng, n, 2);
    Eigen::VectorXi y(n);
    for (int i = 0; i < n; ++i) y(i) = i % 2 ? 1 : -1;
    const double gamma = 0.5 + trial * 0.3;
    const double eta = 0.1 + trial * 0.05;
    const auto m = fit_rkm<double>(X, y, gamma, eta, KernelSpec::linear());
    Eigen::VectorXd w = X.transpose() * m.h / gamma;
    double b = m.b;
    Eigen::VectorXd hp = (m.h.array() * y.cast<double>().array()).matrix();

    const double step = 1e-6;
    const auto J = [&] { return objective(X, y, gamma, eta, w, b, hp); };
    const auto central = [&](double& v) {
      const double keep = v;
      v = keep + step;
      const double up = J();
      v = keep - step;
      const double down = J();
      v = keep;
      return (up - down) / (2 * step);
    };
    for (Eigen::Index k = 0; k < w.size(); ++k) CHECK(std::abs(central(w(k))) <= 1e-6);
    CHECK(std::abs(central(b)) <= 1e-6);
    for (Eigen::Index k = 0; k < hp.size(); ++k) CHECK(std::abs(central(hp(k))) <= 1e-6);
  }
}

TEST_CASE("input errors") {
  const Eigen::MatrixXd X = Eigen::MatrixXd::Ones(3, 2);
  CHECK_THROWS_AS(fit_rkm<double>(X, Eigen::Vector3i(1, -1, 1), 0, 1, KernelSpec::linear()), InvalidArgument);
  CHECK_THROWS_AS(fit_rkm<double>(X, Eigen::Vector2i(1, -1), 1, 1, KernelSpec::linear()), DimensionMismatch);
  CHECK_THROWS_AS(fit_rkm<double>(X, Eigen::Vector3i(1, 0, 1), 1, 1, KernelSpec::linear()), InvalidArgument);
  CHECK_THROWS_AS(fit_rkm<double>(Eigen::MatrixXd::Ones(1, 2), Eigen::VectorXi::Ones(1), 1, 1, KernelSpec::linear()),
                  TooFewSamples);
}

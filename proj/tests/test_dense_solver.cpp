#include <doctest.h>

#include <random>

#include "support/oracles.hpp"
#include "trkm/dense_solver.hpp"

using namespace trkm;

namespace {

BorderedSystem<double> random_system(std::mt19937_64& rng, int n) {
  BorderedSystem<double> s;
  const Eigen::MatrixXd M = oracle::uniform(rng, n, n);
  s.core = M * M.transpose() + 0.5 * Eigen::MatrixXd::Identity(n, n);
  s.border = oracle::uniform(rng, n, 1, 0.5, 1.5);
  s.border_sign = (rng() & 1) ? 1 : -1;
  s.rhs_top = oracle::uniform(rng, n, 1, -3, 3);
  s.rhs_bottom = std::uniform_real_distribution<double>(-3, 3)(rng);
  return s;
}

}  // namespace

TEST_CASE("identity core with symmetric rhs") {
  BorderedSystem<double> s{Eigen::MatrixXd::Identity(2, 2), Eigen::Vector2d(1, 1), 1, Eigen::Vector2d(1, 1), 2.0};
  const auto r = solve_bordered(s);
  CHECK(r.solution(0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(r.solution(1) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(std::abs(r.bias()) < 1e-14);
}

TEST_CASE("diagonal core, hand elimination") {
  // 2h1 + b = 3, 2h2 + b = 1, h1 + h2 = 2  ->  h = (1.5, 0.5), b = 0
  BorderedSystem<double> s{2.0 * Eigen::MatrixXd::Identity(2, 2), Eigen::Vector2d(1, 1), 1, Eigen::Vector2d(3, 1),
                           2.0};
  const auto r = solve_bordered(s);
  CHECK(r.solution(0) == doctest::Approx(1.5).epsilon(1e-14));
  CHECK(r.solution(1) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(std::abs(r.bias()) < 1e-14);
  CHECK(r.residual_norm < 1e-14);
  CHECK(r.condition_estimate >= 1.0);
}

TEST_CASE("zero row with zero border entry is singular") {
  Eigen::MatrixXd core(3, 3);
  core << 1, 0.2, 0, 0.2, 1, 0, 0, 0, 0;
  BorderedSystem<double> s{core, Eigen::Vector3d(1, 1, 0), 1, Eigen::Vector3d(1, 2, 3), 1.0};
  CHECK_THROWS_AS(solve_bordered(s), SingularSystem);
}

TEST_CASE("malformed systems") {
  BorderedSystem<double> s{Eigen::MatrixXd::Identity(2, 3), Eigen::Vector2d(1, 1), 1, Eigen::Vector2d(1, 1), 0.0};
  CHECK_THROWS_AS(solve_bordered(s), DimensionMismatch);
  s.core = Eigen::MatrixXd::Identity(2, 2);
  s.border = Eigen::Vector3d(1, 1, 1);
  CHECK_THROWS_AS(solve_bordered(s), DimensionMismatch);
  s.border = Eigen::Vector2d(1, 1);
  s.border_sign = 2;
  CHECK_THROWS_AS(solve_bordered(s), InvalidArgument);
  s.border_sign = 1;
  s.rhs_top(0) = std::nan("");
  CHECK_THROWS_AS(solve_bordered(s), InvalidArgument);
}

TEST_CASE("residual examples") {
  BorderedSystem<double> s{2.0 * Eigen::MatrixXd::Identity(2, 2), Eigen::Vector2d(1, 1), 1, Eigen::Vector2d(3, 1),
                           2.0};
  const Eigen::VectorXd exact = Eigen::Vector3d(1.5, 0.5, 0.0);
  CHECK(residual(s, exact) <= 1e-12);

  // zero x leaves the rhs
  CHECK(residual(s, Eigen::VectorXd::Zero(3).eval()) == doctest::Approx(3.0));

  // perturbing x(0) by eps moves row 1 by 2 eps and the border row by eps
  for (const double eps : {1e-6, 1e-3, 1.0}) {
    Eigen::VectorXd x = exact;
    x(0) += eps;
    CHECK(residual(s, x) == doctest::Approx(2 * eps).epsilon(1e-9));
  }
  CHECK_THROWS_AS(residual(s, Eigen::VectorXd::Ones(2).eval()), DimensionMismatch);
}

TEST_CASE("matches full-pivot oracle for n <= 8") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 8);
    const auto s = random_system(rng, n);
    oracle::Grid M(n + 1, oracle::Col(n + 1, 0));
    oracle::Col b(n + 1);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) M[i][j] = s.core(i, j);
      M[i][n] = s.border_sign * s.border(i);
      M[n][i] = s.border(i);
      b[i] = s.rhs_top(i);
    }
    b[n] = s.rhs_bottom;
    const auto expect = oracle::full_pivot_solve(M, b);
    const auto got = solve_bordered(s);
    for (int i = 0; i <= n; ++i) CHECK(std::abs(got.solution(i) - double(expect[i])) < 1e-9);
  }
}

TEST_CASE("solve-then-residual bound") {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 40);
    const auto s = random_system(rng, n);
    const auto r = solve_bordered(s);
    const double bnorm = std::max(1.0, std::max(s.rhs_top.lpNorm<Eigen::Infinity>(), std::abs(s.rhs_bottom)));
    CHECK(residual(s, r.solution) <= 1e-8 * bnorm);
    CHECK(r.residual_norm == doctest::Approx(residual(s, r.solution)));
  }
}

TEST_CASE("permutation equivariance") {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 12);
    const auto s = random_system(rng, n);
    Eigen::VectorXi perm = Eigen::VectorXi::LinSpaced(n, 0, n - 1);
    std::shuffle(perm.data(), perm.data() + n, rng);
    const Eigen::PermutationMatrix<Eigen::Dynamic> P(perm);
    BorderedSystem<double> t = s;
    t.core = P * s.core * P.transpose();
    t.border = P * s.border;
    t.rhs_top = P * s.rhs_top;
    const auto a = solve_bordered(s);
    const auto b = solve_bordered(t);
    const Eigen::VectorXd permuted = P * a.hidden();
    CHECK((permuted - b.hidden()).lpNorm<Eigen::Infinity>() < 1e-10);
    CHECK(a.bias() == doctest::Approx(b.bias()).epsilon(1e-10));
  }
}

TEST_CASE("templated on the scalar") {
  BorderedSystem<float> s{2.0f * Eigen::MatrixXf::Identity(2, 2), Eigen::Vector2f(1, 1), 1, Eigen::Vector2f(3, 1),
                          2.0f};
  const auto r = solve_bordered(s);
  CHECK(r.solution(0) == doctest::Approx(1.5).epsilon(1e-6));
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "lemsim/lp.hpp"

using lem::lp::kInf;
using lem::lp::Problem;
using lem::lp::Solution;
using lem::lp::Status;

namespace {

bool feasible(const Problem& p, const Eigen::VectorXd& x, double tol = 1e-7) {
  if ((p.A * x - p.b).cwiseAbs().maxCoeff() > tol) return false;
  for (Eigen::Index j = 0; j < p.cols(); ++j) {
    if (x[j] < p.lower[j] - tol || x[j] > p.upper[j] + tol) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("one variable pinned by an equality") {
  Problem p;
  p.resize(1, 1);
  p.A << 2.0;
  p.b << 6.0;
  p.c << 1.0;
  p.lower << 0.0;
  p.upper << kInf;
  auto s = lem::lp::solve(p);
  REQUIRE(s.status == Status::Optimal);
  CHECK(s.x[0] == doctest::Approx(3.0));
  CHECK(s.objective == doctest::Approx(3.0));
}

TEST_CASE("classic 2d lp with slacks") {
  // max x + y  s.t. x + 2y <= 4, 3x + y <= 6, x,y >= 0 -> (8/5, 6/5), obj 14/5.
  Problem p;
  p.resize(2, 4);
  p.A << 1, 2, 1, 0,
         3, 1, 0, 1;
  p.b << 4, 6;
  p.c << -1, -1, 0, 0;
  p.lower.setZero();
  p.upper.setConstant(kInf);
  auto s = lem::lp::solve(p);
  REQUIRE(s.status == Status::Optimal);
  CHECK(s.objective == doctest::Approx(-14.0 / 5.0));
  CHECK(s.x[0] == doctest::Approx(8.0 / 5.0));
  CHECK(s.x[1] == doctest::Approx(6.0 / 5.0));
}

TEST_CASE("bounded variable optimum at an upper bound") {
  // min -x - 2y  s.t. x + y = 3, 0 <= x <= 5, 0 <= y <= 2 -> x=1, y=2.
  Problem p;
  p.resize(1, 2);
  p.A << 1, 1;
  p.b << 3;
  p.c << -1, -2;
  p.lower << 0, 0;
  p.upper << 5, 2;
  auto s = lem::lp::solve(p);
  REQUIRE(s.status == Status::Optimal);
  CHECK(s.x[0] == doctest::Approx(1.0));
  CHECK(s.x[1] == doctest::Approx(2.0));
  CHECK(s.objective == doctest::Approx(-5.0));
}

TEST_CASE("negative lower bounds") {
  // min x  s.t. x + y = 0, -2 <= x <= 2, -1 <= y <= 1 -> x = -1.
  Problem p;
  p.resize(1, 2);
  p.A << 1, 1;
  p.b << 0;
  p.c << 1, 0;
  p.lower << -2, -1;
  p.upper << 2, 1;
  auto s = lem::lp::solve(p);
  REQUIRE(s.status == Status::Optimal);
  CHECK(s.x[0] == doctest::Approx(-1.0));
  CHECK(s.objective == doctest::Approx(-1.0));
}

TEST_CASE("infeasible by bounds") {
  // x + y = 10 with both variables capped at 4.
  Problem p;
  p.resize(1, 2);
  p.A << 1, 1;
  p.b << 10;
  p.c << 1, 1;
  p.lower << 0, 0;
  p.upper << 4, 4;
  auto s = lem::lp::solve(p);
  CHECK(s.status == Status::Infeasible);
  CHECK(s.infeasible_row == 0);
}

TEST_CASE("infeasible reports a violated row") {
  Problem p;
  p.resize(2, 2);
  p.A << 1, 0,
         1, 0;
  p.b << 1, 2;  // x = 1 and x = 2 simultaneously
  p.c << 0, 0;
  p.lower << 0, 0;
  p.upper << kInf, kInf;
  auto s = lem::lp::solve(p);
  REQUIRE(s.status == Status::Infeasible);
  CHECK(s.infeasible_row >= 0);
  CHECK(s.infeasible_row < 2);
}

TEST_CASE("unbounded direction is detected") {
  // min -x  s.t. x - y = 0, x,y >= 0 (both can grow forever).
  Problem p;
  p.resize(1, 2);
  p.A << 1, -1;
  p.b << 0;
  p.c << -1, 0;
  p.lower << 0, 0;
  p.upper << kInf, kInf;
  auto s = lem::lp::solve(p);
  CHECK(s.status == Status::Unbounded);
}

TEST_CASE("degenerate constraints do not cycle") {
  // Several redundant rows meeting at a single vertex.
  Problem p;
  p.resize(3, 5);
  p.A << 1, 1, 1, 0, 0,
         1, 1, 0, 1, 0,
         2, 2, 0, 0, 1;
  p.b << 2, 2, 4;
  p.c << -3, -1, 0, 0, 0;
  p.lower.setZero();
  p.upper.setConstant(kInf);
  auto s = lem::lp::solve(p);
  REQUIRE(s.status == Status::Optimal);
  CHECK(s.objective == doctest::Approx(-6.0));
  CHECK(feasible(p, s.x));
}

TEST_CASE("randomized: optimal solutions are feasible and beat random feasible points") {
  std::mt19937 gen(7);
  std::uniform_real_distribution<double> coef(-3.0, 3.0);
  std::uniform_real_distribution<double> pos(0.0, 2.0);
  int optimal_count = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const int m = 2 + static_cast<int>(gen() % 3);
    const int n = m + 2 + static_cast<int>(gen() % 3);
    Problem p;
    p.resize(m, n);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) p.A(i, j) = coef(gen);
    for (int j = 0; j < n; ++j) {
      p.c[j] = coef(gen);
      p.lower[j] = 0.0;
      p.upper[j] = 4.0;
    }
    // Build b from a known interior point so the problem is feasible.
    Eigen::VectorXd x0(n);
    for (int j = 0; j < n; ++j) x0[j] = pos(gen);
    p.b = p.A * x0;

    auto s = lem::lp::solve(p);
    REQUIRE(s.status == Status::Optimal);  // bounded box => never unbounded
    ++optimal_count;
    CHECK(feasible(p, s.x));
    CHECK(s.objective <= p.c.dot(x0) + 1e-7);
    CHECK(s.objective == doctest::Approx(p.c.dot(s.x)));

    // Deterministic: a second solve returns bit-identical iterates.
    auto s2 = lem::lp::solve(p);
    CHECK(s2.iterations == s.iterations);
    CHECK((s2.x - s.x).cwiseAbs().maxCoeff() == 0.0);
  }
  CHECK(optimal_count == 200);
}

TEST_CASE("randomized: perturbed objective never beats the reported optimum") {
  std::mt19937 gen(11);
  std::uniform_real_distribution<double> coef(-2.0, 2.0);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 5;
    Problem p;
    p.resize(2, n);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < n; ++j) p.A(i, j) = coef(gen);
    for (int j = 0; j < n; ++j) {
      p.c[j] = coef(gen);
      p.lower[j] = -1.0;
      p.upper[j] = 1.0;
    }
    Eigen::VectorXd x0 = Eigen::VectorXd::Zero(n);
    p.b = p.A * x0;
    auto s = lem::lp::solve(p);
    REQUIRE(s.status == Status::Optimal);
    // Sample feasible points by projecting random box points onto Ax=b via
    // the nullspace; every one must be no better than the LP optimum.
    Eigen::FullPivLU<Eigen::MatrixXd> lu(p.A);
    Eigen::MatrixXd null = lu.kernel();
    for (int k = 0; k < 20; ++k) {
      Eigen::VectorXd z(null.cols());
      for (int j = 0; j < z.size(); ++j) z[j] = coef(gen) * 0.2;
      Eigen::VectorXd cand = null * z;
      bool in_box = true;
      for (int j = 0; j < n; ++j)
        if (cand[j] < p.lower[j] || cand[j] > p.upper[j]) in_box = false;
      if (!in_box) continue;
      CHECK(p.c.dot(cand) >= s.objective - 1e-7);
    }
  }
}

#pragma once

#include <Eigen/Dense>
#include <limits>

namespace lem::lp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Linear program in equality standard form with bounded variables:
///   min c'x   s.t.   A x = b,   lower <= x <= upper
/// Inequalities must be converted by the caller with explicit slack columns.
struct Problem {
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
  Eigen::VectorXd c;
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  void resize(Eigen::Index rows, Eigen::Index cols);
  Eigen::Index rows() const { return A.rows(); }
  Eigen::Index cols() const { return A.cols(); }
};

enum class Status { Optimal, Infeasible, Unbounded };

struct Solution {
  Status status = Status::Infeasible;
  Eigen::VectorXd x;
  double objective = 0.0;
  /// Row index of a constraint that could not be satisfied (phase 1 failure).
  int infeasible_row = -1;
  int iterations = 0;
};

/// Two-phase primal simplex for bounded variables (full tableau).
/// Deterministic: Dantzig pricing with smallest-index tie break, Bland's
/// rule after a stall. Rows whose residual cannot be absorbed by a
/// singleton column get a phase-1 artificial.
Solution solve(const Problem& p);

}  // namespace lem::lp

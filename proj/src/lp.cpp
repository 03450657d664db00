#include "lemsim/lp.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace lem::lp {

namespace {

constexpr double kCostTol = 1e-9;
constexpr double kPivotTol = 1e-9;
constexpr double kFeasTol = 1e-7;
constexpr double kDegenStep = 1e-11;
constexpr int kStallLimit = 256;
constexpr int kMaxIterations = 200000;

enum class VarState { AtLower, AtUpper, Basic };

struct Tableau {
  Eigen::MatrixXd t;        // (m + 2) x ntot; last two rows are reduced costs
  Eigen::VectorXd xb;       // basic values, size m
  std::vector<int> basis;   // row -> column
  std::vector<VarState> state;
  std::vector<double> val;  // nonbasic values
  Eigen::VectorXd lo, up;
  int m = 0, ntot = 0, norig = 0;
  std::vector<int> art_row;  // artificial k -> original row
};

double start_value(double lo, double up) {
  if (std::isfinite(lo)) return lo;
  if (std::isfinite(up)) return up;
  return 0.0;
}

// Pivot on (row, col): updates tableau rows including cost rows.
void eliminate(Tableau& tb, int row, int col) {
  const double piv = tb.t(row, col);
  tb.t.row(row) /= piv;
  Eigen::VectorXd colv = tb.t.col(col);
  colv(row) = 0.0;  // keep the pivot row itself untouched
  tb.t.noalias() -= colv * tb.t.row(row);
  tb.t(row, col) = 1.0;
}

}  // namespace

void Problem::resize(Eigen::Index rows, Eigen::Index cols) {
  A = Eigen::MatrixXd::Zero(rows, cols);
  b = Eigen::VectorXd::Zero(rows);
  c = Eigen::VectorXd::Zero(cols);
  lower = Eigen::VectorXd::Constant(cols, 0.0);
  upper = Eigen::VectorXd::Constant(cols, kInf);
}

Solution solve(const Problem& p) {
  const int m = static_cast<int>(p.rows());
  const int n = static_cast<int>(p.cols());

  Solution sol;
  if (m == 0) {
    sol.x = Eigen::VectorXd::Zero(n);
    for (int j = 0; j < n; ++j) {
      if (p.c(j) > 0.0 || (p.c(j) == 0.0 && std::isfinite(p.lower(j))))
        sol.x(j) = p.lower(j);
      else
        sol.x(j) = p.upper(j);
      if (!std::isfinite(sol.x(j))) {
        sol.status = Status::Unbounded;
        return sol;
      }
    }
    sol.status = Status::Optimal;
    sol.objective = p.c.dot(sol.x);
    return sol;
  }

  // Nonbasic starting point and row residuals.
  Eigen::VectorXd v(n);
  for (int j = 0; j < n; ++j) v(j) = start_value(p.lower(j), p.upper(j));
  Eigen::VectorXd resid = p.b - p.A * v;

  // Crash: a column whose only nonzero sits in row i can absorb that row's
  // residual without phase-1 work, provided the implied value is in bounds.
  std::vector<int> col_nnz(n, 0), col_row(n, -1);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < m; ++i) {
      if (p.A(i, j) != 0.0) {
        ++col_nnz[j];
        col_row[j] = i;
      }
    }
  }
  std::vector<int> row_basic(m, -1);
  std::vector<double> row_basic_val(m, 0.0);
  std::vector<bool> used(n, false);
  for (int j = 0; j < n; ++j) {
    if (col_nnz[j] != 1 || used[j]) continue;
    const int i = col_row[j];
    if (row_basic[i] >= 0) continue;
    const double a = p.A(i, j);
    const double cand = v(j) + resid(i) / a;
    if (cand >= p.lower(j) - kFeasTol && cand <= p.upper(j) + kFeasTol) {
      row_basic[i] = j;
      row_basic_val[i] = std::min(std::max(cand, p.lower(j)), p.upper(j));
      used[j] = true;
    }
  }
  int n_art = 0;
  for (int i = 0; i < m; ++i)
    if (row_basic[i] < 0) ++n_art;

  Tableau tb;
  tb.m = m;
  tb.norig = n;
  tb.ntot = n + n_art;
  tb.t = Eigen::MatrixXd::Zero(m + 2, tb.ntot);
  tb.xb = Eigen::VectorXd::Zero(m);
  tb.basis.assign(m, -1);
  tb.state.assign(tb.ntot, VarState::AtLower);
  tb.val.assign(tb.ntot, 0.0);
  tb.lo = Eigen::VectorXd::Zero(tb.ntot);
  tb.up = Eigen::VectorXd::Zero(tb.ntot);
  tb.lo.head(n) = p.lower;
  tb.up.head(n) = p.upper;
  tb.art_row.assign(n_art, -1);

  std::vector<double> row_scale(m, 1.0);
  {
    int k = 0;
    for (int i = 0; i < m; ++i) {
      if (row_basic[i] >= 0) {
        tb.basis[i] = row_basic[i];
        tb.state[row_basic[i]] = VarState::Basic;
        tb.xb(i) = row_basic_val[i];
        row_scale[i] = p.A(i, row_basic[i]);
      } else {
        const int aj = n + k;
        tb.basis[i] = aj;
        tb.state[aj] = VarState::Basic;
        tb.xb(i) = std::abs(resid(i));
        tb.lo(aj) = 0.0;
        tb.up(aj) = kInf;
        tb.art_row[k] = i;
        row_scale[i] = resid(i) >= 0.0 ? 1.0 : -1.0;
        ++k;
      }
    }
  }
  for (int j = 0; j < n; ++j) {
    tb.val[j] = v(j);
    if (tb.state[j] != VarState::Basic && v(j) == p.upper(j) &&
        std::isfinite(p.upper(j)))
      tb.state[j] = VarState::AtUpper;
  }

  // B is a permuted diagonal by construction, so B^-1 A is a row rescale.
  for (int i = 0; i < m; ++i) tb.t.row(i).head(n) = p.A.row(i) / row_scale[i];
  for (int k = 0; k < n_art; ++k) tb.t(tb.art_row[k], n + k) = 1.0;

  const int phase1_row = m;
  const int phase2_row = m + 1;
  // Reduced costs d = c - cB' * T for both objectives.
  {
    Eigen::RowVectorXd cb1 = Eigen::RowVectorXd::Zero(m);
    Eigen::RowVectorXd cb2 = Eigen::RowVectorXd::Zero(m);
    for (int i = 0; i < m; ++i) {
      if (tb.basis[i] >= n)
        cb1(i) = 1.0;
      else
        cb2(i) = p.c(tb.basis[i]);
    }
    tb.t.row(phase1_row).setZero();
    for (int k = 0; k < n_art; ++k) tb.t(phase1_row, n + k) = 1.0;
    tb.t.row(phase1_row) -= cb1 * tb.t.topRows(m);
    tb.t.row(phase2_row).setZero();
    tb.t.row(phase2_row).head(n) = p.c.transpose();
    tb.t.row(phase2_row) -= cb2 * tb.t.topRows(m);
  }

  int iterations = 0;
  auto run_phase = [&](int cost_row, bool phase1) -> Status {
    int stall = 0;
    bool bland = false;
    for (;;) {
      if (++iterations > kMaxIterations)
        throw std::runtime_error("lp::solve: iteration limit exceeded");
      // Pricing.
      int je = -1;
      double best = kCostTol;
      for (int j = 0; j < tb.ntot; ++j) {
        if (tb.state[j] == VarState::Basic) continue;
        if (tb.lo(j) == tb.up(j)) continue;  // fixed (incl. pinned artificials)
        const double d = tb.t(cost_row, j);
        double viol = 0.0;
        if (tb.state[j] == VarState::AtLower)
          viol = -d;
        else
          viol = d;
        if (viol > best) {
          je = j;
          best = viol;
          if (bland) break;
        }
      }
      if (je < 0) return Status::Optimal;

      const double sigma = tb.state[je] == VarState::AtLower ? 1.0 : -1.0;
      double tbest = tb.up(je) - tb.lo(je);  // bound flip distance (may be inf)
      int leave = -1;
      double leave_coef = 0.0;
      for (int i = 0; i < m; ++i) {
        const double coef = tb.t(i, je);
        const double a = sigma * coef;
        if (a > kPivotTol) {
          const double lim = (tb.xb(i) - tb.lo(tb.basis[i])) / a;
          if (lim < tbest - 1e-12 ||
              (lim < tbest + 1e-12 &&
               (leave < 0 || std::abs(coef) > std::abs(leave_coef)))) {
            tbest = std::max(lim, 0.0);
            leave = i;
            leave_coef = coef;
          }
        } else if (a < -kPivotTol) {
          if (!std::isfinite(tb.up(tb.basis[i]))) continue;
          const double lim = (tb.up(tb.basis[i]) - tb.xb(i)) / (-a);
          if (lim < tbest - 1e-12 ||
              (lim < tbest + 1e-12 &&
               (leave < 0 || std::abs(coef) > std::abs(leave_coef)))) {
            tbest = std::max(lim, 0.0);
            leave = i;
            leave_coef = coef;
          }
        }
      }
      if (!std::isfinite(tbest)) return Status::Unbounded;

      if (tbest < kDegenStep) {
        if (++stall > kStallLimit) bland = true;
      } else {
        stall = 0;
        bland = false;
      }

      tb.xb -= (sigma * tbest) * tb.t.col(je).head(m);
      const double enter_val = tb.val[je] + sigma * tbest;
      if (leave < 0) {
        // Bound flip, no basis change.
        tb.state[je] =
            tb.state[je] == VarState::AtLower ? VarState::AtUpper : VarState::AtLower;
        tb.val[je] = enter_val;
        continue;
      }
      const int jl = tb.basis[leave];
      const bool hit_lower = sigma * leave_coef > 0.0;
      tb.state[jl] = hit_lower ? VarState::AtLower : VarState::AtUpper;
      tb.val[jl] = hit_lower ? tb.lo(jl) : tb.up(jl);
      tb.basis[leave] = je;
      tb.state[je] = VarState::Basic;
      tb.xb(leave) = enter_val;
      eliminate(tb, leave, je);
      (void)phase1;
    }
  };

  if (n_art > 0) {
    const Status st = run_phase(phase1_row, true);
    (void)st;  // phase 1 objective is bounded below by zero
    double infeas = 0.0;
    int bad_row = -1;
    for (int i = 0; i < m; ++i) {
      if (tb.basis[i] >= n && tb.xb(i) > kFeasTol) {
        infeas += tb.xb(i);
        if (bad_row < 0) bad_row = tb.art_row[tb.basis[i] - n];
      }
    }
    for (int j = n; j < tb.ntot; ++j) {
      if (tb.state[j] != VarState::Basic && tb.val[j] > kFeasTol) {
        infeas += tb.val[j];
        if (bad_row < 0) bad_row = tb.art_row[j - n];
      }
    }
    if (infeas > 1e-6) {
      sol.status = Status::Infeasible;
      sol.infeasible_row = bad_row;
      sol.iterations = iterations;
      return sol;
    }
    // Pin artificials for phase 2.
    for (int j = n; j < tb.ntot; ++j) {
      tb.lo(j) = 0.0;
      tb.up(j) = 0.0;
      if (tb.state[j] != VarState::Basic) tb.val[j] = 0.0;
    }
  }

  const Status st2 = run_phase(phase2_row, false);
  if (st2 == Status::Unbounded) {
    sol.status = Status::Unbounded;
    sol.iterations = iterations;
    return sol;
  }

  sol.x = Eigen::VectorXd::Zero(n);
  for (int j = 0; j < n; ++j)
    if (tb.state[j] != VarState::Basic) sol.x(j) = tb.val[j];
  for (int i = 0; i < m; ++i)
    if (tb.basis[i] < n) sol.x(tb.basis[i]) = tb.xb(i);
  sol.status = Status::Optimal;
  sol.objective = p.c.dot(sol.x);
  sol.iterations = iterations;
  return sol;
}

}  // namespace lem::lp

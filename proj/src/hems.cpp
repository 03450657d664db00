#include "lemsim/hems.hpp"

#include <algorithm>
#include <cmath>

#include "lemsim/lp.hpp"

namespace lem::hems {

namespace {

constexpr double kBalanceTol = 1e-6;

// No-battery dispatch is separable: each slot has exactly one feasible
// direction, so the LP reduces to a direct assignment.
DispatchPlan solve_no_battery(const HouseholdState& state, int first_slot,
                              const std::vector<double>& d,
                              const std::vector<double>& a1,
                              const std::vector<double>& a2,
                              const std::vector<char>& sell_allowed) {
  const int w = static_cast<int>(d.size());
  DispatchPlan plan;
  plan.first_slot = first_slot;
  plan.x1.assign(w, 0.0);
  plan.x2.assign(w, 0.0);
  plan.x3.assign(w, 0.0);
  const double cu = static_cast<double>(state.grid_limit_wh);
  for (int k = 0; k < w; ++k) {
    if (d[k] > kBalanceTol) {
      if (d[k] > cu + kBalanceTol)
        throw InfeasibleError("demand exceeds grid limit", first_slot + k);
      plan.x2[k] = d[k];
      plan.objective_eur += a2[k] * d[k];
    } else if (d[k] < -kBalanceTol) {
      if (!sell_allowed[k] || d[k] < -cu - kBalanceTol)
        throw InfeasibleError("excess cannot be exported", first_slot + k);
      plan.x1[k] = d[k];
      plan.objective_eur += a1[k] * d[k];
    }
  }
  return plan;
}

}  // namespace

DispatchPlan solve_allocation_lp(const HouseholdState& state, int first_slot,
                                 const std::vector<double>& d,
                                 const std::vector<double>& a1,
                                 const std::vector<double>& a2,
                                 const std::vector<char>& sell_allowed) {
  const int w = static_cast<int>(d.size());
  if (w == 0 || first_slot + w != kSlotsPerDay)
    throw std::invalid_argument("window must cover first_slot..143");
  if (!state.has_battery || state.capacity_wh == 0 || state.battery_limit_wh == 0)
    return solve_no_battery(state, first_slot, d, a1, a2, sell_allowed);

  // Columns, later slots first so degenerate price ties resolve to the
  // latest feasible slot (battery action deferred as long as possible).
  enum VarKind { kX1, kX2, kX3p, kX3n, kU, kSlack };
  struct Col {
    VarKind kind;
    int k;  // window position
  };
  std::vector<Col> cols;
  cols.reserve(5 * w + 1);
  for (int k = w - 1; k >= 0; --k)
    if (sell_allowed[k]) cols.push_back({kX1, k});
  for (int k = w - 1; k >= 0; --k) cols.push_back({kX2, k});
  for (int k = w - 1; k >= 0; --k) cols.push_back({kX3p, k});
  for (int k = w - 1; k >= 0; --k) cols.push_back({kX3n, k});
  for (int k = w - 1; k >= 0; --k) cols.push_back({kU, k});
  cols.push_back({kSlack, 0});

  // Rows: w balance, w cumulative-SOC, 1 throughput.
  const int rows = 2 * w + 1;
  lp::Problem p;
  p.resize(rows, static_cast<Eigen::Index>(cols.size()));

  const double e0 = static_cast<double>(state.soc_wh);
  const double cap = static_cast<double>(state.capacity_wh);
  const double cu = static_cast<double>(state.grid_limit_wh);
  const double cs = static_cast<double>(state.battery_limit_wh);
  const double restore = e0 - static_cast<double>(state.initial_soc_wh);
  const double budget = std::max(
      0.0, static_cast<double>(state.throughput_cap_wh() - state.throughput_used_wh));

  for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(cols.size()); ++j) {
    const auto [kind, k] = cols[j];
    switch (kind) {
      case kX1:
        p.A(k, j) = 1.0;
        p.c(j) = a1[k];
        p.lower(j) = -cu;
        p.upper(j) = 0.0;
        break;
      case kX2:
        p.A(k, j) = 1.0;
        p.c(j) = a2[k];
        p.lower(j) = 0.0;
        p.upper(j) = cu;
        break;
      case kX3p:
      case kX3n: {
        const double sign = kind == kX3p ? 1.0 : -1.0;
        p.A(k, j) = sign;
        for (int r = k; r < w; ++r) p.A(w + r, j) = sign;  // cumulative rows
        p.A(2 * w, j) = 1.0;                               // throughput
        p.lower(j) = 0.0;
        p.upper(j) = cs;
        break;
      }
      case kU:
        p.A(w + k, j) = -1.0;
        if (k == w - 1) {  // end-of-day restoration e_T = e_0
          p.lower(j) = restore;
          p.upper(j) = restore;
        } else {
          p.lower(j) = e0 - cap;
          p.upper(j) = e0;
        }
        break;
      case kSlack:
        p.A(2 * w, j) = 1.0;
        p.lower(j) = 0.0;
        p.upper(j) = budget;
        break;
    }
  }
  for (int k = 0; k < w; ++k) p.b(k) = d[k];
  p.b(2 * w) = budget;

  const lp::Solution sol = lp::solve(p);
  if (sol.status == lp::Status::Infeasible) {
    const int slot =
        sol.infeasible_row >= 0 && sol.infeasible_row < w
            ? first_slot + sol.infeasible_row
            : -1;
    throw InfeasibleError("household dispatch infeasible", slot);
  }
  if (sol.status != lp::Status::Optimal)
    throw std::runtime_error("household dispatch LP unbounded");

  DispatchPlan plan;
  plan.first_slot = first_slot;
  plan.x1.assign(w, 0.0);
  plan.x2.assign(w, 0.0);
  plan.x3.assign(w, 0.0);
  std::vector<double> x3p(w, 0.0), x3n(w, 0.0);
  for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(cols.size()); ++j) {
    const auto [kind, k] = cols[j];
    const double v = sol.x(j);
    switch (kind) {
      case kX1: plan.x1[k] = v; break;
      case kX2: plan.x2[k] = v; break;
      case kX3p: x3p[k] = v; break;
      case kX3n: x3n[k] = v; break;
      default: break;
    }
  }
  // A degenerate vertex may carry simultaneous charge and discharge; cancel
  // the overlap (same balance, strictly less throughput).
  for (int k = 0; k < w; ++k) {
    const double both = std::min(x3p[k], x3n[k]);
    plan.x3[k] = (x3p[k] - both) - (x3n[k] - both);
  }
  plan.objective_eur = sol.objective;
  return plan;
}

OfferPlan plan_offers(const HouseholdState& state, const Forecast& fc,
                      const scenario::LimitPrices& prices, int hour) {
  const int t0 = kSlotsPerHour * hour;
  const int w = kSlotsPerDay - t0;
  std::vector<double> d(w), a1(w), a2(w);
  std::vector<char> sell(w);
  for (int k = 0; k < w; ++k) {
    const int t = t0 + k;
    d[k] = static_cast<double>(fc.load_wh[t] - fc.gen_wh[t]);
    sell[k] = state.has_pv && fc.gen_wh[t] > fc.load_wh[t];
    a1[k] = sell[k] ? static_cast<double>(prices.ask_milli[t]) * 1e-6 : 0.0;
    a2[k] = static_cast<double>(prices.bid_milli[t]) * 1e-6;
  }
  OfferPlan op;
  op.plan = solve_allocation_lp(state, t0, d, a1, a2, sell);
  for (int k = 0; k < std::min(w, kSlotsPerHour); ++k) {
    const int t = t0 + k;
    const std::int64_t v =
        std::llround(op.plan.x1[k] + op.plan.x2[k]);  // v-hat, Wh
    if (v == 0) continue;
    auction::Order o;
    o.owner = state.id;
    o.slot = t;
    if (v > 0) {
      o.side = auction::Side::Buy;
      o.volume_wh = v;
      o.limit_price = prices.bid_milli[t];
    } else {
      o.side = auction::Side::Sell;
      o.volume_wh = -v;
      o.limit_price = prices.ask_milli[t];
    }
    op.orders.push_back(o);
  }
  return op;
}

DispatchPlan finalize_flows(const HouseholdState& state, const Forecast& fc,
                            const std::array<std::int64_t, kSlotsPerDay>& v_o_wh,
                            const scenario::Tariff& tariff, int hour) {
  const int t0 = kSlotsPerHour * hour;
  const int w = kSlotsPerDay - t0;
  std::vector<double> d(w), a1(w), a2(w);
  std::vector<char> sell(w);
  for (int k = 0; k < w; ++k) {
    const int t = t0 + k;
    d[k] = static_cast<double>(fc.load_wh[t] - fc.gen_wh[t] - v_o_wh[t]);
    sell[k] = state.has_pv && fc.gen_wh[t] > fc.load_wh[t];
    a1[k] = sell[k] ? static_cast<double>(tariff.fit_milli) * 1e-6 : 0.0;
    a2[k] = static_cast<double>(tariff.p_u_milli[t]) * 1e-6;
  }
  return solve_allocation_lp(state, t0, d, a1, a2, sell);
}

}  // namespace lem::hems

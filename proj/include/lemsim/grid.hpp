#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace lem::grid {

using Complex = std::complex<double>;

constexpr int kPhaseA = 0;
constexpr int kPhaseB = 1;
constexpr int kPhaseC = 2;
constexpr int kNeutral = 3;
constexpr double kSlotHours = 1.0 / 6.0;

struct LineSection {
  int parent = 0;
  int child = 0;
  std::array<double, 4> r_ohm{};  // a, b, c, neutral
};

struct HouseAttachment {
  int house = 0;
  int bus = 0;
  int phase = kPhaseA;  // a, b or c
};

/// Radial 4-wire feeder. Bus 0 is the transformer secondary; the neutral is
/// solidly grounded there. Sections are resistive (no reactance data).
struct NetworkModel {
  double rated_va = 160e3;
  double v_line_to_line = 410.0;
  double loss_leakage = 0.002;  // C_L
  double loss_copper = 0.010;   // C_C
  int bus_count = 1;
  std::vector<LineSection> sections;
  std::vector<HouseAttachment> houses;

  double nominal_ln_voltage() const { return v_line_to_line / std::sqrt(3.0); }
  double loss_coeff() const { return loss_leakage + loss_copper; }
  void validate() const;  // radial topology, positive resistances
};

struct PowerFlowError : std::runtime_error {
  PowerFlowError(const std::string& what, double mismatch)
      : std::runtime_error(what), worst_mismatch(mismatch) {}
  double worst_mismatch = 0.0;
};

struct PhasorSet {
  // [bus][conductor] line-to-ground voltage; neutral voltage explicit.
  std::vector<std::array<Complex, 4>> bus_v;
  // [section][conductor] current flowing parent -> child.
  std::vector<std::array<Complex, 4>> section_i;

  Complex line_to_neutral(int bus, int phase) const {
    return bus_v[bus][phase] - bus_v[bus][kNeutral];
  }
};

/// Signed house demand in W for one slot (positive = consumption).
/// Constant-power loads, backward/forward sweep.
PhasorSet run_power_flow(const NetworkModel& net,
                         const std::vector<std::pair<int, double>>& injections_w,
                         int max_iterations = 100, double tolerance = 1e-8);

/// Per-phase real power on the transformer secondary, positive towards LV.
std::array<double, 3> secondary_power_w(const NetworkModel& net,
                                        const PhasorSet& ps);

struct TransformerFlows {
  double p_in_w = 0.0;   // MV -> LV, measured on primary windings
  double p_out_w = 0.0;  // LV -> MV, measured on secondary windings
  double p_abs_w() const { return p_in_w + p_out_w; }
};

TransformerFlows transformer_flows(const NetworkModel& net, const PhasorSet& ps);

/// Eq: Tr_loss = sum_t P_abs,t (C_L + C_C), scaled by the slot length.
double transformer_losses_wh(std::span<const double> p_abs_w, double c_l, double c_c);

struct LineLosses {
  double phase_wh = 0.0;
  double neutral_wh = 0.0;
};

LineLosses line_losses_wh(const NetworkModel& net,
                          std::span<const PhasorSet> series);

struct PeakMetrics {
  double p_max_w = 0.0;
  std::optional<double> par;  // undefined for an all-zero series
};

PeakMetrics peak_metrics(std::span<const double> p_abs_w);

struct SymmetricalComponents {
  Complex zero;
  Complex positive;
  Complex negative;
};

SymmetricalComponents symmetrical_components(Complex va, Complex vb, Complex vc);

struct VoltageMetrics {
  std::array<double, 3> v_delta_max_pct{};
  std::array<double, 3> v_delta_mean_pct{};
  double vuf_max_pct = 0.0;
  double vuf_mean_pct = 0.0;
};

VoltageMetrics voltage_metrics(const NetworkModel& net,
                               std::span<const PhasorSet> series);

/// All quality-of-supply metrics for one simulated day.
struct MetricsReport {
  double e_in_wh = 0.0;
  double e_out_wh = 0.0;
  double tr_loss_wh = 0.0;
  double line_loss_phase_wh = 0.0;
  double line_loss_neutral_wh = 0.0;
  double p_max_w = 0.0;
  std::optional<double> par;
  VoltageMetrics voltage;
  std::vector<double> p_in_w;   // per slot
  std::vector<double> p_out_w;  // per slot
};

/// Runs the power flow for every slot and assembles the report.
/// injections_w[slot] lists signed W per house.
MetricsReport compute_metrics(
    const NetworkModel& net,
    const std::vector<std::vector<std::pair<int, double>>>& injections_w);

NetworkModel parse_network(const std::string& text);
NetworkModel load_network_file(const std::string& path);

}  // namespace lem::grid

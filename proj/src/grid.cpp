#include "lemsim/grid.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

namespace lem::grid {

namespace {

constexpr Complex kRotA{-0.5, 0.8660254037844386};   // e^{ j 2pi/3 }
constexpr Complex kRotA2{-0.5, -0.8660254037844386};  // e^{ -j 2pi/3 }

std::vector<int> section_order(const NetworkModel& net) {
  // Sections sorted so that a parent is always processed before its child.
  std::vector<int> depth(net.bus_count, -1);
  depth[0] = 0;
  std::vector<int> order;
  order.reserve(net.sections.size());
  std::vector<bool> placed(net.sections.size(), false);
  for (std::size_t placed_count = 0; placed_count < net.sections.size();) {
    bool progress = false;
    for (std::size_t s = 0; s < net.sections.size(); ++s) {
      if (placed[s]) continue;
      const auto& sec = net.sections[s];
      if (depth[sec.parent] >= 0) {
        depth[sec.child] = depth[sec.parent] + 1;
        order.push_back(static_cast<int>(s));
        placed[s] = true;
        ++placed_count;
        progress = true;
      }
    }
    if (!progress) throw std::runtime_error("network is not a connected radial tree");
  }
  return order;
}

}  // namespace

void NetworkModel::validate() const {
  std::vector<int> child_seen(bus_count, 0);
  for (const auto& s : sections) {
    if (s.parent < 0 || s.parent >= bus_count || s.child <= 0 || s.child >= bus_count)
      throw std::runtime_error("section references unknown bus");
    if (++child_seen[s.child] > 1)
      throw std::runtime_error("bus has more than one parent (non-radial)");
    for (double r : s.r_ohm)
      if (r <= 0.0) throw std::runtime_error("section resistance must be positive");
  }
  for (int b = 1; b < bus_count; ++b)
    if (child_seen[b] == 0) throw std::runtime_error("bus unreachable from source");
  for (const auto& h : houses) {
    if (h.bus < 0 || h.bus >= bus_count)
      throw std::runtime_error("house attached to unknown bus");
    if (h.phase < kPhaseA || h.phase > kPhaseC)
      throw std::runtime_error("house attached to invalid phase");
  }
  section_order(*this);  // throws if disconnected
}

PhasorSet run_power_flow(const NetworkModel& net,
                         const std::vector<std::pair<int, double>>& injections_w,
                         int max_iterations, double tolerance) {
  const double vn = net.nominal_ln_voltage();
  const std::array<Complex, 4> source{vn * Complex{1.0, 0.0}, vn * kRotA2,
                                      vn * kRotA, Complex{0.0, 0.0}};

  // House index -> demand in W.
  std::map<int, double> demand;
  for (const auto& [house, w] : injections_w) demand[house] = w;
  struct Load {
    int bus;
    int phase;
    double p_w;
  };
  std::vector<Load> loads;
  for (const auto& h : net.houses) {
    auto it = demand.find(h.house);
    if (it == demand.end()) continue;
    if (it->second != 0.0) loads.push_back({h.bus, h.phase, it->second});
    demand.erase(it);
  }
  if (!demand.empty())
    throw std::runtime_error("injection references unknown house id " +
                             std::to_string(demand.begin()->first));

  const auto order = section_order(net);

  PhasorSet ps;
  ps.bus_v.assign(net.bus_count, source);
  ps.section_i.assign(net.sections.size(), {});

  std::vector<Complex> load_i(loads.size());
  double worst = 0.0;
  for (int it = 0; it < max_iterations; ++it) {
    // Load currents at present voltages.
    std::vector<std::array<Complex, 4>> acc(net.bus_count, std::array<Complex, 4>{});
    for (std::size_t k = 0; k < loads.size(); ++k) {
      const auto& ld = loads[k];
      const Complex v = ps.bus_v[ld.bus][ld.phase] - ps.bus_v[ld.bus][kNeutral];
      if (std::abs(v) < 1.0)
        throw PowerFlowError("voltage collapse during sweep", std::abs(v));
      load_i[k] = std::conj(Complex{ld.p_w, 0.0} / v);
      acc[ld.bus][ld.phase] += load_i[k];
      acc[ld.bus][kNeutral] -= load_i[k];
    }
    // Backward sweep: accumulate section currents leaf to root.
    for (auto s = order.rbegin(); s != order.rend(); ++s) {
      const auto& sec = net.sections[*s];
      for (int c = 0; c < 4; ++c) {
        ps.section_i[*s][c] = acc[sec.child][c];
        acc[sec.parent][c] += acc[sec.child][c];
      }
    }
    // Forward sweep: propagate voltages root to leaf.
    for (int s : order) {
      const auto& sec = net.sections[s];
      for (int c = 0; c < 4; ++c)
        ps.bus_v[sec.child][c] =
            ps.bus_v[sec.parent][c] - sec.r_ohm[c] * ps.section_i[s][c];
    }
    // Converged when the power the sweep currents deliver at the new voltages
    // matches every setpoint.
    worst = 0.0;
    for (std::size_t k = 0; k < loads.size(); ++k) {
      const auto& ld = loads[k];
      const Complex v = ps.bus_v[ld.bus][ld.phase] - ps.bus_v[ld.bus][kNeutral];
      worst = std::max(worst, std::abs(v * std::conj(load_i[k]) - ld.p_w));
    }
    if (worst <= tolerance * net.rated_va) return ps;
  }
  throw PowerFlowError("power flow did not converge after " +
                           std::to_string(max_iterations) + " iterations",
                       worst);
}

std::array<double, 3> secondary_power_w(const NetworkModel& net,
                                        const PhasorSet& ps) {
  std::array<Complex, 4> head{};
  for (std::size_t s = 0; s < net.sections.size(); ++s) {
    if (net.sections[s].parent == 0)
      for (int c = 0; c < 4; ++c) head[c] += ps.section_i[s][c];
  }
  std::array<double, 3> p{};
  for (int ph = 0; ph < 3; ++ph)
    p[ph] = (ps.bus_v[0][ph] * std::conj(head[ph])).real();
  return p;
}

TransformerFlows transformer_flows(const NetworkModel& net, const PhasorSet& ps) {
  const auto p = secondary_power_w(net, ps);
  TransformerFlows f;
  const double c = net.loss_coeff();
  for (double pph : p) {
    // Primary inflow carries the transformer loss on top of what the
    // secondary delivers; reverse flow is measured on the secondary.
    if (pph > 0.0) f.p_in_w += pph * (1.0 + c);
    if (pph < 0.0) f.p_out_w += -pph;
  }
  return f;
}

double transformer_losses_wh(std::span<const double> p_abs_w, double c_l,
                             double c_c) {
  double sum = 0.0;
  for (double p : p_abs_w) {
    if (p < 0.0) throw std::invalid_argument("P_abs must be non-negative");
    sum += p * (c_l + c_c);
  }
  return sum * kSlotHours;
}

LineLosses line_losses_wh(const NetworkModel& net,
                          std::span<const PhasorSet> series) {
  LineLosses out;
  for (const auto& ps : series) {
    for (std::size_t s = 0; s < net.sections.size(); ++s) {
      for (int c = 0; c < 4; ++c) {
        const double loss =
            net.sections[s].r_ohm[c] * std::norm(ps.section_i[s][c]) * kSlotHours;
        if (c == kNeutral)
          out.neutral_wh += loss;
        else
          out.phase_wh += loss;
      }
    }
  }
  return out;
}

PeakMetrics peak_metrics(std::span<const double> p_abs_w) {
  PeakMetrics pm;
  double sum = 0.0;
  for (double p : p_abs_w) {
    pm.p_max_w = std::max(pm.p_max_w, p);
    sum += p;
  }
  if (sum > 0.0)
    pm.par = static_cast<double>(p_abs_w.size()) * pm.p_max_w / sum;
  return pm;
}

SymmetricalComponents symmetrical_components(Complex va, Complex vb, Complex vc) {
  SymmetricalComponents sc;
  sc.zero = (va + vb + vc) / 3.0;
  sc.positive = (va + kRotA * vb + kRotA2 * vc) / 3.0;
  sc.negative = (va + kRotA2 * vb + kRotA * vc) / 3.0;
  return sc;
}

VoltageMetrics voltage_metrics(const NetworkModel& net,
                               std::span<const PhasorSet> series) {
  VoltageMetrics vm;
  const double vu = net.nominal_ln_voltage();
  std::array<double, 3> delta_sum{};
  double vuf_sum = 0.0;
  std::size_t samples = 0;
  vm.v_delta_max_pct = {-1e300, -1e300, -1e300};
  for (const auto& ps : series) {
    for (int bus = 0; bus < net.bus_count; ++bus) {
      for (int ph = 0; ph < 3; ++ph) {
        const double mag = std::abs(ps.line_to_neutral(bus, ph));
        const double delta = 100.0 * (mag - vu) / vu;
        vm.v_delta_max_pct[ph] = std::max(vm.v_delta_max_pct[ph], delta);
        delta_sum[ph] += delta;
      }
      const auto sc = symmetrical_components(ps.line_to_neutral(bus, kPhaseA),
                                             ps.line_to_neutral(bus, kPhaseB),
                                             ps.line_to_neutral(bus, kPhaseC));
      if (std::abs(sc.positive) == 0.0)
        throw std::runtime_error("VUF undefined: zero positive-sequence voltage");
      const double vuf = 100.0 * std::abs(sc.negative) / std::abs(sc.positive);
      vm.vuf_max_pct = std::max(vm.vuf_max_pct, vuf);
      vuf_sum += vuf;
      ++samples;
    }
  }
  if (samples > 0) {
    for (int ph = 0; ph < 3; ++ph)
      vm.v_delta_mean_pct[ph] = delta_sum[ph] / static_cast<double>(samples);
    vm.vuf_mean_pct = vuf_sum / static_cast<double>(samples);
  }
  return vm;
}

MetricsReport compute_metrics(
    const NetworkModel& net,
    const std::vector<std::vector<std::pair<int, double>>>& injections_w) {
  MetricsReport rep;
  std::vector<PhasorSet> series;
  series.reserve(injections_w.size());
  std::vector<double> p_abs;
  for (const auto& slot_inj : injections_w) {
    series.push_back(run_power_flow(net, slot_inj));
    const auto f = transformer_flows(net, series.back());
    rep.p_in_w.push_back(f.p_in_w);
    rep.p_out_w.push_back(f.p_out_w);
    p_abs.push_back(f.p_abs_w());
    rep.e_in_wh += f.p_in_w * kSlotHours;
    rep.e_out_wh += f.p_out_w * kSlotHours;
  }
  rep.tr_loss_wh = transformer_losses_wh(p_abs, net.loss_leakage, net.loss_copper);
  const auto ll = line_losses_wh(net, series);
  rep.line_loss_phase_wh = ll.phase_wh;
  rep.line_loss_neutral_wh = ll.neutral_wh;
  const auto pk = peak_metrics(p_abs);
  rep.p_max_w = pk.p_max_w;
  rep.par = pk.par;
  rep.voltage = voltage_metrics(net, series);
  return rep;
}

NetworkModel parse_network(const std::string& text) {
  NetworkModel net;
  std::map<std::string, int> bus_ids;
  auto bus_of = [&](const std::string& name) {
    auto [it, fresh] = bus_ids.emplace(name, static_cast<int>(bus_ids.size()));
    if (fresh) net.bus_count = static_cast<int>(bus_ids.size());
    return it->second;
  };

  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string kind;
    if (!(ls >> kind)) continue;
    if (kind == "transformer") {
      std::string kv;
      while (ls >> kv) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos)
          throw std::runtime_error("bad transformer field at line " +
                                   std::to_string(lineno));
        const std::string key = kv.substr(0, eq);
        const std::string value = kv.substr(eq + 1);
        if (key == "kva")
          net.rated_va = std::stod(value) * 1e3;
        else if (key == "vll")
          net.v_line_to_line = std::stod(value);
        else if (key == "cl")
          net.loss_leakage = std::stod(value);
        else if (key == "cc")
          net.loss_copper = std::stod(value);
        else if (key == "bus")
          bus_of(value);
        else
          throw std::runtime_error("unknown transformer field '" + key + "'");
      }
    } else if (kind == "line") {
      std::string parent, child;
      LineSection sec;
      if (!(ls >> parent >> child >> sec.r_ohm[0] >> sec.r_ohm[1] >> sec.r_ohm[2] >>
            sec.r_ohm[3]))
        throw std::runtime_error("bad line record at line " + std::to_string(lineno));
      sec.parent = bus_of(parent);
      sec.child = bus_of(child);
      net.sections.push_back(sec);
    } else if (kind == "house") {
      HouseAttachment h;
      std::string bus, phase;
      if (!(ls >> h.house >> bus >> phase))
        throw std::runtime_error("bad house record at line " + std::to_string(lineno));
      h.bus = bus_of(bus);
      if (phase == "a")
        h.phase = kPhaseA;
      else if (phase == "b")
        h.phase = kPhaseB;
      else if (phase == "c")
        h.phase = kPhaseC;
      else
        throw std::runtime_error("bad phase '" + phase + "' at line " +
                                 std::to_string(lineno));
      net.houses.push_back(h);
    } else {
      throw std::runtime_error("unknown record '" + kind + "' at line " +
                               std::to_string(lineno));
    }
  }
  std::sort(net.houses.begin(), net.houses.end(),
            [](const HouseAttachment& a, const HouseAttachment& b) {
              return a.house < b.house;
            });
  net.validate();
  return net;
}

NetworkModel load_network_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open network file: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_network(ss.str());
}

}  // namespace lem::grid

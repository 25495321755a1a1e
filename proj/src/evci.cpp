#include "sentinel/evci.hpp"

#include <algorithm>
#include <cmath>

namespace sentinel {

namespace {

constexpr std::uint64_t kSessionTag = 0x5E55;  // session draws
constexpr std::uint64_t kNoiseTag = 0x2015E;   // measurement noise

constexpr int kNumPorts = 8;
constexpr int kNumChannels = 26;  // 8 I + 8 V + 8 CS + I_grid + I_BAT
constexpr int kColGrid = 24;
constexpr int kColBat = 25;

int poisson_knuth(SplitMix64& rng, double lambda) {
  const double limit = std::exp(-lambda);
  int k = 0;
  double p = 1.0;
  do {
    ++k;
    p *= rng.uniform();
  } while (p > limit);
  return k - 1;
}

// Vehicle terminal voltage while connected; rises mildly with state of charge.
double port_voltage(const PortSpec& p, double soc) { return p.batt_voltage_v * (0.95 + 0.1 * soc); }

// Seconds to charge from soc_a to target, used only to place departures.
double est_charge_seconds(const PortSpec& p, double soc_a, double target, double c_rate_eff, const SimConfig& cfg) {
  const double icc = c_rate_eff * p.capacity_ah;
  double sec = 0.0;
  const double cc_end = std::min(target, cfg.taper_soc);
  if (soc_a < cc_end) sec += (cc_end - soc_a) * p.capacity_ah * 3600.0 / icc;
  if (target > cfg.taper_soc) {
    const double need_as = (target - std::max(soc_a, cfg.taper_soc)) * p.capacity_ah * 3600.0;
    const double avail_as = icc * cfg.taper_tau_s;  // total charge the taper can deliver
    if (need_as >= avail_as)
      sec += 8.0 * cfg.taper_tau_s;  // target unreachable; vehicle leaves on the timer
    else
      sec += -cfg.taper_tau_s * std::log(1.0 - need_as / avail_as);
  }
  return sec;
}

void validate_config(const SimConfig& cfg) {
  if (cfg.horizon < 1) throw ValidationError("simulation config: horizon must be positive");
  if (!(cfg.sample_period_s > 0.0)) throw ValidationError("simulation config: sample_period_s must be positive");
  if (!(cfg.mean_sessions_per_port >= 0.0)) throw ValidationError("simulation config: mean_sessions_per_port must be non-negative");
  if (!(cfg.noise_half_width >= 0.0 && cfg.noise_half_width < 1.0)) throw ValidationError("simulation config: noise_half_width must lie in [0,1)");
  if (!(cfg.grid_voltage_v > 0.0) || !(cfg.bess_voltage_v > 0.0)) throw ValidationError("simulation config: supply voltages must be positive");
  if (!(cfg.bess_capacity_ah > 0.0)) throw ValidationError("simulation config: bess_capacity_ah must be positive");
  if (!(cfg.bess_reserve_soc >= 0.0 && cfg.bess_reserve_soc < 1.0) || !(cfg.bess_soc0 >= 0.0 && cfg.bess_soc0 <= 1.0))
    throw ValidationError("simulation config: battery state-of-charge bounds out of range");
  if (!(cfg.bess_charge_w >= 0.0)) throw ValidationError("simulation config: bess_charge_w must be non-negative");
  if (!(cfg.grid_split >= 0.0 && cfg.grid_split <= 1.0)) throw ValidationError("simulation config: grid_split must lie in [0,1]");
  if (!(cfg.taper_soc > 0.0 && cfg.taper_soc <= 1.0)) throw ValidationError("simulation config: taper_soc must lie in (0,1]");
  if (!(cfg.taper_tau_s > 0.0)) throw ValidationError("simulation config: taper_tau_s must be positive");
  if (!(cfg.ramp_up_s >= 0.0) || !(cfg.ramp_down_s >= 0.0) || !(cfg.supply_blend_s >= 0.0))
    throw ValidationError("simulation config: ramp durations must be non-negative");
  if (!(cfg.finish_soc_width >= 0.0)) throw ValidationError("simulation config: finish_soc_width must be non-negative");
}

// Half-cosine ramp from 0 at progress<=0 to exactly 1 at progress>=duration, so
// steady-state values are reached exactly rather than asymptotically. duration
// <= 0 disables the ramp.
double ramp01(double progress, double duration) {
  if (duration <= 0.0 || progress >= duration) return 1.0;
  if (progress <= 0.0) return 0.0;
  return 0.5 * (1.0 - std::cos(M_PI * progress / duration));
}

// Battery share of the load and whether grid-powered recharge runs, per
// scenario. Handovers between plan segments crossfade these weights so the
// supply channels slew instead of stepping.
struct SupplyMix {
  double beta;      // fraction of demand drawn from the battery
  double recharge;  // fraction of the configured recharge power applied
};

SupplyMix mix_for(Scenario sc, const SimConfig& cfg) {
  switch (sc) {
    case Scenario::GridOnly: return {0.0, 1.0};
    case Scenario::BessOnly: return {1.0, 0.0};
    case Scenario::GridAndBess: return {1.0 - cfg.grid_split, 0.0};
  }
  throw ValidationError("simulation config: unknown scenario");
}

std::vector<ScenarioSegment> effective_plan(const SimConfig& cfg) {
  std::vector<ScenarioSegment> plan = cfg.plan.empty() ? default_scenario_plan(cfg.horizon) : cfg.plan;
  if (plan.front().t_begin != 0 || plan.back().t_end != cfg.horizon)
    throw ValidationError("scenario plan must cover [0, horizon)");
  for (std::size_t i = 0; i < plan.size(); ++i) {
    if (plan[i].t_begin >= plan[i].t_end) throw ValidationError("scenario plan segments must be non-empty");
    if (i > 0 && plan[i].t_begin != plan[i - 1].t_end) throw ValidationError("scenario plan segments must be contiguous");
  }
  return plan;
}

}  // namespace

const std::vector<PortSpec>& station_ports() {
  static const std::vector<PortSpec> ports = {
      {"CB1A", Level::L1, 72.0, 45.0, 1.0, 50e3},    // two-wheelers
      {"CB1B", Level::L1, 72.0, 45.0, 1.0, 50e3},
      {"CB2A", Level::L1, 200.0, 90.0, 0.5, 50e3},   // four-wheelers, slow
      {"CB2B", Level::L1, 200.0, 90.0, 0.5, 50e3},
      {"CB3A", Level::L1, 200.0, 90.0, 0.5, 50e3},
      {"CB3B", Level::L3, 300.0, 100.0, 2.0, 400e3}, // fast DC
      {"CB4A", Level::L3, 300.0, 100.0, 2.0, 400e3},
      {"CB4B", Level::L3, 300.0, 100.0, 2.0, 400e3},
  };
  return ports;
}

std::vector<ScenarioSegment> default_scenario_plan(std::int64_t horizon) {
  const std::int64_t a = horizon / 3, b = 2 * horizon / 3;
  std::vector<ScenarioSegment> plan;
  const ScenarioSegment all[] = {{Scenario::GridOnly, 0, a}, {Scenario::BessOnly, a, b}, {Scenario::GridAndBess, b, horizon}};
  for (const ScenarioSegment& s : all)
    if (s.t_begin < s.t_end) plan.push_back(s);  // degenerate thirds vanish on tiny horizons
  return plan;
}

std::vector<ChargingSession> generate_sessions(const SimConfig& cfg) {
  validate_config(cfg);
  SplitMix64 rng(mix_seed(cfg.seed, kSessionTag));
  const std::vector<PortSpec>& ports = station_ports();
  std::vector<ChargingSession> out;
  const double horizon_s = static_cast<double>(cfg.horizon) * cfg.sample_period_s;
  for (int p = 0; p < kNumPorts; ++p) {
    const int n = poisson_knuth(rng, cfg.mean_sessions_per_port);
    std::vector<double> arrivals(static_cast<std::size_t>(n));
    for (double& a : arrivals) a = rng.uniform(0.0, horizon_s);
    std::sort(arrivals.begin(), arrivals.end());
    std::int64_t prev_departure = 0;
    for (double a : arrivals) {
      ChargingSession s;
      s.port = p;
      s.arrival_soc = rng.uniform(0.1, 0.5);
      s.target_soc = rng.uniform(0.8, 1.0);
      s.c_rate = ports[static_cast<std::size_t>(p)].c_rate * rng.uniform(0.85, 1.15);
      std::int64_t arrival = static_cast<std::int64_t>(a / cfg.sample_period_s);
      if (arrival <= prev_departure)  // no double-booking: wait for the previous vehicle
        arrival = prev_departure + 1 + static_cast<std::int64_t>(rng.uniform(0.0, 300.0) / cfg.sample_period_s);
      const double est = est_charge_seconds(ports[static_cast<std::size_t>(p)], s.arrival_soc, s.target_soc, s.c_rate, cfg);
      const double dwell_s = 1.15 * est + rng.uniform(0.0, 900.0);
      s.arrival = arrival;
      s.departure = std::min(cfg.horizon, arrival + std::max<std::int64_t>(1, static_cast<std::int64_t>(dwell_s / cfg.sample_period_s)));
      if (s.arrival >= cfg.horizon - 1) continue;
      prev_departure = s.departure;
      out.push_back(s);
    }
  }
  return out;
}

double charge_current_a(const PortSpec& p, double c_rate_eff, double soc, double target_soc,
                        double taper_elapsed_s, const SimConfig& cfg) {
  if (soc >= target_soc) return 0.0;
  double amps = c_rate_eff * p.capacity_ah;
  if (taper_elapsed_s >= 0.0) amps *= std::exp(-taper_elapsed_s / cfg.taper_tau_s);
  const double volts = port_voltage(p, soc);
  if (volts * amps > p.max_power_w) amps = p.max_power_w / volts;
  return amps;
}

std::vector<std::string> telemetry_channel_names() {
  std::vector<std::string> names;
  for (const PortSpec& p : station_ports()) names.push_back("I_" + p.name);
  for (const PortSpec& p : station_ports()) names.push_back("V_" + p.name);
  for (const PortSpec& p : station_ports()) names.push_back("CS_EV" + p.name.substr(2));
  names.push_back("I_grid");
  names.push_back("I_BAT");
  return names;
}

SimResult simulate(const SimConfig& cfg) { return simulate_with_sessions(cfg, generate_sessions(cfg)); }

SimResult simulate_with_sessions(const SimConfig& cfg, const std::vector<ChargingSession>& sessions) {
  validate_config(cfg);
  const std::vector<ScenarioSegment> plan = effective_plan(cfg);
  const std::vector<PortSpec>& ports = station_ports();

  // Per-port session queues, sorted by arrival and non-overlapping.
  std::vector<std::vector<ChargingSession>> queue(kNumPorts);
  for (const ChargingSession& s : sessions) {
    if (s.port < 0 || s.port >= kNumPorts) throw ValidationError("session references unknown port " + std::to_string(s.port));
    if (s.arrival < 0 || s.arrival >= s.departure) throw ValidationError("session on " + ports[static_cast<std::size_t>(s.port)].name + " has an empty time range");
    if (!(s.arrival_soc >= 0.0 && s.arrival_soc < s.target_soc && s.target_soc <= 1.0))
      throw ValidationError("session on " + ports[static_cast<std::size_t>(s.port)].name + " has inconsistent state-of-charge bounds");
    if (!(s.c_rate > 0.0)) throw ValidationError("session c_rate must be positive");
    queue[static_cast<std::size_t>(s.port)].push_back(s);
  }
  for (auto& q : queue) {
    std::sort(q.begin(), q.end(), [](const ChargingSession& a, const ChargingSession& b) { return a.arrival < b.arrival; });
    for (std::size_t i = 1; i < q.size(); ++i)
      if (q[i].arrival < q[i - 1].departure) throw ValidationError("sessions overlap on port " + ports[static_cast<std::size_t>(q[i].port)].name);
  }

  SimResult res;
  res.telemetry = Signal2D(cfg.horizon, kNumChannels);
  res.telemetry.channels = telemetry_channel_names();
  res.sessions = sessions;
  res.supply_shortfall.assign(static_cast<std::size_t>(cfg.horizon), 0);

  SplitMix64 noise_rng(mix_seed(cfg.seed, kNoiseTag));
  const double dt = cfg.sample_period_s;
  const double dt_h = dt / 3600.0;

  struct PortState {
    std::size_t next = 0;        // index into the port's queue
    bool active = false;
    double soc = 0.0;
    std::int64_t taper_t0 = -1;  // frame the taper began, -1 while in constant current
    const ChargingSession* s = nullptr;
  };
  std::vector<PortState> st(kNumPorts);
  double bess_soc = cfg.bess_soc0;
  std::size_t seg = 0;

  for (std::int64_t t = 0; t < cfg.horizon; ++t) {
    while (t >= plan[seg].t_end) ++seg;

    // Commanded currents and terminal voltages.
    double current[kNumPorts], volts[kNumPorts];
    for (int p = 0; p < kNumPorts; ++p) {
      PortState& ps = st[static_cast<std::size_t>(p)];
      const auto& q = queue[static_cast<std::size_t>(p)];
      if (ps.active && t >= ps.s->departure) ps.active = false;
      if (!ps.active && ps.next < q.size() && t >= q[ps.next].arrival) {
        ps.s = &q[ps.next++];
        ps.active = true;
        ps.soc = ps.s->arrival_soc;
        ps.taper_t0 = -1;
      }
      if (ps.active) {
        if (ps.taper_t0 < 0 && ps.soc >= cfg.taper_soc) ps.taper_t0 = t;
        const double elapsed = ps.taper_t0 >= 0 ? static_cast<double>(t - ps.taper_t0) * dt : -1.0;
        current[p] = charge_current_a(ports[static_cast<std::size_t>(p)], ps.s->c_rate, ps.soc, ps.s->target_soc, elapsed, cfg);
        // Controller slew: soft-start after plug-in, soft-stop ahead of the
        // departure cut, and a current fade-out as SoC closes on the target so
        // charge completion never steps the current.
        double env = ramp01(static_cast<double>(t - ps.s->arrival) * dt, cfg.ramp_up_s) *
                     ramp01(static_cast<double>(ps.s->departure - t) * dt, cfg.ramp_down_s);
        if (cfg.finish_soc_width > 0.0)
          env *= std::min(1.0, std::max(0.0, (ps.s->target_soc - ps.soc) / cfg.finish_soc_width));
        current[p] *= env;
        volts[p] = port_voltage(ports[static_cast<std::size_t>(p)], ps.soc);
      } else {
        current[p] = 0.0;
        volts[p] = 0.0;
      }
    }

    double demand_w = 0.0;
    for (int p = 0; p < kNumPorts; ++p) demand_w += volts[p] * current[p];

    // Supply dispatch: blend the battery share and recharge weights across
    // segment boundaries so the handover slews rather than steps.
    SupplyMix mix = mix_for(plan[seg].scenario, cfg);
    const double into_seg = static_cast<double>(t - plan[seg].t_begin) * dt;
    const double handover = seg > 0 ? ramp01(into_seg, cfg.supply_blend_s) : 1.0;
    if (handover < 1.0) {
      const SupplyMix prev = mix_for(plan[seg - 1].scenario, cfg);
      mix.beta = handover * mix.beta + (1.0 - handover) * prev.beta;
      mix.recharge = handover * mix.recharge + (1.0 - handover) * prev.recharge;
    }

    double charge_w = 0.0;
    if (mix.recharge > 0.0 && bess_soc < cfg.bess_soc0 && cfg.bess_charge_w > 0.0) {
      // Top the battery back up, without overshooting its resting level.
      const double room_w = (cfg.bess_soc0 - bess_soc) * cfg.bess_capacity_ah * cfg.bess_voltage_v / dt_h;
      charge_w = mix.recharge * std::min(cfg.bess_charge_w, room_w);
    }

    double bat_w = mix.beta * demand_w;
    if (bat_w > 0.0) {
      const double draw_ah = bat_w / cfg.bess_voltage_v * dt_h;
      if (bess_soc - draw_ah / cfg.bess_capacity_ah < cfg.bess_reserve_soc) {
        if (plan[seg].scenario == Scenario::BessOnly && handover >= 1.0) {
          // No grid to fall back on: reserve floor pauses every port this frame.
          res.supply_shortfall[static_cast<std::size_t>(t)] = 1;
          for (int p = 0; p < kNumPorts; ++p) current[p] = 0.0;
          demand_w = 0.0;
        }
        bat_w = 0.0;  // otherwise the grid picks the load up
      }
    }
    const double i_grid = (demand_w - bat_w + charge_w) / cfg.grid_voltage_v;
    const double i_bat = (bat_w - charge_w) / cfg.bess_voltage_v;  // discharge positive

    // State integration from the true (pre-noise) currents.
    for (int p = 0; p < kNumPorts; ++p) {
      PortState& ps = st[static_cast<std::size_t>(p)];
      if (ps.active && current[p] > 0.0)
        ps.soc = std::min(1.0, ps.soc + current[p] * dt_h / ports[static_cast<std::size_t>(p)].capacity_ah);
    }
    bess_soc = std::min(1.0, std::max(0.0, bess_soc - i_bat * dt_h / cfg.bess_capacity_ah));

    // Emit the frame; only current channels carry measurement noise.
    double* row = res.telemetry.row(t);
    auto emit_current = [&](double amps) {
      if (!cfg.noise) return amps;
      return amps * (1.0 + cfg.noise_half_width * noise_rng.uniform(-1.0, 1.0));
    };
    for (int p = 0; p < kNumPorts; ++p) row[p] = emit_current(current[p]);
    for (int p = 0; p < kNumPorts; ++p) row[kNumPorts + p] = volts[p];
    for (int p = 0; p < kNumPorts; ++p) row[2 * kNumPorts + p] = row[p] > cfg.idle_threshold_a ? 1.0 : 0.0;
    row[kColGrid] = emit_current(i_grid);
    row[kColBat] = emit_current(i_bat);
  }
  return res;
}

const std::vector<std::string>& detector_feature_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n;
    for (const PortSpec& p : station_ports()) n.push_back("I_" + p.name);
    n.push_back("I_grid");
    n.push_back("I_BAT");
    return n;
  }();
  return names;
}

Signal2D select_detector_features(const Signal2D& telemetry) {
  require_nonempty(telemetry, "select_detector_features");
  if (telemetry.d != kNumChannels)
    throw ValidationError("select_detector_features: expected " + std::to_string(kNumChannels) + " telemetry channels, got " + std::to_string(telemetry.d));
  const int cols[] = {0, 1, 2, 3, 4, 5, 6, 7, kColGrid, kColBat};
  Signal2D out(telemetry.T, 10);
  out.channels = detector_feature_names();
  for (std::int64_t t = 0; t < telemetry.T; ++t) {
    const double* src = telemetry.row(t);
    double* dst = out.row(t);
    for (int c = 0; c < 10; ++c) dst[c] = src[cols[c]];
  }
  return out;
}

}  // namespace sentinel

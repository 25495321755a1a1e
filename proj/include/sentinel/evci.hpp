#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sentinel/signal.hpp"

namespace sentinel {

// Station layout: four charging booths with two ports each. Booths 1-2 and
// port CB3A are Level 1 (50 kW per-port ceiling); CB3B and booth 4 are
// Level 3 fast chargers (400 kW ceiling).
enum class Level { L1, L3 };

struct PortSpec {
  std::string name;        // CB<booth><A|B>
  Level level;
  double batt_voltage_v;   // nominal vehicle battery voltage
  double capacity_ah;      // vehicle battery capacity
  double c_rate;           // constant-current charge rate, multiples of capacity
  double max_power_w;      // per-port ceiling
};

// The eight fixed ports of the simulated station.
const std::vector<PortSpec>& station_ports();

// Supply dispatch mode for a stretch of the horizon.
enum class Scenario { GridOnly, BessOnly, GridAndBess };

struct ScenarioSegment {
  Scenario scenario;
  std::int64_t t_begin, t_end;  // [t_begin, t_end) in samples
};

// Horizon split into equal thirds: grid only, battery only, then both.
std::vector<ScenarioSegment> default_scenario_plan(std::int64_t horizon);

struct SimConfig {
  std::int64_t horizon = 20000;        // samples
  double sample_period_s = 1.0;
  double mean_sessions_per_port = 8.0;
  bool noise = true;                   // measurement noise on current channels
  double noise_half_width = 0.005;     // multiplicative, uniform in +-0.5%
  double idle_threshold_a = 0.5;       // connection-status current threshold
  std::vector<ScenarioSegment> plan;   // empty -> default_scenario_plan
  double grid_voltage_v = 800.0;
  double bess_voltage_v = 600.0;
  double bess_capacity_ah = 2000.0;
  double bess_soc0 = 0.6;              // initial and recharge-target state of charge
  double bess_reserve_soc = 0.1;       // discharge floor
  double bess_charge_w = 50000.0;      // grid-powered recharge rate
  double grid_split = 0.5;             // grid share of demand in GridAndBess
  double taper_soc = 0.8;              // constant current up to here
  double taper_tau_s = 300.0;          // exponential taper time constant
  // Slew limits are deliberately gentle: a contactor step faster than the
  // detector's lookahead is indistinguishable from a tamper onset, so abrupt
  // benign edges directly inflate the false-positive tail.
  double ramp_up_s = 48.0;             // soft-start current slew at session entry
  double ramp_down_s = 48.0;           // soft-stop slew ahead of a departure cut
  double finish_soc_width = 0.02;      // current fades out over this SoC margin below target
  double supply_blend_s = 48.0;        // supply handover crossfade at scenario boundaries
  std::uint64_t seed = 1;
};

struct ChargingSession {
  int port = 0;
  std::int64_t arrival = 0, departure = 0;  // [arrival, departure) in samples
  double arrival_soc = 0.0, target_soc = 1.0;
  double c_rate = 1.0;  // per-session effective rate (spec rate with jitter)
};

// Per-port session draws: counts are Poisson with the configured mean, state
// of charge at arrival is U[0.1,0.5], target U[0.8,1.0], and the per-session
// current rate carries +-15% jitter. Overlapping draws on a port are shifted
// behind the previous departure.
std::vector<ChargingSession> generate_sessions(const SimConfig& cfg);

// Commanded charge current before measurement noise: constant current at
// c_rate_eff * capacity until the taper boundary, then an exponential decay
// in time, zero once the target state of charge is reached, always capped so
// that V * I stays within the port ceiling. taper_elapsed_s < 0 means the
// taper has not begun.
double charge_current_a(const PortSpec& p, double c_rate_eff, double soc, double target_soc,
                        double taper_elapsed_s, const SimConfig& cfg);

// 26 telemetry channels in file order: 8 port currents, 8 port voltages,
// 8 connection-status flags, grid current, battery current (discharge
// positive, recharge negative).
std::vector<std::string> telemetry_channel_names();

struct SimResult {
  Signal2D telemetry;                          // horizon x 26, channels named
  std::vector<ChargingSession> sessions;
  std::vector<std::uint8_t> supply_shortfall;  // frames where the battery hit its reserve
};

SimResult simulate(const SimConfig& cfg);
// Same physics with caller-supplied sessions (simulate() draws its own).
SimResult simulate_with_sessions(const SimConfig& cfg, const std::vector<ChargingSession>& sessions);

// The ten channels the detector watches: the eight port currents plus grid
// and battery current.
const std::vector<std::string>& detector_feature_names();
Signal2D select_detector_features(const Signal2D& telemetry);

}  // namespace sentinel

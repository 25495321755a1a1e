#pragma once

#include <cstdint>
#include <string>

#include "sentinel/detector.hpp"
#include "sentinel/tcn_ae.hpp"

namespace sentinel {

// One run configuration drives every pipeline stage. Stored as JSON with the
// sections seed / simulation / attack / model / detection / io; every key is
// optional and unknown keys are rejected by their full path.
struct RunConfig {
  std::uint64_t seed = 42;

  // simulation
  std::int64_t horizon = 20000;
  bool noise = true;
  double mean_sessions_per_port = 8.0;

  // attack
  int n_attacks = 4;
  double coverage_fraction = 0.05;

  // model (d and seed are filled in from the data and the run seed)
  TcnAeConfig model;

  // detection
  DetectOptions detection;

  // io
  std::string out_dir = "out";
};

RunConfig parse_run_config(const std::string& json_text, const std::string& origin);
RunConfig load_run_config(const std::string& path);
// Serializes every setting; parse_run_config(run_config_json(c)) == c.
std::string run_config_json(const RunConfig& c);

}  // namespace sentinel

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sentinel/signal.hpp"

namespace sentinel {

// Telemetry CSV: header "t,<channel names...>[,Anomaly]", one row per sample,
// values at nine significant digits, written atomically (temp file + rename).
void write_telemetry_csv(const std::string& path, const Signal2D& x, const std::vector<std::uint8_t>* labels);

struct TelemetryCsv {
  Signal2D x;
  bool has_labels = false;
  std::vector<std::uint8_t> labels;  // empty unless the file carries an Anomaly column
};

// Strict parser: the header decides the channel set, every row must carry its
// own index in column t, values must be finite, labels must be 0 or 1.
// Malformed input reports the offending line.
TelemetryCsv read_telemetry_csv(const std::string& path);

}  // namespace sentinel

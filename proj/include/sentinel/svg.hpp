#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sentinel/replay.hpp"
#include "sentinel/signal.hpp"

namespace sentinel {

// All renderers emit standalone SVG with fixed-precision coordinates, so the
// same inputs always produce byte-identical files. Long series are decimated
// to roughly two thousand points per line.

// Selected channels overlaid (each normalized to its own range) with the
// given intervals shaded.
std::string render_channels_svg(const Signal2D& x, const std::vector<int>& channels,
                                const std::vector<Interval>& shaded, const std::string& title);

// Mean training loss per epoch.
std::string render_loss_svg(const std::vector<double>& loss_history);

// Per-timestep anomaly scores on a log axis, the decision threshold, labeled
// intervals shaded, and flagged stretches marked along the bottom edge.
std::string render_scores_svg(const std::vector<double>& scores, double threshold,
                              const std::vector<Interval>& shaded, const std::vector<Interval>& flagged,
                              const std::string& title);

}  // namespace sentinel

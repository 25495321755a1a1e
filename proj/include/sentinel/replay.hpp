#pragma once

#include <cstdint>
#include <vector>

#include "sentinel/signal.hpp"

namespace sentinel {

struct Interval {
  std::int64_t begin = 0, end = 0;  // [begin, end)
  std::int64_t length() const { return end - begin; }
};

// One replay: previously recorded samples of `channel` from `source` are
// played back over `target` of the same channel.
struct ReplaySpec {
  int channel = 0;
  Interval source, target;
};

// Maximal runs where the channel is above (or, with above=false, at/below)
// the threshold; runs shorter than min_len are dropped.
std::vector<Interval> find_segments(const Signal2D& x, int channel, double threshold, bool above,
                                    std::int64_t min_len);

struct LabeledDataset {
  Signal2D telemetry;
  std::vector<std::uint8_t> labels;  // 1 where any channel carries replayed samples
  std::vector<ReplaySpec> plan;      // the applied specs, after truncation
};

// Applies every spec against a snapshot of the unmodified input, so sources
// always read pre-attack data regardless of spec order. Source/target pairs
// of unequal length are truncated to the shorter one. Targets on the same
// channel must not overlap.
LabeledDataset inject_replays(const Signal2D& x, const std::vector<ReplaySpec>& specs);

struct AttackPlanOptions {
  double coverage_fraction = 0.05;    // labeled share of the horizon
  // Share of the span placed before the calibration boundary. The threshold
  // search needs attacked samples in the prefix, but every attacked sample
  // spent there is one the scored region cannot credit, so the default keeps
  // the overlap small.
  double early_fraction = 0.10;
  std::int64_t calibration_len = 0;   // detector calibration prefix length; 0 = no prefix
  std::int64_t min_start = 150;       // keep clear of the detector's cold-start region
  std::int64_t end_margin = 150;      // quiet gap before the end of the horizon
  double idle_threshold_a = 0.5;      // charging/idle segmentation threshold
  std::int64_t min_segment_len = 16;
};

// Draws a replay plan against simulated telemetry. All n_attacks replays hit
// distinct port-current channels over ONE shared time span: every boundary
// between live and replayed data costs the detector roughly a window length
// of unavoidable mistakes, so the budget is spent on a single stretch instead
// of being scattered. When a calibration prefix is configured the span
// straddles its end, putting attacked samples on both sides of the boundary
// (the threshold search needs both classes in the prefix). Each target lies
// inside a single homogeneous (charging or idle) stretch of its channel, and
// the source is taken from an opposite-kind stretch when one fits, so replays
// either suppress a live charge or fabricate a phantom one. Throws
// ValidationError when the telemetry cannot host the requested plan.
std::vector<ReplaySpec> random_attack_plan(const Signal2D& telemetry, int n_attacks,
                                           const AttackPlanOptions& opts, std::uint64_t seed);

}  // namespace sentinel

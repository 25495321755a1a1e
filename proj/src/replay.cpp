#include "sentinel/replay.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace sentinel {

std::vector<Interval> find_segments(const Signal2D& x, int channel, double threshold, bool above,
                                    std::int64_t min_len) {
  require_nonempty(x, "find_segments");
  if (channel < 0 || channel >= x.d) throw ValidationError("find_segments: channel " + std::to_string(channel) + " out of range");
  std::vector<Interval> out;
  std::int64_t run_begin = -1;
  for (std::int64_t t = 0; t <= x.T; ++t) {
    const bool in_run = t < x.T && (above ? x.at(t, channel) > threshold : x.at(t, channel) <= threshold);
    if (in_run && run_begin < 0) run_begin = t;
    if (!in_run && run_begin >= 0) {
      if (t - run_begin >= min_len) out.push_back({run_begin, t});
      run_begin = -1;
    }
  }
  return out;
}

LabeledDataset inject_replays(const Signal2D& x, const std::vector<ReplaySpec>& specs) {
  require_nonempty(x, "inject_replays");

  std::vector<ReplaySpec> applied;
  applied.reserve(specs.size());
  for (const ReplaySpec& s : specs) {
    if (s.channel < 0 || s.channel >= x.d)
      throw ValidationError("replay spec: channel " + std::to_string(s.channel) + " out of range");
    for (const Interval& iv : {s.source, s.target})
      if (iv.begin < 0 || iv.begin >= iv.end || iv.end > x.T)
        throw ValidationError("replay spec: interval [" + std::to_string(iv.begin) + "," + std::to_string(iv.end) + ") out of range or empty");
    ReplaySpec t = s;
    const std::int64_t len = std::min(t.source.length(), t.target.length());
    t.source.end = t.source.begin + len;
    t.target.end = t.target.begin + len;
    applied.push_back(t);
  }

  // Replays on one channel must not fight over the same samples.
  std::vector<ReplaySpec> sorted = applied;
  std::sort(sorted.begin(), sorted.end(), [](const ReplaySpec& a, const ReplaySpec& b) {
    return a.channel != b.channel ? a.channel < b.channel : a.target.begin < b.target.begin;
  });
  for (std::size_t i = 1; i < sorted.size(); ++i)
    if (sorted[i].channel == sorted[i - 1].channel && sorted[i].target.begin < sorted[i - 1].target.end)
      throw ValidationError("replay specs: overlapping targets on channel " + std::to_string(sorted[i].channel));

  LabeledDataset out;
  out.telemetry = x;
  out.labels.assign(static_cast<std::size_t>(x.T), 0);
  // x itself is the pre-attack snapshot every source reads from.
  for (const ReplaySpec& s : applied) {
    for (std::int64_t k = 0; k < s.target.length(); ++k) {
      out.telemetry.at(s.target.begin + k, s.channel) = x.at(s.source.begin + k, s.channel);
      out.labels[static_cast<std::size_t>(s.target.begin + k)] = 1;
    }
  }
  out.plan = std::move(applied);
  return out;
}

namespace {

constexpr std::uint64_t kPlanTag = 0xA77C;

// Port-current channels are the attack surface.
std::vector<int> candidate_channels(const Signal2D& x) {
  std::vector<int> c;
  if (x.channels.size() == static_cast<std::size_t>(x.d))
    for (int i = 0; i < x.d; ++i)
      if (x.channels[static_cast<std::size_t>(i)].rfind("I_CB", 0) == 0) c.push_back(i);
  if (c.empty()) throw ValidationError("attack planner: telemetry has no named port-current channels (I_CB*)");
  return c;
}

void shuffle_channels(std::vector<int>& v, SplitMix64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.below(i)]);
}

// Earliest source interval of `len` disjoint from the target. The opposite-
// kind list comes first so the replayed content contradicts the live signal;
// same-kind material is only admitted when allow_same is set (an idle-over-
// idle copy is a much weaker attack, so the planner tries everything else
// first).
bool find_source(const std::vector<Interval>& opposite, const std::vector<Interval>& same, bool allow_same,
                 Interval target, std::int64_t len, Interval* src) {
  for (const std::vector<Interval>* list : {&opposite, &same}) {
    if (list == &same && !allow_same) break;
    for (const Interval& g : *list) {
      if (g.length() < len) continue;
      std::int64_t b = g.begin;
      if (b < target.end && b + len > target.begin) b = target.end;  // slide past the target
      if (b + len <= g.end) {
        *src = {b, b + len};
        return true;
      }
    }
  }
  return false;
}

struct ChannelSegments {
  std::vector<Interval> charging, idle;
};

ChannelSegments segments_for(const Signal2D& x, int ch, const AttackPlanOptions& o, std::int64_t len) {
  const std::int64_t min_len = std::max(o.min_segment_len, len);
  return {find_segments(x, ch, o.idle_threshold_a, true, min_len),
          find_segments(x, ch, o.idle_threshold_a, false, min_len)};
}

bool contains_span(const std::vector<Interval>& segs, Interval span) {
  return std::any_of(segs.begin(), segs.end(),
                     [&](const Interval& g) { return g.begin <= span.begin && span.end <= g.end; });
}

}  // namespace

std::vector<ReplaySpec> random_attack_plan(const Signal2D& telemetry, int n_attacks,
                                           const AttackPlanOptions& opts, std::uint64_t seed) {
  require_nonempty(telemetry, "random_attack_plan");
  if (n_attacks < 1) throw ValidationError("attack planner: n_attacks must be positive");
  if (!(opts.coverage_fraction > 0.0 && opts.coverage_fraction < 1.0))
    throw ValidationError("attack planner: coverage_fraction must lie in (0,1)");
  if (!(opts.early_fraction >= 0.0 && opts.early_fraction < 1.0))
    throw ValidationError("attack planner: early_fraction must lie in [0,1)");
  const std::int64_t T = telemetry.T;
  const std::int64_t cal = opts.calibration_len;
  if (cal < 0 || cal >= T) throw ValidationError("attack planner: calibration_len out of range");

  const std::int64_t budget = static_cast<std::int64_t>(opts.coverage_fraction * static_cast<double>(T));
  if (budget < 2) throw ValidationError("attack planner: coverage budget is under 2 samples; raise coverage_fraction");

  // Allowed span begins. With a calibration prefix the span must keep at
  // least one attacked sample on each side of the boundary.
  std::int64_t lo = std::max<std::int64_t>(opts.min_start, 1);
  std::int64_t hi = T - budget - opts.end_margin;
  if (cal > 0) {
    lo = std::max(lo, cal - budget + 1);
    hi = std::min(hi, cal - 1);
  }
  if (lo > hi)
    throw ValidationError("attack planner: no room for a shared replay span; the series or calibration prefix is "
                          "too short for the coverage budget and margins");

  SplitMix64 rng(mix_seed(seed, kPlanTag));
  std::vector<int> order = candidate_channels(telemetry);
  shuffle_channels(order, rng);

  std::vector<ChannelSegments> segs;
  segs.reserve(order.size());
  for (int ch : order) segs.push_back(segments_for(telemetry, ch, opts, budget));

  // Candidate span begins, most preferred first: near the targeted split of
  // the budget across the calibration boundary, or anywhere when there is no
  // prefix. Later candidates step outward until enough ports can host.
  std::vector<std::int64_t> begins;
  if (cal > 0) {
    const std::int64_t early = std::max<std::int64_t>(1, static_cast<std::int64_t>(opts.early_fraction * static_cast<double>(budget)));
    const std::int64_t b0 = std::clamp(cal - early - static_cast<std::int64_t>(rng.below(65)), lo, hi);
    begins.push_back(b0);
    for (std::int64_t step = 16; step <= 4096; step += 16) {
      if (b0 - step >= lo) begins.push_back(b0 - step);
      if (b0 + step <= hi) begins.push_back(b0 + step);
    }
  } else {
    for (int k = 0; k < 64; ++k)
      begins.push_back(lo + static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(hi - lo + 1))));
  }

  std::size_t best = 0;
  for (const std::int64_t b : begins) {
    const Interval span{b, b + budget};
    // Ports able to host the span; strict (opposite-kind source) placements
    // outrank same-kind fallbacks, which stay detectable only because they
    // share the span with stronger siblings.
    std::vector<ReplaySpec> strict, fallback;
    for (std::size_t ci = 0; ci < order.size(); ++ci) {
      const bool charging = contains_span(segs[ci].charging, span);
      if (!charging && !contains_span(segs[ci].idle, span)) continue;
      const std::vector<Interval>& opp = charging ? segs[ci].idle : segs[ci].charging;
      const std::vector<Interval>& same = charging ? segs[ci].charging : segs[ci].idle;
      Interval source;
      if (find_source(opp, same, false, span, budget, &source))
        strict.push_back({order[ci], source, span});
      else if (find_source(opp, same, true, span, budget, &source))
        fallback.push_back({order[ci], source, span});
    }
    best = std::max(best, strict.size() + fallback.size());
    if (strict.size() + fallback.size() >= static_cast<std::size_t>(n_attacks)) {
      std::vector<ReplaySpec> out = std::move(strict);
      out.insert(out.end(), fallback.begin(), fallback.end());
      out.resize(static_cast<std::size_t>(n_attacks));
      return out;
    }
  }
  throw ValidationError("attack planner: at most " + std::to_string(best) + " of " + std::to_string(n_attacks) +
                        " ports can host a shared replay span; lower n_attacks or coverage_fraction");
}

}  // namespace sentinel

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

#include "sentinel/common.hpp"
#include "sentinel/detector.hpp"
#include "sentinel/reference.hpp"
#include "sentinel/tcn_ae.hpp"

using namespace sentinel;

namespace {

Signal2D random_signal(std::int64_t T, int d, std::uint64_t seed, double amp = 1.0) {
  SplitMix64 rng(seed);
  Signal2D x(T, d);
  for (double& v : x.data) v = rng.uniform(-amp, amp);
  return x;
}

WindowMatrix matrix_from(const std::vector<std::vector<double>>& rows) {
  WindowMatrix w;
  w.n = static_cast<std::int64_t>(rows.size());
  w.dim = static_cast<std::int64_t>(rows[0].size());
  for (const auto& r : rows) w.rows.insert(w.rows.end(), r.begin(), r.end());
  return w;
}

// Sample covariance with ridge, written independently of the library path
// (two-pass centered products instead of raw-dot-minus-correction).
std::vector<double> centered_covariance(const WindowMatrix& w, double lambda, std::vector<double>* mu_out) {
  const std::size_t n = static_cast<std::size_t>(w.n), dim = static_cast<std::size_t>(w.dim);
  std::vector<double> mu(dim, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < dim; ++j) mu[j] += w.rows[i * dim + j];
  for (double& m : mu) m /= static_cast<double>(n);
  std::vector<double> cov(dim * dim, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t a = 0; a < dim; ++a)
      for (std::size_t b = 0; b < dim; ++b)
        cov[a * dim + b] += (w.rows[i * dim + a] - mu[a]) * (w.rows[i * dim + b] - mu[b]);
  for (double& c : cov) c /= static_cast<double>(n - 1);
  for (std::size_t j = 0; j < dim; ++j) cov[j * dim + j] += lambda;
  if (mu_out) *mu_out = mu;
  return cov;
}

}  // namespace

TEST_CASE("scaler standardizes with population std and floors constant channels") {
  Signal2D x(3, 2);
  // channel 0: {1,2,3}; channel 1 constant at 5
  for (std::int64_t t = 0; t < 3; ++t) {
    x.at(t, 0) = static_cast<double>(t + 1);
    x.at(t, 1) = 5.0;
  }
  const ScalerParams p = fit_scaler(x);
  CHECK(p.mean[0] == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(p.std[0] == doctest::Approx(std::sqrt(2.0 / 3.0)).epsilon(1e-15));
  CHECK(p.mean[1] == 5.0);
  CHECK(p.std[1] == 1.0);  // floored: constant channel passes through centered

  const Signal2D s = apply_scaler(x, p);
  CHECK(s.at(0, 0) == doctest::Approx(-1.224744871391589).epsilon(1e-14));
  CHECK(s.at(1, 0) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(s.at(2, 0) == doctest::Approx(1.224744871391589).epsilon(1e-14));
  CHECK(s.at(0, 1) == 0.0);
  CHECK(s.at(2, 1) == 0.0);

  const Signal2D back = invert_scaler(s, p);
  for (std::size_t i = 0; i < x.data.size(); ++i) CHECK(back.data[i] == doctest::Approx(x.data[i]).epsilon(1e-12));

  Signal2D wrong(3, 1);
  wrong.data = {1, 2, 3};
  CHECK_THROWS_AS(apply_scaler(wrong, p), ValidationError);
  CHECK_THROWS_AS(invert_scaler(wrong, p), ValidationError);
}

TEST_CASE("scaler round-trips random data") {
  const Signal2D x = random_signal(50, 4, 77, 10.0);
  const ScalerParams p = fit_scaler(x);
  const Signal2D back = invert_scaler(apply_scaler(x, p), p);
  for (std::size_t i = 0; i < x.data.size(); ++i) CHECK(back.data[i] == doctest::Approx(x.data[i]).epsilon(1e-12));
}

TEST_CASE("sliding windows flatten time-major") {
  Signal2D err(4, 2);
  for (std::int64_t t = 0; t < 4; ++t) {
    err.at(t, 0) = static_cast<double>(t);
    err.at(t, 1) = static_cast<double>(10 + t);
  }
  const WindowMatrix w = sliding_error_windows(err, 2);
  REQUIRE(w.n == 3);
  REQUIRE(w.dim == 4);
  const std::vector<double> want = {0, 10, 1, 11, 1, 11, 2, 12, 2, 12, 3, 13};
  CHECK(w.rows == want);

  CHECK_THROWS_AS(sliding_error_windows(err, 5), ValidationError);  // T < l
  CHECK_THROWS_AS(sliding_error_windows(err, 0), ValidationError);
}

TEST_CASE("statistics on a hand fixture: mean, covariance and Cholesky factor") {
  const WindowMatrix w = matrix_from({{0, 0}, {2, 0}, {0, 2}, {2, 2}});
  const ErrorWindowStats st = estimate_stats(w, 1, 0.0, false);
  REQUIRE(st.dim == 2);
  CHECK(st.lambda == 0.0);
  CHECK(st.mu[0] == 1.0);
  CHECK(st.mu[1] == 1.0);
  // deviations (+-1,+-1): cov = diag(4/3), so L = diag(2/sqrt(3))
  CHECK(st.chol[0] == doctest::Approx(std::sqrt(4.0 / 3.0)).epsilon(1e-15));
  CHECK(st.chol[1] == 0.0);
  CHECK(st.chol[2] == 0.0);
  CHECK(st.chol[3] == doctest::Approx(std::sqrt(4.0 / 3.0)).epsilon(1e-15));

  // every corner sits at squared Mahalanobis distance 2/(4/3) = 3/2
  const std::vector<double> scores = mahalanobis_scores(w, st);
  for (double s : scores) CHECK(s == doctest::Approx(1.5).epsilon(1e-12));

  WindowMatrix one = matrix_from({{1, 2}});
  CHECK_THROWS_AS(estimate_stats(one, 1, 0.0, false), ValidationError);  // n < 2
}

TEST_CASE("identical windows fall back to the tiny automatic ridge") {
  const WindowMatrix w = matrix_from({{3, -1}, {3, -1}, {3, -1}, {3, -1}, {3, -1}});
  const ErrorWindowStats st = estimate_stats(w, 1, -1.0, false);
  CHECK(st.lambda == 1e-12);  // trace is zero, so the floor kicks in

  const WindowMatrix probe = matrix_from({{3, -1}, {3, -1 + 1e-3}});
  const std::vector<double> scores = mahalanobis_scores(probe, st);
  CHECK(scores[0] == 0.0);
  CHECK(scores[1] == doctest::Approx(1e6).epsilon(1e-6));  // (1e-3)^2 / 1e-12
}

TEST_CASE("diagonal mode scores coordinates independently") {
  ErrorWindowStats st;
  st.dim = 2;
  st.window_len = 1;
  st.diag = true;
  st.mu = {0.0, 0.0};
  st.var = {4.0, 1.0};
  const std::vector<double> scores = mahalanobis_scores(matrix_from({{2, 1}}), st);
  CHECK(scores[0] == 2.0);  // 4/4 + 1/1

  // fitted diag stats: deviations (-1,-1),(1,1) give var (2,2)
  const WindowMatrix w = matrix_from({{1, 0}, {3, 2}});
  const ErrorWindowStats fitted = estimate_stats(w, 1, 0.0, true);
  CHECK(fitted.var[0] == 2.0);
  CHECK(fitted.var[1] == 2.0);
  CHECK(fitted.chol.empty());
  const std::vector<double> s2 = mahalanobis_scores(matrix_from({{4, 3}}), fitted);
  CHECK(s2[0] == doctest::Approx(4.0).epsilon(1e-12));  // (2^2 + 2^2)/2
}

TEST_CASE("Cholesky scores match an explicit covariance inverse") {
  for (std::size_t dim : {2ul, 5ul, 16ul}) {
    const std::int64_t n = 40;
    WindowMatrix w;
    w.n = n;
    w.dim = static_cast<std::int64_t>(dim);
    SplitMix64 rng(1000 + dim);
    w.rows.resize(static_cast<std::size_t>(n) * dim);
    for (double& v : w.rows) v = rng.uniform(-1.0, 1.0);

    const double lambda = 1e-3;
    const ErrorWindowStats st = estimate_stats(w, 1, lambda, false);
    const std::vector<double> mine = mahalanobis_scores(w, st);

    std::vector<double> mu;
    const std::vector<double> cov = centered_covariance(w, lambda, &mu);
    const std::vector<double> ref = reference::mahalanobis_explicit_inverse(w.rows, static_cast<std::size_t>(n), dim, mu, cov);

    REQUIRE(mine.size() == ref.size());
    for (std::size_t i = 0; i < mine.size(); ++i) CHECK(mine[i] == doctest::Approx(ref[i]).epsilon(1e-8));
  }
}

TEST_CASE("window-matrix and error-series paths are bit-identical") {
  const Signal2D err = random_signal(100, 3, 4242);
  const std::int64_t l = 8;
  const WindowMatrix w = sliding_error_windows(err, l);

  for (bool diag : {false, true}) {
    const ErrorWindowStats sm = estimate_stats(w, l, -1.0, diag);
    const ErrorWindowStats se = estimate_stats_from_errors(err, l, -1.0, diag);
    CHECK(sm.lambda == se.lambda);
    CHECK(sm.mu == se.mu);
    CHECK(sm.chol == se.chol);
    CHECK(sm.var == se.var);

    const std::vector<double> a = mahalanobis_scores(w, sm);
    const std::vector<double> b = mahalanobis_scores_from_errors(err, sm);
    CHECK(a == b);
  }
}

TEST_CASE("statistics are insensitive to window order") {
  const std::int64_t n = 30, dim = 6;
  WindowMatrix w;
  w.n = n;
  w.dim = dim;
  SplitMix64 rng(9);
  w.rows.resize(static_cast<std::size_t>(n * dim));
  for (double& v : w.rows) v = rng.uniform(-2.0, 2.0);

  WindowMatrix shuffled = w;
  std::vector<std::int64_t> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  for (std::int64_t i = n - 1; i > 0; --i)
    std::swap(order[static_cast<std::size_t>(i)], order[rng.below(static_cast<std::uint64_t>(i + 1))]);
  for (std::int64_t i = 0; i < n; ++i)
    std::copy_n(w.rows.begin() + order[static_cast<std::size_t>(i)] * dim, dim, shuffled.rows.begin() + i * dim);

  const ErrorWindowStats sa = estimate_stats(w, 1, 1e-4, false);
  const ErrorWindowStats sb = estimate_stats(shuffled, 1, 1e-4, false);
  const std::vector<double> a = mahalanobis_scores(w, sa);
  const std::vector<double> b = mahalanobis_scores(w, sb);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-8));
}

TEST_CASE("threshold fixtures: clean split, tie toward the largest, degenerate input") {
  CHECK(optimize_threshold({1, 1, 9}, {0, 0, 1}) == 5.0);
  // F1 ties at 2/3 for -inf and 3.5; the larger threshold wins
  CHECK(optimize_threshold({1, 2, 3, 4}, {1, 0, 0, 1}) == 3.5);

  CHECK_THROWS_AS(optimize_threshold({}, {}), ValidationError);
  CHECK_THROWS_AS(optimize_threshold({1, 2}, {0, 0}), ValidationError);
  CHECK_THROWS_AS(optimize_threshold({1, 2}, {1, 1}), ValidationError);
  CHECK_THROWS_AS(optimize_threshold({1, 2}, {1}), ValidationError);
}

TEST_CASE("threshold sweep matches the exhaustive oracle exactly") {
  SplitMix64 rng(31337);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + static_cast<std::size_t>(rng.below(59));
    std::vector<double> scores(n);
    std::vector<std::uint8_t> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
      // quantized scores so ties are common
      scores[i] = std::floor(rng.uniform(0.0, 1.0) * 8.0) / 8.0;
      labels[i] = rng.below(2) ? 1 : 0;
    }
    labels[0] = 0;  // guarantee both classes
    labels[1] = 1;
    const double mine = optimize_threshold(scores, labels);
    const double ref = reference::exhaustive_best_f1_threshold(scores, labels);
    CHECK(mine == ref);
  }
}

TEST_CASE("flags land on the timestep a window ends at") {
  CHECK(flag_anomalies({0, 5, 1}, 2.0, 1) == std::vector<std::uint8_t>{0, 1, 0});
  CHECK(flag_anomalies({0, 5, 1}, 2.0, 2) == std::vector<std::uint8_t>{0, 0, 1, 0});
  // Equality flags: a score exactly at the threshold counts as anomalous.
  CHECK(flag_anomalies({0, 5, 1}, 1.0, 1) == std::vector<std::uint8_t>{0, 1, 1});
  CHECK(flag_anomalies({0, 5, 1}, 0.0, 1) == std::vector<std::uint8_t>{1, 1, 1});
  CHECK_THROWS_AS(flag_anomalies({}, 0.0, 1), ValidationError);
  CHECK_THROWS_AS(flag_anomalies({1.0}, 0.0, 0), ValidationError);
}

TEST_CASE("metrics fixture and zero-denominator handling") {
  const std::vector<std::uint8_t> flags = {1, 1, 0, 0, 0, 0, 0, 0, 1, 0};
  const std::vector<std::uint8_t> labels = {1, 1, 0, 0, 0, 0, 0, 0, 0, 1};
  const MetricsRecord m = compute_metrics(flags, labels);
  CHECK(m.tp == 2);
  CHECK(m.fp == 1);
  CHECK(m.tn == 6);
  CHECK(m.fn == 1);
  CHECK(m.accuracy == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(m.precision == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(m.recall == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(m.f1 == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(m.precision_defined);
  CHECK(m.recall_defined);
  CHECK(m.f1_defined);

  const MetricsRecord z = compute_metrics({0, 0, 0}, {0, 0, 0});
  CHECK(z.accuracy == 1.0);
  CHECK(z.precision == 0.0);
  CHECK_FALSE(z.precision_defined);
  CHECK_FALSE(z.recall_defined);
  CHECK_FALSE(z.f1_defined);

  CHECK_THROWS_AS(compute_metrics({}, {}), ValidationError);
  CHECK_THROWS_AS(compute_metrics({1}, {1, 0}), ValidationError);
}

TEST_CASE("flag runs are maximal half-open intervals") {
  const std::vector<Interval> runs = flag_runs({0, 1, 1, 0, 1});
  REQUIRE(runs.size() == 2);
  CHECK(runs[0].begin == 1);
  CHECK(runs[0].end == 3);
  CHECK(runs[1].begin == 4);
  CHECK(runs[1].end == 5);
  CHECK(flag_runs({0, 0}).empty());
  const std::vector<Interval> all = flag_runs({1, 1, 1});
  REQUIRE(all.size() == 1);
  CHECK(all[0].begin == 0);
  CHECK(all[0].end == 3);
}

TEST_CASE("windows over a shifted segment score far above benign ones") {
  const std::int64_t T = 400, l = 4;
  const Signal2D benign = random_signal(T, 2, 555, 0.1);
  const ErrorWindowStats st = estimate_stats_from_errors(benign, l, -1.0, false);

  Signal2D attacked = benign;
  for (std::int64_t t = 200; t < 240; ++t)
    for (int c = 0; c < 2; ++c) attacked.at(t, c) += 2.0;
  const std::vector<double> scores = mahalanobis_scores_from_errors(attacked, st);

  double benign_max = 0.0, attacked_min = std::numeric_limits<double>::infinity();
  for (std::int64_t w = 0; w + l <= T; ++w) {
    const bool fully_inside = w >= 200 && w + l <= 240;
    const bool fully_outside = w + l <= 200 || w >= 240;
    if (fully_inside) attacked_min = std::min(attacked_min, scores[static_cast<std::size_t>(w)]);
    if (fully_outside) benign_max = std::max(benign_max, scores[static_cast<std::size_t>(w)]);
  }
  CHECK(attacked_min > 10.0 * benign_max);
}

TEST_CASE("detect end to end: structural invariants and localization") {
  TcnAeConfig cfg;
  cfg.d = 2;
  cfg.n_filters = 3;
  cfg.kernel_size = 2;
  cfg.dilations = {1, 2};
  cfg.latent_channels = 2;
  cfg.pool_factor = 2;
  cfg.dropout_rate = 0.0;
  cfg.seed = 12;
  const TcnAeModel model = build_model(cfg);

  const std::int64_t T = 600;
  Signal2D train(T, 2);
  SplitMix64 rng(88);
  for (std::int64_t t = 0; t < T; ++t) {
    train.at(t, 0) = std::sin(0.05 * static_cast<double>(t)) + rng.uniform(-0.1, 0.1);
    train.at(t, 1) = std::cos(0.02 * static_cast<double>(t)) + rng.uniform(-0.1, 0.1);
  }
  Signal2D attacked = train;
  std::vector<std::uint8_t> labels(static_cast<std::size_t>(T), 0);
  for (std::int64_t t = 30; t < 45; ++t) {  // inside the 60-sample calibration prefix
    for (int c = 0; c < 2; ++c) attacked.at(t, c) += 3.0;
    labels[static_cast<std::size_t>(t)] = 1;
  }
  for (std::int64_t t = 300; t < 360; ++t) {
    for (int c = 0; c < 2; ++c) attacked.at(t, c) += 3.0;
    labels[static_cast<std::size_t>(t)] = 1;
  }

  DetectOptions opts;
  opts.window_len = 16;
  const AnomalyReport rep = detect(model, train, attacked, labels, opts);

  CHECK(rep.window_len == 16);
  CHECK(rep.calibration_len == 60);
  CHECK(rep.lambda > 0.0);
  REQUIRE(rep.flags.size() == static_cast<std::size_t>(T));
  REQUIRE(rep.scores.size() == static_cast<std::size_t>(T));
  for (std::int64_t t = 0; t < opts.window_len - 1; ++t) {
    CHECK(rep.flags[static_cast<std::size_t>(t)] == 0);
    CHECK(rep.scores[static_cast<std::size_t>(t)] == 0.0);
  }
  // flags agree with scores vs threshold past the cold start
  for (std::int64_t t = opts.window_len - 1; t < T; ++t)
    CHECK(rep.flags[static_cast<std::size_t>(t)] == (rep.scores[static_cast<std::size_t>(t)] >= rep.threshold ? 1 : 0));
  // runs reconstruct the flag vector
  std::vector<std::uint8_t> rebuilt(static_cast<std::size_t>(T), 0);
  for (const Interval& r : rep.runs)
    for (std::int64_t t = r.begin; t < r.end; ++t) rebuilt[static_cast<std::size_t>(t)] = 1;
  CHECK(rebuilt == rep.flags);
  CHECK(rep.overall.tp + rep.overall.fp + rep.overall.tn + rep.overall.fn == T);
  CHECK(rep.post_calibration.tp + rep.post_calibration.fp + rep.post_calibration.tn + rep.post_calibration.fn ==
        T - rep.calibration_len);

  // the attacked stretch scores well above a benign stretch of equal length
  double attacked_mean = 0.0, benign_mean = 0.0;
  for (std::int64_t t = 310; t < 360; ++t) attacked_mean += rep.scores[static_cast<std::size_t>(t)];
  for (std::int64_t t = 200; t < 250; ++t) benign_mean += rep.scores[static_cast<std::size_t>(t)];
  CHECK(attacked_mean > 10.0 * benign_mean);

  // deterministic: a second run reproduces the report bit for bit
  const AnomalyReport rep2 = detect(model, train, attacked, labels, opts);
  CHECK(rep2.threshold == rep.threshold);
  CHECK(rep2.flags == rep.flags);
  CHECK(rep2.scores == rep.scores);

  // a window longer than the calibration prefix cannot be calibrated
  DetectOptions bad = opts;
  bad.window_len = 64;
  CHECK_THROWS_AS(detect(model, train, attacked, labels, bad), ValidationError);
  std::vector<std::uint8_t> short_labels(10, 0);
  CHECK_THROWS_AS(detect(model, train, attacked, short_labels, opts), ValidationError);
}

#pragma once

#include <cstdint>
#include <vector>

#include "sentinel/replay.hpp"
#include "sentinel/signal.hpp"
#include "sentinel/tcn_ae.hpp"

namespace sentinel {

// Per-channel standardization fitted on benign telemetry. Population standard
// deviation; channels with (near-)zero spread keep their offset but divide by
// one, so constant channels pass through centered instead of exploding.
struct ScalerParams {
  std::vector<double> mean, std;
};
ScalerParams fit_scaler(const Signal2D& x);
Signal2D apply_scaler(const Signal2D& x, const ScalerParams& p);
Signal2D invert_scaler(const Signal2D& x, const ScalerParams& p);

// Sliding windows over per-sample reconstruction errors: row w holds rows
// [w, w+l) of err flattened time-major, so dim = l*d and n = T-l+1.
struct WindowMatrix {
  std::int64_t n = 0, dim = 0;
  std::vector<double> rows;  // n x dim, row-major
};
WindowMatrix sliding_error_windows(const Signal2D& err, std::int64_t l);

// Gaussian fit over benign error windows: mean and a Cholesky factor of the
// ridge-stabilized covariance (sample covariance, n-1 denominator). In diag
// mode only the per-coordinate variances are kept.
struct ErrorWindowStats {
  std::int64_t dim = 0;
  std::int64_t window_len = 0;
  std::vector<double> mu;
  std::vector<double> chol;  // lower triangular, row-major; empty in diag mode
  std::vector<double> var;   // diag mode variances (ridge included); else empty
  double lambda = 0.0;       // ridge actually applied
  bool diag = false;
};

// lambda < 0 selects the automatic ridge 1e-3 * trace(cov)/dim (floored at
// 1e-12); lambda >= 0 is used as given. Throws NumericError when the
// stabilized covariance still fails to factor.
ErrorWindowStats estimate_stats(const WindowMatrix& w, std::int64_t window_len, double lambda, bool diag);
// Same statistics computed from the error series directly (no window matrix
// in memory); bit-identical to the matrix path.
ErrorWindowStats estimate_stats_from_errors(const Signal2D& err, std::int64_t l, double lambda, bool diag);

// Squared Mahalanobis distance of every window from the benign fit, solved
// against the Cholesky factor (the covariance inverse is never formed).
std::vector<double> mahalanobis_scores(const WindowMatrix& w, const ErrorWindowStats& st);
std::vector<double> mahalanobis_scores_from_errors(const Signal2D& err, const ErrorWindowStats& st);

// Threshold maximizing pointwise F1 on (score, label) pairs. Candidates are
// -inf, midpoints between consecutive distinct sorted scores, and +inf; a
// sample is predicted positive when score >= threshold. Ties prefer the
// largest candidate. Requires both classes to be present.
double optimize_threshold(const std::vector<double>& scores, const std::vector<std::uint8_t>& labels);

// Per-timestep flags from per-window scores (flagged when score >= threshold):
// the flag at t reports the window ending at t, and the first l-1 steps (no
// complete window yet) stay clear.
std::vector<std::uint8_t> flag_anomalies(const std::vector<double>& window_scores, double threshold,
                                         std::int64_t l);

struct MetricsRecord {
  std::int64_t tp = 0, fp = 0, tn = 0, fn = 0;
  double accuracy = 0.0, precision = 0.0, recall = 0.0, f1 = 0.0;
  // Zero-denominator metrics are reported as 0 with the flag cleared.
  bool precision_defined = false, recall_defined = false, f1_defined = false;
};
MetricsRecord compute_metrics(const std::vector<std::uint8_t>& flags, const std::vector<std::uint8_t>& labels);

std::vector<Interval> flag_runs(const std::vector<std::uint8_t>& flags);

struct DetectOptions {
  std::int64_t window_len = 128;
  double prefix_fraction = 0.10;  // labeled calibration prefix of the scored series
  double lambda = -1.0;           // ridge; negative = automatic
  bool diag = false;              // diagonal covariance only
  bool include_scores = true;     // carry per-timestep scores in the report
};

struct AnomalyReport {
  double threshold = 0.0;
  std::int64_t window_len = 0;
  std::int64_t calibration_len = 0;
  double lambda = 0.0;
  bool diag = false;
  std::vector<double> scores;        // per timestep (0 during the cold start); empty unless requested
  std::vector<std::uint8_t> flags;   // per timestep
  std::vector<Interval> runs;        // maximal flagged stretches
  MetricsRecord overall;             // against the full label vector
  MetricsRecord post_calibration;    // restricted to [calibration_len, T)
};

// Full detection pass: fit the scaler on benign telemetry, score the labeled
// series against the model's reconstruction-error statistics (estimated on
// the benign series), calibrate the threshold on the leading prefix of the
// labeled series, and flag the rest.
AnomalyReport detect(const TcnAeModel& model, const Signal2D& train_features, const Signal2D& features,
                     const std::vector<std::uint8_t>& labels, const DetectOptions& opts);

}  // namespace sentinel

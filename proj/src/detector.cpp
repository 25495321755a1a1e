#include "sentinel/detector.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "sentinel/common.hpp"

namespace sentinel {
namespace {

// A window-matrix column as a strided pointer. The same data can live either
// in an explicit n x dim matrix (stride dim) or in a d x T transposed error
// buffer (stride 1); using one accessor keeps both paths bit-identical.
struct ColView {
  const double* p = nullptr;
  std::int64_t stride = 0;
};

double col_dot(const ColView& a, const ColView& b, std::int64_t n) {
  // Explicit fused multiply-add: the compiler may otherwise contract the two
  // stride layouts differently, and the bit-identity between them would then
  // depend on optimization flags.
  double s = 0.0;
  for (std::int64_t w = 0; w < n; ++w) s = std::fma(a.p[w * a.stride], b.p[w * b.stride], s);
  return s;
}

double col_mean(const ColView& a, std::int64_t n) {
  double s = 0.0;
  for (std::int64_t w = 0; w < n; ++w) s += a.p[w * a.stride];
  return s / static_cast<double>(n);
}

std::vector<ColView> matrix_cols(const WindowMatrix& w) {
  std::vector<ColView> cols(static_cast<std::size_t>(w.dim));
  for (std::int64_t j = 0; j < w.dim; ++j) cols[static_cast<std::size_t>(j)] = {w.rows.data() + j, w.dim};
  return cols;
}

// err transposed to d rows of length T; column (tau, c) of the implicit
// window matrix is then the contiguous slice errT[c][tau .. tau + n).
std::vector<double> transpose_errors(const Signal2D& err) {
  std::vector<double> errT(static_cast<std::size_t>(err.T) * static_cast<std::size_t>(err.d));
  for (std::int64_t t = 0; t < err.T; ++t)
    for (int c = 0; c < err.d; ++c) errT[static_cast<std::size_t>(c) * static_cast<std::size_t>(err.T) + static_cast<std::size_t>(t)] = err.at(t, c);
  return errT;
}

std::vector<ColView> error_cols(const std::vector<double>& errT, std::int64_t T, int d, std::int64_t l) {
  std::vector<ColView> cols(static_cast<std::size_t>(l) * static_cast<std::size_t>(d));
  for (std::int64_t tau = 0; tau < l; ++tau)
    for (int c = 0; c < d; ++c)
      cols[static_cast<std::size_t>(tau * d + c)] = {errT.data() + static_cast<std::int64_t>(c) * T + tau, 1};
  return cols;
}

void cholesky_lower_inplace(std::vector<double>& a, std::int64_t dim) {
  for (std::int64_t i = 0; i < dim; ++i) {
    double* li = a.data() + i * dim;
    for (std::int64_t j = 0; j <= i; ++j) {
      const double* lj = a.data() + j * dim;
      double s = li[j];
      for (std::int64_t k = 0; k < j; ++k) s -= li[k] * lj[k];
      if (i == j) {
        if (!(s > 0.0) || !std::isfinite(s))
          throw NumericError("covariance of error windows is not positive definite; increase the ridge (lambda)");
        li[j] = std::sqrt(s);
      } else {
        li[j] = s / lj[j];
      }
    }
    for (std::int64_t j = i + 1; j < dim; ++j) li[j] = 0.0;
  }
}

ErrorWindowStats estimate_stats_impl(const std::vector<ColView>& cols, std::int64_t n, std::int64_t window_len,
                                     double lambda, bool diag) {
  const std::int64_t dim = static_cast<std::int64_t>(cols.size());
  if (n < 2) throw ValidationError("need at least 2 error windows to estimate covariance, got " + std::to_string(n));
  if (window_len < 1) throw ValidationError("window length must be >= 1");

  ErrorWindowStats st;
  st.dim = dim;
  st.window_len = window_len;
  st.diag = diag;
  st.mu.resize(static_cast<std::size_t>(dim));
#pragma omp parallel for schedule(static)
  for (std::int64_t j = 0; j < dim; ++j) st.mu[static_cast<std::size_t>(j)] = col_mean(cols[static_cast<std::size_t>(j)], n);

  const double nd = static_cast<double>(n);
  const double denom = nd - 1.0;
  if (diag) {
    st.var.resize(static_cast<std::size_t>(dim));
#pragma omp parallel for schedule(static)
    for (std::int64_t j = 0; j < dim; ++j) {
      const double mu = st.mu[static_cast<std::size_t>(j)];
      st.var[static_cast<std::size_t>(j)] = (col_dot(cols[static_cast<std::size_t>(j)], cols[static_cast<std::size_t>(j)], n) - nd * mu * mu) / denom;
    }
    double trace = 0.0;
    for (std::int64_t j = 0; j < dim; ++j) trace += st.var[static_cast<std::size_t>(j)];
    st.lambda = lambda < 0.0 ? std::max(1e-3 * trace / static_cast<double>(dim), 1e-12) : lambda;
    for (std::int64_t j = 0; j < dim; ++j) {
      double& v = st.var[static_cast<std::size_t>(j)];
      v += st.lambda;
      if (!(v > 0.0) || !std::isfinite(v))
        throw NumericError("diagonal variance is not positive; increase the ridge (lambda)");
    }
    return st;
  }

  st.chol.resize(static_cast<std::size_t>(dim) * static_cast<std::size_t>(dim));
#pragma omp parallel for schedule(dynamic, 8)
  for (std::int64_t j1 = 0; j1 < dim; ++j1) {
    const double mu1 = st.mu[static_cast<std::size_t>(j1)];
    for (std::int64_t j2 = j1; j2 < dim; ++j2) {
      const double c = (col_dot(cols[static_cast<std::size_t>(j1)], cols[static_cast<std::size_t>(j2)], n) -
                        nd * mu1 * st.mu[static_cast<std::size_t>(j2)]) /
                       denom;
      st.chol[static_cast<std::size_t>(j1 * dim + j2)] = c;
      st.chol[static_cast<std::size_t>(j2 * dim + j1)] = c;
    }
  }
  double trace = 0.0;
  for (std::int64_t j = 0; j < dim; ++j) trace += st.chol[static_cast<std::size_t>(j * dim + j)];
  st.lambda = lambda < 0.0 ? std::max(1e-3 * trace / static_cast<double>(dim), 1e-12) : lambda;
  for (std::int64_t j = 0; j < dim; ++j) st.chol[static_cast<std::size_t>(j * dim + j)] += st.lambda;
  cholesky_lower_inplace(st.chol, dim);
  return st;
}

// Windows are scored in blocks so the Cholesky factor streams through cache
// once per block instead of once per window.
constexpr std::int64_t kScoreBlock = 64;

std::vector<double> scores_impl(const std::vector<ColView>& cols, std::int64_t n, const ErrorWindowStats& st) {
  const std::int64_t dim = st.dim;
  if (static_cast<std::int64_t>(cols.size()) != dim)
    throw ValidationError("window dimension " + std::to_string(cols.size()) + " does not match statistics dimension " +
                          std::to_string(dim));
  if (static_cast<std::int64_t>(st.mu.size()) != dim) throw ValidationError("statistics mean has the wrong size");
  if (!st.diag && static_cast<std::int64_t>(st.chol.size()) != dim * dim)
    throw ValidationError("statistics Cholesky factor has the wrong size");
  if (st.diag && static_cast<std::int64_t>(st.var.size()) != dim) throw ValidationError("statistics variances have the wrong size");

  std::vector<double> out(static_cast<std::size_t>(n));
  const std::int64_t n_blocks = (n + kScoreBlock - 1) / kScoreBlock;
#pragma omp parallel
  {
    std::vector<double> v(static_cast<std::size_t>(kScoreBlock) * static_cast<std::size_t>(dim));
    std::vector<double> y(static_cast<std::size_t>(kScoreBlock) * static_cast<std::size_t>(dim));
#pragma omp for schedule(static)
    for (std::int64_t ib = 0; ib < n_blocks; ++ib) {
      const std::int64_t w0 = ib * kScoreBlock;
      const std::int64_t nb = std::min(kScoreBlock, n - w0);
      for (std::int64_t b = 0; b < nb; ++b)
        for (std::int64_t j = 0; j < dim; ++j)
          v[static_cast<std::size_t>(b * dim + j)] =
              cols[static_cast<std::size_t>(j)].p[(w0 + b) * cols[static_cast<std::size_t>(j)].stride] - st.mu[static_cast<std::size_t>(j)];
      if (st.diag) {
        for (std::int64_t b = 0; b < nb; ++b) {
          double s = 0.0;
          const double* vb = v.data() + b * dim;
          for (std::int64_t j = 0; j < dim; ++j) s += vb[j] * vb[j] / st.var[static_cast<std::size_t>(j)];
          out[static_cast<std::size_t>(w0 + b)] = s;
        }
        continue;
      }
      for (std::int64_t i = 0; i < dim; ++i) {
        const double* li = st.chol.data() + i * dim;
        for (std::int64_t b = 0; b < nb; ++b) {
          double* yb = y.data() + b * dim;
          double s = v[static_cast<std::size_t>(b * dim + i)];
          for (std::int64_t j = 0; j < i; ++j) s -= li[j] * yb[j];
          yb[i] = s / li[i];
        }
      }
      for (std::int64_t b = 0; b < nb; ++b) {
        double s = 0.0;
        const double* yb = y.data() + b * dim;
        for (std::int64_t j = 0; j < dim; ++j) s += yb[j] * yb[j];
        out[static_cast<std::size_t>(w0 + b)] = s;
      }
    }
  }
  return out;
}

Signal2D subtract(const Signal2D& a, const Signal2D& b) {
  require_same_shape(a, b, "subtract");
  Signal2D out = a;
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] -= b.data[i];
  return out;
}

}  // namespace

ScalerParams fit_scaler(const Signal2D& x) {
  require_nonempty(x, "fit_scaler");
  ScalerParams p;
  p.mean.resize(static_cast<std::size_t>(x.d));
  p.std.resize(static_cast<std::size_t>(x.d));
  for (int c = 0; c < x.d; ++c) {
    double s = 0.0;
    for (std::int64_t t = 0; t < x.T; ++t) s += x.at(t, c);
    const double mean = s / static_cast<double>(x.T);
    double ss = 0.0;
    for (std::int64_t t = 0; t < x.T; ++t) {
      const double dlt = x.at(t, c) - mean;
      ss += dlt * dlt;
    }
    double sd = std::sqrt(ss / static_cast<double>(x.T));
    if (sd < 1e-12) sd = 1.0;
    p.mean[static_cast<std::size_t>(c)] = mean;
    p.std[static_cast<std::size_t>(c)] = sd;
  }
  return p;
}

Signal2D apply_scaler(const Signal2D& x, const ScalerParams& p) {
  require_nonempty(x, "apply_scaler");
  if (static_cast<int>(p.mean.size()) != x.d || static_cast<int>(p.std.size()) != x.d)
    throw ValidationError("scaler was fitted on " + std::to_string(p.mean.size()) + " channels, input has " +
                          std::to_string(x.d));
  Signal2D out = x;
  for (std::int64_t t = 0; t < x.T; ++t)
    for (int c = 0; c < x.d; ++c)
      out.at(t, c) = (x.at(t, c) - p.mean[static_cast<std::size_t>(c)]) / p.std[static_cast<std::size_t>(c)];
  return out;
}

Signal2D invert_scaler(const Signal2D& x, const ScalerParams& p) {
  require_nonempty(x, "invert_scaler");
  if (static_cast<int>(p.mean.size()) != x.d || static_cast<int>(p.std.size()) != x.d)
    throw ValidationError("scaler was fitted on " + std::to_string(p.mean.size()) + " channels, input has " +
                          std::to_string(x.d));
  Signal2D out = x;
  for (std::int64_t t = 0; t < x.T; ++t)
    for (int c = 0; c < x.d; ++c)
      out.at(t, c) = x.at(t, c) * p.std[static_cast<std::size_t>(c)] + p.mean[static_cast<std::size_t>(c)];
  return out;
}

WindowMatrix sliding_error_windows(const Signal2D& err, std::int64_t l) {
  require_nonempty(err, "sliding_error_windows");
  if (l < 1) throw ValidationError("window length must be >= 1, got " + std::to_string(l));
  if (err.T < l)
    throw ValidationError("series of length " + std::to_string(err.T) + " is shorter than the window length " +
                          std::to_string(l));
  WindowMatrix w;
  w.n = err.T - l + 1;
  w.dim = l * err.d;
  w.rows.resize(static_cast<std::size_t>(w.n) * static_cast<std::size_t>(w.dim));
  for (std::int64_t i = 0; i < w.n; ++i) {
    double* row = w.rows.data() + i * w.dim;
    for (std::int64_t tau = 0; tau < l; ++tau)
      for (int c = 0; c < err.d; ++c) row[tau * err.d + c] = err.at(i + tau, c);
  }
  return w;
}

ErrorWindowStats estimate_stats(const WindowMatrix& w, std::int64_t window_len, double lambda, bool diag) {
  if (w.n <= 0 || w.dim <= 0) throw ValidationError("window matrix is empty");
  return estimate_stats_impl(matrix_cols(w), w.n, window_len, lambda, diag);
}

ErrorWindowStats estimate_stats_from_errors(const Signal2D& err, std::int64_t l, double lambda, bool diag) {
  require_nonempty(err, "estimate_stats_from_errors");
  if (l < 1) throw ValidationError("window length must be >= 1, got " + std::to_string(l));
  if (err.T < l)
    throw ValidationError("series of length " + std::to_string(err.T) + " is shorter than the window length " +
                          std::to_string(l));
  const std::vector<double> errT = transpose_errors(err);
  return estimate_stats_impl(error_cols(errT, err.T, err.d, l), err.T - l + 1, l, lambda, diag);
}

std::vector<double> mahalanobis_scores(const WindowMatrix& w, const ErrorWindowStats& st) {
  if (w.n <= 0 || w.dim <= 0) throw ValidationError("window matrix is empty");
  return scores_impl(matrix_cols(w), w.n, st);
}

std::vector<double> mahalanobis_scores_from_errors(const Signal2D& err, const ErrorWindowStats& st) {
  require_nonempty(err, "mahalanobis_scores_from_errors");
  const std::int64_t l = st.window_len;
  if (l < 1) throw ValidationError("statistics carry an invalid window length");
  if (st.dim % l != 0)
    throw ValidationError("statistics dimension " + std::to_string(st.dim) + " is not divisible by the window length " +
                          std::to_string(l));
  if (st.dim / l != err.d)
    throw ValidationError("statistics expect " + std::to_string(st.dim / l) + " channels, series has " +
                          std::to_string(err.d));
  if (err.T < l)
    throw ValidationError("series of length " + std::to_string(err.T) + " is shorter than the window length " +
                          std::to_string(l));
  const std::vector<double> errT = transpose_errors(err);
  return scores_impl(error_cols(errT, err.T, err.d, l), err.T - l + 1, st);
}

double optimize_threshold(const std::vector<double>& scores, const std::vector<std::uint8_t>& labels) {
  if (scores.empty()) throw ValidationError("cannot calibrate a threshold on an empty score list");
  if (scores.size() != labels.size())
    throw ValidationError("got " + std::to_string(scores.size()) + " scores but " + std::to_string(labels.size()) +
                          " labels");
  const std::int64_t n = static_cast<std::int64_t>(scores.size());
  std::int64_t total_pos = 0;
  for (std::uint8_t lb : labels) total_pos += lb ? 1 : 0;
  if (total_pos == 0 || total_pos == n)
    throw ValidationError(
        "threshold calibration needs both attacked and benign samples in the calibration window; got " +
        std::to_string(total_pos) + " of " + std::to_string(n) + " attacked");

  std::vector<std::pair<double, std::uint8_t>> sorted(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) sorted[static_cast<std::size_t>(i)] = {scores[static_cast<std::size_t>(i)], labels[static_cast<std::size_t>(i)] ? std::uint8_t{1} : std::uint8_t{0}};
  std::sort(sorted.begin(), sorted.end());

  // pos_at_or_after[i] = positives among sorted[i..n)
  std::vector<std::int64_t> pos_suffix(static_cast<std::size_t>(n) + 1, 0);
  for (std::int64_t i = n - 1; i >= 0; --i)
    pos_suffix[static_cast<std::size_t>(i)] = pos_suffix[static_cast<std::size_t>(i) + 1] + (sorted[static_cast<std::size_t>(i)].second ? 1 : 0);

  // Candidate i predicts the i lowest scores negative. Scanning ascending
  // with >= keeps the last (largest) threshold among F1 ties.
  const double inf = std::numeric_limits<double>::infinity();
  double best_thr = -inf;
  double best_f1 = -1.0;
  for (std::int64_t i = 0; i <= n; ++i) {
    if (i > 0 && i < n && !(sorted[static_cast<std::size_t>(i)].first > sorted[static_cast<std::size_t>(i) - 1].first))
      continue;  // equal scores cannot be split
    const std::int64_t tp = pos_suffix[static_cast<std::size_t>(i)];
    const std::int64_t fp = (n - i) - tp;
    const std::int64_t fn = total_pos - tp;
    const double f1 = 2 * tp + fp + fn > 0 ? 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn) : 0.0;
    double thr;
    if (i == 0)
      thr = -inf;
    else if (i == n)
      thr = inf;
    else
      thr = 0.5 * (sorted[static_cast<std::size_t>(i) - 1].first + sorted[static_cast<std::size_t>(i)].first);
    if (f1 >= best_f1) {
      best_f1 = f1;
      best_thr = thr;
    }
  }
  return best_thr;
}

std::vector<std::uint8_t> flag_anomalies(const std::vector<double>& window_scores, double threshold, std::int64_t l) {
  if (l < 1) throw ValidationError("window length must be >= 1, got " + std::to_string(l));
  if (window_scores.empty()) throw ValidationError("no window scores to flag");
  const std::int64_t n = static_cast<std::int64_t>(window_scores.size());
  std::vector<std::uint8_t> flags(static_cast<std::size_t>(n + l - 1), 0);
  for (std::int64_t w = 0; w < n; ++w)
    flags[static_cast<std::size_t>(w + l - 1)] = window_scores[static_cast<std::size_t>(w)] >= threshold ? 1 : 0;
  return flags;
}

MetricsRecord compute_metrics(const std::vector<std::uint8_t>& flags, const std::vector<std::uint8_t>& labels) {
  if (flags.empty()) throw ValidationError("cannot compute metrics over an empty series");
  if (flags.size() != labels.size())
    throw ValidationError("got " + std::to_string(flags.size()) + " flags but " + std::to_string(labels.size()) +
                          " labels");
  MetricsRecord m;
  for (std::size_t i = 0; i < flags.size(); ++i) {
    const bool f = flags[i] != 0;
    const bool a = labels[i] != 0;
    if (f && a)
      ++m.tp;
    else if (f && !a)
      ++m.fp;
    else if (!f && a)
      ++m.fn;
    else
      ++m.tn;
  }
  const double total = static_cast<double>(flags.size());
  m.accuracy = static_cast<double>(m.tp + m.tn) / total;
  if (m.tp + m.fp > 0) {
    m.precision = static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fp);
    m.precision_defined = true;
  }
  if (m.tp + m.fn > 0) {
    m.recall = static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fn);
    m.recall_defined = true;
  }
  if (2 * m.tp + m.fp + m.fn > 0) {
    m.f1 = 2.0 * static_cast<double>(m.tp) / static_cast<double>(2 * m.tp + m.fp + m.fn);
    m.f1_defined = true;
  }
  return m;
}

std::vector<Interval> flag_runs(const std::vector<std::uint8_t>& flags) {
  std::vector<Interval> runs;
  const std::int64_t n = static_cast<std::int64_t>(flags.size());
  std::int64_t t = 0;
  while (t < n) {
    if (flags[static_cast<std::size_t>(t)] == 0) {
      ++t;
      continue;
    }
    std::int64_t e = t;
    while (e < n && flags[static_cast<std::size_t>(e)] != 0) ++e;
    runs.push_back({t, e});
    t = e;
  }
  return runs;
}

AnomalyReport detect(const TcnAeModel& model, const Signal2D& train_features, const Signal2D& features,
                     const std::vector<std::uint8_t>& labels, const DetectOptions& opts) {
  require_nonempty(train_features, "detect (training features)");
  require_nonempty(features, "detect (scored features)");
  if (train_features.d != features.d)
    throw ValidationError("training features have " + std::to_string(train_features.d) +
                          " channels, scored features have " + std::to_string(features.d));
  if (static_cast<std::int64_t>(labels.size()) != features.T)
    throw ValidationError("got " + std::to_string(labels.size()) + " labels for " + std::to_string(features.T) +
                          " samples");
  const std::int64_t l = opts.window_len;
  if (l < 1) throw ValidationError("window length must be >= 1, got " + std::to_string(l));
  if (!(opts.prefix_fraction > 0.0) || !(opts.prefix_fraction < 1.0))
    throw ValidationError("calibration prefix fraction must lie strictly between 0 and 1");
  const std::int64_t cal_len = static_cast<std::int64_t>(std::floor(opts.prefix_fraction * static_cast<double>(features.T)));
  if (cal_len <= l)
    throw ValidationError("calibration prefix of " + std::to_string(cal_len) +
                          " samples does not exceed the window length " + std::to_string(l) +
                          "; use a longer series or a shorter window");

  const ScalerParams scaler = fit_scaler(train_features);

  const Signal2D xs_train = apply_scaler(train_features, scaler);
  const Signal2D err_train = subtract(xs_train, reconstruct(model, xs_train));
  const ErrorWindowStats stats = estimate_stats_from_errors(err_train, l, opts.lambda, opts.diag);

  const Signal2D xs = apply_scaler(features, scaler);
  const Signal2D err = subtract(xs, reconstruct(model, xs));
  const std::vector<double> window_scores = mahalanobis_scores_from_errors(err, stats);

  // Calibrate on windows that end inside the labeled prefix; each window is
  // paired with the label of the timestep it flags.
  const std::int64_t n_cal = cal_len - l + 1;
  const std::vector<double> cal_scores(window_scores.begin(), window_scores.begin() + n_cal);
  std::vector<std::uint8_t> cal_labels(static_cast<std::size_t>(n_cal));
  for (std::int64_t w = 0; w < n_cal; ++w) cal_labels[static_cast<std::size_t>(w)] = labels[static_cast<std::size_t>(w + l - 1)];
  const double threshold = optimize_threshold(cal_scores, cal_labels);

  AnomalyReport rep;
  rep.threshold = threshold;
  rep.window_len = l;
  rep.calibration_len = cal_len;
  rep.lambda = stats.lambda;
  rep.diag = stats.diag;
  rep.flags = flag_anomalies(window_scores, threshold, l);
  rep.runs = flag_runs(rep.flags);
  rep.overall = compute_metrics(rep.flags, labels);
  const std::vector<std::uint8_t> post_flags(rep.flags.begin() + cal_len, rep.flags.end());
  const std::vector<std::uint8_t> post_labels(labels.begin() + cal_len, labels.end());
  rep.post_calibration = compute_metrics(post_flags, post_labels);
  if (opts.include_scores) {
    rep.scores.assign(static_cast<std::size_t>(features.T), 0.0);
    for (std::size_t w = 0; w < window_scores.size(); ++w) rep.scores[w + static_cast<std::size_t>(l) - 1] = window_scores[w];
  }
  return rep;
}

}  // namespace sentinel

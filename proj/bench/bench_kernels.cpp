// Micro-benchmark: serial reference implementations vs the OpenMP kernels.
//
// Each section runs the serial reference and the optimized kernel on the same
// inputs, reports wall time per call, the speedup, and the largest elementwise
// difference between the two results. Kernel-only rows (backward passes) have
// no independent serial twin and report plain timings.
//
// Usage: bench-kernels [T]   (default horizon 4096)

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <string>
#include <vector>

#include "sentinel/common.hpp"
#include "sentinel/conv.hpp"
#include "sentinel/detector.hpp"
#include "sentinel/reference.hpp"
#include "sentinel/signal.hpp"

namespace {

using Clock = std::chrono::steady_clock;

double time_ms(const std::function<void()>& fn, int reps) {
  fn();  // warm up
  const auto t0 = Clock::now();
  for (int r = 0; r < reps; ++r) fn();
  const auto t1 = Clock::now();
  return std::chrono::duration<double, std::milli>(t1 - t0).count() / reps;
}

int reps_for(const std::function<void()>& fn) {
  const auto t0 = Clock::now();
  fn();
  const double once = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
  return std::max(1, static_cast<int>(300.0 / std::max(once, 0.01)));
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

void print_pair(const char* name, double ref_ms, double opt_ms, double diff) {
  std::printf("%-28s reference %9.3f ms   kernel %9.3f ms   speedup %5.2fx   max|diff| %.3e\n", name, ref_ms,
              opt_ms, ref_ms / opt_ms, diff);
}

void print_solo(const char* name, double ms) {
  std::printf("%-28s %60s %9.3f ms\n", name, "kernel", ms);
}

}  // namespace

int main(int argc, char** argv) {
  const std::int64_t T = argc > 1 ? std::strtoll(argv[1], nullptr, 10) : 4096;
  sentinel::SplitMix64 rng(0xBE5C'11E5ULL);

  // Shapes mirror the autoencoder's dilated blocks: k=3 causal taps, 20
  // filters, mid-stack dilation.
  const int d = 20, k = 3, dilation = 8;
  sentinel::Signal2D x(T, d);
  for (std::int64_t n = 0; n < T; ++n)
    for (int c = 0; c < d; ++c) x.at(n, c) = rng.uniform(-1.0, 1.0);
  sentinel::ConvFilter f = sentinel::make_conv_filter(k, d, d, dilation, true, rng);

  std::printf("horizon T=%lld, channels %d -> %d, k=%d, dilation %d\n\n", static_cast<long long>(T), d, d, k,
              dilation);

  // --- dilated convolution, forward ---
  sentinel::Signal2D y_ref, y_opt;
  auto run_ref = [&] { y_ref = sentinel::reference::dilated_conv1d(x, f); };
  auto run_opt = [&] { y_opt = sentinel::dilated_conv1d(x, f); };
  const int rf = reps_for(run_ref), ro = reps_for(run_opt);
  const double fwd_ref = time_ms(run_ref, rf);
  const double fwd_opt = time_ms(run_opt, ro);
  print_pair("dilated_conv1d", fwd_ref, fwd_opt, max_abs_diff(y_ref.data, y_opt.data));

  // --- dilated convolution, backward (kernel only; tests check it against
  // finite differences) ---
  sentinel::Signal2D gy(T, d);
  for (std::int64_t n = 0; n < T; ++n)
    for (int c = 0; c < d; ++c) gy.at(n, c) = rng.uniform(-1.0, 1.0);
  sentinel::ConvGrads gr;
  auto run_bwd = [&] { gr = sentinel::dilated_conv1d_grads(x, f, gy); };
  print_solo("dilated_conv1d_grads", time_ms(run_bwd, reps_for(run_bwd)));

  // --- batched Mahalanobis scoring: explicit inverse vs Cholesky solves ---
  {
    const std::int64_t l = 2;  // window_len * channels = 16: the explicit inverse needs small, well-conditioned dims
    sentinel::Signal2D err(T, 8);
    for (std::int64_t n = 0; n < T; ++n)
      for (int c = 0; c < 8; ++c) err.at(n, c) = rng.uniform(-1.0, 1.0);
    const sentinel::WindowMatrix w = sentinel::sliding_error_windows(err, l);
    const sentinel::ErrorWindowStats st = sentinel::estimate_stats(w, l, 1e-6, false);

    // Reconstruct the dense covariance the stats were estimated from so the
    // reference path can invert it directly.
    const std::size_t dim = st.mu.size();
    std::vector<double> cov(dim * dim, 0.0);
    for (std::size_t i = 0; i < w.rows.size() / dim; ++i)
      for (std::size_t a = 0; a < dim; ++a)
        for (std::size_t b = 0; b < dim; ++b)
          cov[a * dim + b] += (w.rows[i * dim + a] - st.mu[a]) * (w.rows[i * dim + b] - st.mu[b]);
    const double nw = static_cast<double>(w.rows.size() / dim) - 1.0;  // Bessel-corrected, like the kernel
    for (std::size_t i = 0; i < dim; ++i)
      for (std::size_t j = 0; j < dim; ++j) cov[i * dim + j] /= nw;
    for (std::size_t i = 0; i < dim; ++i) cov[i * dim + i] += st.lambda;

    std::vector<double> s_ref, s_opt;
    auto run_mref = [&] {
      s_ref = sentinel::reference::mahalanobis_explicit_inverse(w.rows, w.rows.size() / dim, dim, st.mu, cov);
    };
    auto run_mopt = [&] { s_opt = sentinel::mahalanobis_scores(w, st); };
    const double m_ref = time_ms(run_mref, reps_for(run_mref));
    const double m_opt = time_ms(run_mopt, reps_for(run_mopt));
    print_pair("mahalanobis batch", m_ref, m_opt, max_abs_diff(s_ref, s_opt));
  }

  // --- threshold search: exhaustive recount vs sorted single pass ---
  {
    std::vector<double> scores(static_cast<std::size_t>(T));
    std::vector<std::uint8_t> labels(static_cast<std::size_t>(T));
    for (std::size_t i = 0; i < scores.size(); ++i) {
      labels[i] = rng.uniform(0.0, 1.0) < 0.05 ? 1 : 0;
      scores[i] = rng.uniform(0.0, 1.0) + (labels[i] ? 1.5 : 0.0);
    }
    double t_ref = 0.0, t_opt = 0.0;
    auto run_tref = [&] { t_ref = sentinel::reference::exhaustive_best_f1_threshold(scores, labels); };
    auto run_topt = [&] { t_opt = sentinel::optimize_threshold(scores, labels); };
    const double ms_ref = time_ms(run_tref, reps_for(run_tref));
    const double ms_opt = time_ms(run_topt, reps_for(run_topt));
    print_pair("optimize_threshold", ms_ref, ms_opt, std::abs(t_ref - t_opt));
  }

  return 0;
}

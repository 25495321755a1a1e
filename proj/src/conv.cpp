#include "sentinel/conv.hpp"

#include <algorithm>
#include <cmath>

#if defined(_OPENMP)
#include <omp.h>
#endif

namespace sentinel {

namespace {

void validate_filter(const ConvFilter& f, const char* who) {
  if (f.k < 1 || f.d_in < 1 || f.d_out < 1 || f.dilation < 1)
    throw ValidationError(std::string(who) + ": k, d_in, d_out, dilation must be positive");
  const std::size_t nv = static_cast<std::size_t>(f.k) * f.d_in * f.d_out;
  if (f.v.size() != nv || f.g.size() != static_cast<std::size_t>(f.d_out) || f.bias.size() != static_cast<std::size_t>(f.d_out))
    throw ValidationError(std::string(who) + ": parameter array sizes do not match k*d_in*d_out");
}

// --- register-blocked row kernels ------------------------------------------
//
// One output row is a short recurrence over (tap, input channel); accumulated
// straight into the output array it round-trips memory on every term and the
// store-to-load latency dominates the kernel. These paths pad the channel
// dimension to NV*8 lanes so the compile-time lane loops keep the whole row
// in vector registers until the final store. Every output element still
// receives its terms in (tap ascending, channel ascending) order, so the
// result is independent of the blocking, the padding and the thread count.

// Single row with per-tap bounds checks; also serves the few boundary rows.
template <int NV>
void conv_row_checked(const double* __restrict xd, std::int64_t T, int d_in, const double* __restrict wtp,
                      const double* __restrict biasp, int k, std::int64_t q, int shift, int d_out,
                      double* __restrict yd, std::int64_t n) {
  constexpr int W = NV * 8;
  double acc[W];
  for (int u = 0; u < W; ++u) acc[u] = biasp[u];
  for (int j = 0; j < k; ++j) {
    const std::int64_t m = n - q * (j - shift);
    if (m < 0 || m >= T) continue;
    const double* __restrict xm = xd + m * d_in;
    const double* __restrict wj = wtp + static_cast<std::size_t>(j) * d_in * W;
    for (int ci = 0; ci < d_in; ++ci) {
      const double xv = xm[ci];
      const double* __restrict wc = wj + static_cast<std::size_t>(ci) * W;
      for (int u = 0; u < W; ++u) acc[u] += xv * wc[u];
    }
  }
  double* __restrict yn = yd + n * d_out;
  for (int o = 0; o < d_out; ++o) yn[o] = acc[o];
}

// Rows [n0, n1) where the caller guarantees every tap lands inside [0, T);
// four rows share each weight load to hide the fused multiply-add latency.
template <int NV>
void conv_rows_interior(const double* __restrict xd, std::int64_t T, int d_in, const double* __restrict wtp,
                        const double* __restrict biasp, int k, std::int64_t q, int shift, int d_out,
                        double* __restrict yd, std::int64_t n0, std::int64_t n1) {
  constexpr int W = NV * 8;
  std::int64_t n = n0;
  for (; n + 4 <= n1; n += 4) {
    double acc0[W], acc1[W], acc2[W], acc3[W];
    for (int u = 0; u < W; ++u) acc0[u] = biasp[u];
    for (int u = 0; u < W; ++u) acc1[u] = biasp[u];
    for (int u = 0; u < W; ++u) acc2[u] = biasp[u];
    for (int u = 0; u < W; ++u) acc3[u] = biasp[u];
    for (int j = 0; j < k; ++j) {
      const double* __restrict xm = xd + (n - q * (j - shift)) * d_in;
      const double* __restrict wj = wtp + static_cast<std::size_t>(j) * d_in * W;
      for (int ci = 0; ci < d_in; ++ci) {
        const double* __restrict wc = wj + static_cast<std::size_t>(ci) * W;
        const double x0 = xm[ci];
        const double x1 = xm[ci + d_in];
        const double x2 = xm[ci + 2 * d_in];
        const double x3 = xm[ci + 3 * d_in];
        for (int u = 0; u < W; ++u) acc0[u] += x0 * wc[u];
        for (int u = 0; u < W; ++u) acc1[u] += x1 * wc[u];
        for (int u = 0; u < W; ++u) acc2[u] += x2 * wc[u];
        for (int u = 0; u < W; ++u) acc3[u] += x3 * wc[u];
      }
    }
    double* __restrict y0 = yd + n * d_out;
    double* __restrict y1 = yd + (n + 1) * d_out;
    double* __restrict y2 = yd + (n + 2) * d_out;
    double* __restrict y3 = yd + (n + 3) * d_out;
    for (int o = 0; o < d_out; ++o) y0[o] = acc0[o];
    for (int o = 0; o < d_out; ++o) y1[o] = acc1[o];
    for (int o = 0; o < d_out; ++o) y2[o] = acc2[o];
    for (int o = 0; o < d_out; ++o) y3[o] = acc3[o];
  }
  for (; n < n1; ++n) conv_row_checked<NV>(xd, T, d_in, wtp, biasp, k, q, shift, d_out, yd, n);
}

// d/dx for one row with per-tap bounds checks; serves the boundary rows.
// Lanes run over the input channels; weights arrive padded as
// wg[(j*d_out + o)*W + ci].
template <int NV>
void conv_grad_x_row_checked(const double* __restrict gyd, std::int64_t T, int d_out, const double* __restrict wgp,
                             int k, std::int64_t q, int shift, int d_in, double* __restrict gxd, std::int64_t m) {
  constexpr int W = NV * 8;
  double acc[W];
  for (int u = 0; u < W; ++u) acc[u] = 0.0;
  for (int j = 0; j < k; ++j) {
    const std::int64_t n = m + q * (j - shift);
    if (n < 0 || n >= T) continue;
    const double* __restrict gy = gyd + n * d_out;
    const double* __restrict wj = wgp + static_cast<std::size_t>(j) * d_out * W;
    for (int o = 0; o < d_out; ++o) {
      const double go = gy[o];
      const double* __restrict wo = wj + static_cast<std::size_t>(o) * W;
      for (int u = 0; u < W; ++u) acc[u] += go * wo[u];
    }
  }
  double* __restrict r = gxd + m * d_in;
  for (int ci = 0; ci < d_in; ++ci) r[ci] = acc[ci];
}

// d/dx rows [m0, m1), all taps guaranteed in range.
template <int NV>
void conv_grad_x_interior(const double* __restrict gyd, std::int64_t T, int d_out, const double* __restrict wgp,
                          int k, std::int64_t q, int shift, int d_in, double* __restrict gxd, std::int64_t m0,
                          std::int64_t m1) {
  constexpr int W = NV * 8;
  std::int64_t m = m0;
  for (; m + 4 <= m1; m += 4) {
    double acc0[W], acc1[W], acc2[W], acc3[W];
    for (int u = 0; u < W; ++u) acc0[u] = 0.0;
    for (int u = 0; u < W; ++u) acc1[u] = 0.0;
    for (int u = 0; u < W; ++u) acc2[u] = 0.0;
    for (int u = 0; u < W; ++u) acc3[u] = 0.0;
    for (int j = 0; j < k; ++j) {
      const std::int64_t n = m + q * (j - shift);
      const double* __restrict gy = gyd + n * d_out;
      const double* __restrict wj = wgp + static_cast<std::size_t>(j) * d_out * W;
      for (int o = 0; o < d_out; ++o) {
        const double* __restrict wo = wj + static_cast<std::size_t>(o) * W;
        const double g0 = gy[o];
        const double g1 = gy[o + d_out];
        const double g2 = gy[o + 2 * d_out];
        const double g3 = gy[o + 3 * d_out];
        for (int u = 0; u < W; ++u) acc0[u] += g0 * wo[u];
        for (int u = 0; u < W; ++u) acc1[u] += g1 * wo[u];
        for (int u = 0; u < W; ++u) acc2[u] += g2 * wo[u];
        for (int u = 0; u < W; ++u) acc3[u] += g3 * wo[u];
      }
    }
    double* __restrict r0 = gxd + m * d_in;
    double* __restrict r1 = gxd + (m + 1) * d_in;
    double* __restrict r2 = gxd + (m + 2) * d_in;
    double* __restrict r3 = gxd + (m + 3) * d_in;
    for (int ci = 0; ci < d_in; ++ci) r0[ci] = acc0[ci];
    for (int ci = 0; ci < d_in; ++ci) r1[ci] = acc1[ci];
    for (int ci = 0; ci < d_in; ++ci) r2[ci] = acc2[ci];
    for (int ci = 0; ci < d_in; ++ci) r3[ci] = acc3[ci];
  }
  for (; m < m1; ++m) conv_grad_x_row_checked<NV>(gyd, T, d_out, wgp, k, q, shift, d_in, gxd, m);
}

// Splits [lo, hi) into one contiguous span per thread; each row is produced
// start to finish by exactly one thread.
template <typename Fn>
void parallel_row_spans(std::int64_t lo, std::int64_t hi, const Fn& fn) {
  if (hi <= lo) return;
#if defined(_OPENMP)
#pragma omp parallel
  {
    const std::int64_t nt = omp_get_num_threads();
    const std::int64_t tid = omp_get_thread_num();
    const std::int64_t span = hi - lo;
    const std::int64_t b0 = lo + span * tid / nt;
    const std::int64_t b1 = lo + span * (tid + 1) / nt;
    if (b1 > b0) fn(b0, b1);
  }
#else
  fn(lo, hi);
#endif
}

}  // namespace

ConvFilter make_conv_filter(int k, int d_in, int d_out, int dilation, bool causal, SplitMix64& rng) {
  ConvFilter f;
  f.k = k;
  f.d_in = d_in;
  f.d_out = d_out;
  f.dilation = dilation;
  f.causal = causal;
  validate_filter(ConvFilter{k, d_in, d_out, dilation, causal,
                             std::vector<double>(static_cast<std::size_t>(k) * d_in * d_out),
                             std::vector<double>(static_cast<std::size_t>(d_out)),
                             std::vector<double>(static_cast<std::size_t>(d_out))},
                  "make_conv_filter");
  const double scale = 1.0 / std::sqrt(static_cast<double>(k) * static_cast<double>(d_in));
  f.v.resize(static_cast<std::size_t>(k) * d_in * d_out);
  for (double& w : f.v) w = rng.uniform(-1.0, 1.0) * scale;
  f.g.assign(static_cast<std::size_t>(d_out), 1.0);
  f.bias.assign(static_cast<std::size_t>(d_out), 0.0);
  return f;
}

int conv_tap_shift(const ConvFilter& f) { return f.causal ? 0 : f.k / 2; }

std::vector<double> weight_norm_effective(const ConvFilter& f) {
  validate_filter(f, "weight_norm_effective");
  const std::size_t slice = static_cast<std::size_t>(f.k) * f.d_in;
  std::vector<double> w(f.v.size());
  for (int o = 0; o < f.d_out; ++o) {
    const double* vo = f.v.data() + static_cast<std::size_t>(o) * slice;
    double ss = 0.0;
    for (std::size_t i = 0; i < slice; ++i) ss += vo[i] * vo[i];
    const double norm = std::sqrt(ss);
    if (norm == 0.0) throw NumericError("weight_norm_effective: zero direction vector");
    const double s = f.g[static_cast<std::size_t>(o)] / norm;
    double* wo = w.data() + static_cast<std::size_t>(o) * slice;
    for (std::size_t i = 0; i < slice; ++i) wo[i] = s * vo[i];
  }
  return w;
}

Signal2D dilated_conv1d(const Signal2D& x, const ConvFilter& f) {
  require_nonempty(x, "dilated_conv1d");
  validate_filter(f, "dilated_conv1d");
  if (x.d != f.d_in) throw ValidationError("dilated_conv1d: input channel count does not match d_in");

  const std::vector<double> w = weight_norm_effective(f);
  const int shift = conv_tap_shift(f);
  const std::int64_t q = f.dilation;
  const int k = f.k, d_in = f.d_in, d_out = f.d_out;
  const std::size_t slice = static_cast<std::size_t>(k) * d_in;

  Signal2D y(x.T, d_out);
  const int lanes = (d_out + 7) / 8;
  if (lanes <= 3) {
    // Tap-major transpose w[o][j][ci] -> wt[j][ci][o], zero-padded to the
    // lane width: the hot loop broadcasts one input value against a
    // contiguous run of output channels, a fused multiply-add with no
    // horizontal reduction.
    const int W = lanes * 8;
    std::vector<double> wtp(static_cast<std::size_t>(k) * d_in * W, 0.0);
    for (int o = 0; o < d_out; ++o)
      for (int j = 0; j < k; ++j)
        for (int ci = 0; ci < d_in; ++ci)
          wtp[(static_cast<std::size_t>(j) * d_in + ci) * W + o] =
              w[static_cast<std::size_t>(o) * slice + static_cast<std::size_t>(j) * d_in + ci];
    std::vector<double> biasp(static_cast<std::size_t>(W), 0.0);
    std::copy(f.bias.begin(), f.bias.end(), biasp.begin());

    // Rows where every tap lands in range; the few boundary rows take the
    // checked path.
    const std::int64_t lo = std::min<std::int64_t>(x.T, q * (k - 1 - shift));
    const std::int64_t hi = std::max<std::int64_t>(lo, x.T - q * shift);
    const auto dispatch = [&](auto nv) {
      constexpr int NV = decltype(nv)::value;
      for (std::int64_t n = 0; n < lo; ++n)
        conv_row_checked<NV>(x.data.data(), x.T, d_in, wtp.data(), biasp.data(), k, q, shift, d_out, y.data.data(), n);
      for (std::int64_t n = hi; n < x.T; ++n)
        conv_row_checked<NV>(x.data.data(), x.T, d_in, wtp.data(), biasp.data(), k, q, shift, d_out, y.data.data(), n);
      parallel_row_spans(lo, hi, [&](std::int64_t b0, std::int64_t b1) {
        conv_rows_interior<NV>(x.data.data(), x.T, d_in, wtp.data(), biasp.data(), k, q, shift, d_out,
                               y.data.data(), b0, b1);
      });
    };
    if (lanes == 1)
      dispatch(std::integral_constant<int, 1>{});
    else if (lanes == 2)
      dispatch(std::integral_constant<int, 2>{});
    else
      dispatch(std::integral_constant<int, 3>{});
    return y;
  }

  // Wide-output fallback: plain row loop, one thread per output row.
  std::vector<double> wt(w.size());
  for (int o = 0; o < d_out; ++o)
    for (int j = 0; j < k; ++j)
      for (int ci = 0; ci < d_in; ++ci)
        wt[(static_cast<std::size_t>(j) * d_in + ci) * d_out + o] =
            w[static_cast<std::size_t>(o) * slice + static_cast<std::size_t>(j) * d_in + ci];
#if defined(_OPENMP)
#pragma omp parallel for schedule(static)
#endif
  for (std::int64_t n = 0; n < x.T; ++n) {
    double* __restrict yn = y.row(n);
    for (int o = 0; o < d_out; ++o) yn[o] = f.bias[static_cast<std::size_t>(o)];
    for (int j = 0; j < k; ++j) {
      const std::int64_t m = n - q * (j - shift);
      if (m < 0 || m >= x.T) continue;
      const double* __restrict xm = x.row(m);
      const double* __restrict wj = wt.data() + static_cast<std::size_t>(j) * d_in * d_out;
      for (int ci = 0; ci < d_in; ++ci) {
        const double xv = xm[ci];
        const double* __restrict wc = wj + static_cast<std::size_t>(ci) * d_out;
        for (int o = 0; o < d_out; ++o) yn[o] += xv * wc[o];
      }
    }
  }
  return y;
}

ConvGrads dilated_conv1d_grads(const Signal2D& x, const ConvFilter& f, const Signal2D& grad_y) {
  require_nonempty(x, "dilated_conv1d_grads");
  validate_filter(f, "dilated_conv1d_grads");
  if (x.d != f.d_in) throw ValidationError("dilated_conv1d_grads: input channel count does not match d_in");
  if (grad_y.T != x.T || grad_y.d != f.d_out)
    throw ValidationError("dilated_conv1d_grads: grad_y shape does not match the convolution output");

  const std::vector<double> w = weight_norm_effective(f);
  const int shift = conv_tap_shift(f);
  const std::int64_t q = f.dilation;
  const int k = f.k, d_in = f.d_in, d_out = f.d_out;
  const std::size_t slice = static_cast<std::size_t>(k) * d_in;

  ConvGrads gr;
  gr.grad_x = Signal2D(x.T, d_in);
  gr.grad_v.assign(f.v.size(), 0.0);
  gr.grad_g.assign(f.g.size(), 0.0);
  gr.grad_bias.assign(f.bias.size(), 0.0);

  // d/dx: transpose convolution.
  const int lanes_in = (d_in + 7) / 8;
  if (lanes_in <= 3) {
    const int W = lanes_in * 8;
    std::vector<double> wgp(static_cast<std::size_t>(k) * d_out * W, 0.0);
    for (int o = 0; o < d_out; ++o)
      for (int j = 0; j < k; ++j)
        for (int ci = 0; ci < d_in; ++ci)
          wgp[(static_cast<std::size_t>(j) * d_out + o) * W + ci] =
              w[static_cast<std::size_t>(o) * slice + static_cast<std::size_t>(j) * d_in + ci];

    // Rows whose taps all land in range.
    const std::int64_t lo = std::min<std::int64_t>(x.T, q * shift);
    const std::int64_t hi = std::max<std::int64_t>(lo, x.T - q * (k - 1 - shift));
    const auto dispatch = [&](auto nv) {
      constexpr int NV = decltype(nv)::value;
      for (std::int64_t m = 0; m < lo; ++m)
        conv_grad_x_row_checked<NV>(grad_y.data.data(), x.T, d_out, wgp.data(), k, q, shift, d_in,
                                    gr.grad_x.data.data(), m);
      for (std::int64_t m = hi; m < x.T; ++m)
        conv_grad_x_row_checked<NV>(grad_y.data.data(), x.T, d_out, wgp.data(), k, q, shift, d_in,
                                    gr.grad_x.data.data(), m);
      parallel_row_spans(lo, hi, [&](std::int64_t b0, std::int64_t b1) {
        conv_grad_x_interior<NV>(grad_y.data.data(), x.T, d_out, wgp.data(), k, q, shift, d_in,
                                 gr.grad_x.data.data(), b0, b1);
      });
    };
    if (lanes_in == 1)
      dispatch(std::integral_constant<int, 1>{});
    else if (lanes_in == 2)
      dispatch(std::integral_constant<int, 2>{});
    else
      dispatch(std::integral_constant<int, 3>{});
  } else {
#if defined(_OPENMP)
#pragma omp parallel for schedule(static)
#endif
    for (std::int64_t m = 0; m < x.T; ++m) {
      double* __restrict gx = gr.grad_x.row(m);
      for (int j = 0; j < k; ++j) {
        const std::int64_t n = m + q * (j - shift);
        if (n < 0 || n >= x.T) continue;
        const double* __restrict gy = grad_y.row(n);
        for (int o = 0; o < d_out; ++o) {
          const double gyo = gy[o];
          if (gyo == 0.0) continue;
          const double* __restrict wj = w.data() + static_cast<std::size_t>(o) * slice + static_cast<std::size_t>(j) * d_in;
          for (int ci = 0; ci < d_in; ++ci) gx[ci] += gyo * wj[ci];
        }
      }
    }
  }

  // d/dW and d/dbias, one thread per output filter; then the weight-norm
  // chain rule maps grad_W onto (v, g). For each (filter, tap) the weight
  // gradient accumulates in registers across the whole series: the padded
  // input copy lets the lane loop cover the channels without bounds checks.
  std::vector<double> grad_w(f.v.size(), 0.0);
  std::vector<double> xp;
  const bool blocked_w = lanes_in <= 3;
  if (blocked_w) {
    const int W = lanes_in * 8;
    xp.assign(static_cast<std::size_t>(x.T) * W, 0.0);
    for (std::int64_t n = 0; n < x.T; ++n)
      std::copy(x.row(n), x.row(n) + d_in, xp.data() + static_cast<std::size_t>(n) * W);
  }
#if defined(_OPENMP)
#pragma omp parallel for schedule(static)
#endif
  for (int o = 0; o < d_out; ++o) {
    double* __restrict gwo = grad_w.data() + static_cast<std::size_t>(o) * slice;
    double gb = 0.0;
    for (std::int64_t n = 0; n < x.T; ++n) gb += grad_y.at(n, o);
    gr.grad_bias[static_cast<std::size_t>(o)] = gb;

    if (blocked_w) {
      // Four independent accumulator sets hide the fused multiply-add
      // latency; they are folded pairwise in a fixed order at the end, so the
      // result does not depend on the thread count or the series split.
      const auto tap = [&](auto nv, int j) {
        constexpr int NV = decltype(nv)::value;
        constexpr int WL = NV * 8;
        const std::int64_t off = q * (j - shift);
        const std::int64_t n_lo = std::max<std::int64_t>(0, off);
        const std::int64_t n_hi = std::min<std::int64_t>(x.T, x.T + off);
        double acc0[WL], acc1[WL], acc2[WL], acc3[WL];
        for (int u = 0; u < WL; ++u) acc0[u] = 0.0;
        for (int u = 0; u < WL; ++u) acc1[u] = 0.0;
        for (int u = 0; u < WL; ++u) acc2[u] = 0.0;
        for (int u = 0; u < WL; ++u) acc3[u] = 0.0;
        const double* __restrict gyc = grad_y.data.data();
        const double* __restrict xpp = xp.data();
        std::int64_t n = n_lo;
        for (; n + 4 <= n_hi; n += 4) {
          const double g0 = gyc[n * d_out + o];
          const double g1 = gyc[(n + 1) * d_out + o];
          const double g2 = gyc[(n + 2) * d_out + o];
          const double g3 = gyc[(n + 3) * d_out + o];
          const double* __restrict xm = xpp + (n - off) * WL;
          for (int u = 0; u < WL; ++u) acc0[u] += g0 * xm[u];
          for (int u = 0; u < WL; ++u) acc1[u] += g1 * xm[u + WL];
          for (int u = 0; u < WL; ++u) acc2[u] += g2 * xm[u + 2 * WL];
          for (int u = 0; u < WL; ++u) acc3[u] += g3 * xm[u + 3 * WL];
        }
        for (; n < n_hi; ++n) {
          const double gyo = gyc[n * d_out + o];
          const double* __restrict xm = xpp + (n - off) * WL;
          for (int u = 0; u < WL; ++u) acc0[u] += gyo * xm[u];
        }
        for (int u = 0; u < WL; ++u) acc0[u] = (acc0[u] + acc2[u]) + (acc1[u] + acc3[u]);
        double* __restrict gwj = gwo + static_cast<std::size_t>(j) * d_in;
        for (int ci = 0; ci < d_in; ++ci) gwj[ci] = acc0[ci];
      };
      for (int j = 0; j < k; ++j) {
        if (lanes_in == 1)
          tap(std::integral_constant<int, 1>{}, j);
        else if (lanes_in == 2)
          tap(std::integral_constant<int, 2>{}, j);
        else
          tap(std::integral_constant<int, 3>{}, j);
      }
    } else {
      for (std::int64_t n = 0; n < x.T; ++n) {
        const double gyo = grad_y.at(n, o);
        if (gyo == 0.0) continue;
        for (int j = 0; j < k; ++j) {
          const std::int64_t m = n - q * (j - shift);
          if (m < 0 || m >= x.T) continue;
          const double* __restrict xm = x.row(m);
          double* __restrict gwj = gwo + static_cast<std::size_t>(j) * d_in;
          for (int ci = 0; ci < d_in; ++ci) gwj[ci] += gyo * xm[ci];
        }
      }
    }

    // W_o = g_o * v_o/||v_o||:
    //   dL/dg_o = (v_o/||v_o||) . dL/dW_o
    //   dL/dv_o = g_o/||v_o|| * (dL/dW_o - (dL/dg_o) * v_o/||v_o||)
    const double* vo = f.v.data() + static_cast<std::size_t>(o) * slice;
    double ss = 0.0;
    for (std::size_t i = 0; i < slice; ++i) ss += vo[i] * vo[i];
    const double norm = std::sqrt(ss);
    if (norm == 0.0) throw NumericError("dilated_conv1d_grads: zero direction vector");
    double dot = 0.0;
    for (std::size_t i = 0; i < slice; ++i) dot += gwo[i] * vo[i];
    const double gg = dot / norm;
    gr.grad_g[static_cast<std::size_t>(o)] = gg;
    const double s = f.g[static_cast<std::size_t>(o)] / norm;
    double* gvo = gr.grad_v.data() + static_cast<std::size_t>(o) * slice;
    for (std::size_t i = 0; i < slice; ++i) gvo[i] = s * (gwo[i] - gg * vo[i] / norm);
  }
  return gr;
}

std::int64_t receptive_field(int n_levels, int k, bool causal) {
  if (n_levels < 1 || k < 1) throw ValidationError("receptive_field: n_levels and k must be positive");
  if (causal) return (std::int64_t{1} << (n_levels - 1)) * k;
  return 1 + static_cast<std::int64_t>(k) * ((std::int64_t{1} << n_levels) - 1);
}

}  // namespace sentinel

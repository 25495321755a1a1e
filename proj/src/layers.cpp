#include "sentinel/layers.hpp"

namespace sentinel {

Signal2D relu(const Signal2D& x) {
  require_nonempty(x, "relu");
  Signal2D y(x.T, x.d);
  for (std::size_t i = 0; i < x.data.size(); ++i) y.data[i] = x.data[i] > 0.0 ? x.data[i] : 0.0;
  return y;
}

Signal2D relu_backward(const Signal2D& x, const Signal2D& grad_y) {
  require_same_shape(x, grad_y, "relu_backward");
  Signal2D gx(x.T, x.d);
  for (std::size_t i = 0; i < x.data.size(); ++i) gx.data[i] = x.data[i] > 0.0 ? grad_y.data[i] : 0.0;
  return gx;
}

ChannelMask make_channel_mask(int d, double rate, SplitMix64& rng) {
  if (rate < 0.0 || rate >= 1.0) throw ValidationError("spatial_dropout: rate must lie in [0,1)");
  ChannelMask m;
  m.keep.resize(static_cast<std::size_t>(d));
  for (int c = 0; c < d; ++c) m.keep[static_cast<std::size_t>(c)] = rng.uniform() >= rate ? 1 : 0;
  m.scale = 1.0 / (1.0 - rate);
  return m;
}

Signal2D apply_channel_mask(const Signal2D& x, const ChannelMask& m) {
  require_nonempty(x, "spatial_dropout");
  if (m.keep.size() != static_cast<std::size_t>(x.d)) throw ValidationError("spatial_dropout: mask size mismatch");
  Signal2D y(x.T, x.d);
  for (std::int64_t t = 0; t < x.T; ++t) {
    const double* xr = x.row(t);
    double* yr = y.row(t);
    for (int c = 0; c < x.d; ++c) yr[c] = m.keep[static_cast<std::size_t>(c)] ? xr[c] * m.scale : 0.0;
  }
  return y;
}

Signal2D apply_channel_mask_backward(const Signal2D& grad_y, const ChannelMask& m) {
  return apply_channel_mask(grad_y, m);
}

Signal2D spatial_dropout(const Signal2D& x, double rate, bool training, std::uint64_t seed) {
  if (!training || rate == 0.0) {
    if (rate < 0.0 || rate >= 1.0) throw ValidationError("spatial_dropout: rate must lie in [0,1)");
    return x;
  }
  SplitMix64 rng(seed);
  return apply_channel_mask(x, make_channel_mask(x.d, rate, rng));
}

namespace {

// Pairwise (halving) sum of a strided slice. Within a pooling group this makes
// the mean of n identical values exact whenever n is a power of two, so
// pooling an s-fold hold-upsampled signal returns the original bit for bit.
double pairwise_sum_strided(const double* a, std::int64_t n, std::int64_t stride) {
  if (n == 1) return a[0];
  if (n == 2) return a[0] + a[stride];
  const std::int64_t h = n / 2;
  return pairwise_sum_strided(a, h, stride) + pairwise_sum_strided(a + h * stride, n - h, stride);
}

}  // namespace

Signal2D temporal_avg_pool(const Signal2D& x, int s) {
  require_nonempty(x, "temporal_avg_pool");
  if (s < 1) throw ValidationError("temporal_avg_pool: s must be positive");
  const std::int64_t T_out = (x.T + s - 1) / s;
  Signal2D y(T_out, x.d);
  for (std::int64_t m = 0; m < T_out; ++m) {
    const std::int64_t b = m * s;
    const std::int64_t e = b + s < x.T ? b + s : x.T;
    const double inv = 1.0 / static_cast<double>(e - b);
    double* yr = y.row(m);
    for (int c = 0; c < x.d; ++c) yr[c] = pairwise_sum_strided(x.row(b) + c, e - b, x.d) * inv;
  }
  return y;
}

Signal2D temporal_avg_pool_backward(std::int64_t T_in, const Signal2D& grad_y, int s) {
  require_nonempty(grad_y, "temporal_avg_pool_backward");
  if (s < 1) throw ValidationError("temporal_avg_pool_backward: s must be positive");
  if (grad_y.T != (T_in + s - 1) / s) throw ValidationError("temporal_avg_pool_backward: grad_y length mismatch");
  Signal2D gx(T_in, grad_y.d);
  for (std::int64_t t = 0; t < T_in; ++t) {
    const std::int64_t m = t / s;
    const std::int64_t b = m * s;
    const std::int64_t e = b + s < T_in ? b + s : T_in;
    const double inv = 1.0 / static_cast<double>(e - b);
    const double* gy = grad_y.row(m);
    double* gr = gx.row(t);
    for (int c = 0; c < grad_y.d; ++c) gr[c] = gy[c] * inv;
  }
  return gx;
}

Signal2D upsample_hold(const Signal2D& x, int s) {
  require_nonempty(x, "upsample_hold");
  if (s < 1) throw ValidationError("upsample_hold: s must be positive");
  Signal2D y(x.T * s, x.d);
  for (std::int64_t t = 0; t < y.T; ++t) {
    const double* xr = x.row(t / s);
    double* yr = y.row(t);
    for (int c = 0; c < x.d; ++c) yr[c] = xr[c];
  }
  return y;
}

Signal2D upsample_hold_backward(const Signal2D& grad_y, int s) {
  require_nonempty(grad_y, "upsample_hold_backward");
  if (s < 1) throw ValidationError("upsample_hold_backward: s must be positive");
  if (grad_y.T % s != 0) throw ValidationError("upsample_hold_backward: grad_y length not a multiple of s");
  Signal2D gx(grad_y.T / s, grad_y.d);
  for (std::int64_t m = 0; m < gx.T; ++m) {
    double* gr = gx.row(m);
    for (std::int64_t t = m * s; t < (m + 1) * s; ++t) {
      const double* gy = grad_y.row(t);
      for (int c = 0; c < grad_y.d; ++c) gr[c] += gy[c];
    }
  }
  return gx;
}

}  // namespace sentinel

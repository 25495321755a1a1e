#pragma once

#include <cstdint>
#include <vector>

#include "sentinel/signal.hpp"

namespace sentinel {

// Dilated 1-D convolution filter bank with weight normalization.
// Effective weights are W[o] = g[o] * v[o] / ||v[o]||, the norm taken over each
// output filter's k*d_in slice. Layout of v (and of effective weights and the
// corresponding gradients): index ((o*k) + j)*d_in + ci.
//
// Tap j of filter o reads x[n - q*(j - shift), ci] where shift = 0 for causal
// filters and shift = k/2 (integer division) for acausal ones; out-of-range
// samples are zero.
struct ConvFilter {
  int k = 0;      // taps per filter
  int d_in = 0;   // input channels
  int d_out = 0;  // output filters
  int dilation = 1;
  bool causal = true;
  std::vector<double> v;     // direction, k*d_in*d_out
  std::vector<double> g;     // gain per filter, d_out
  std::vector<double> bias;  // d_out
};

// v ~ U(-1,1)/sqrt(k*d_in), g = 1, bias = 0. With unit gains the effective
// filters have unit norm, keeping initial activations O(1).
ConvFilter make_conv_filter(int k, int d_in, int d_out, int dilation, bool causal, SplitMix64& rng);

int conv_tap_shift(const ConvFilter& f);  // 0 causal, k/2 acausal

// W = g * v/||v|| for every filter; same layout as v.
std::vector<double> weight_norm_effective(const ConvFilter& f);

// y[n,o] = bias[o] + sum_j sum_ci W[o,j,ci] * x[n - q*(j-shift), ci]
Signal2D dilated_conv1d(const Signal2D& x, const ConvFilter& f);

struct ConvGrads {
  Signal2D grad_x;
  std::vector<double> grad_v;
  std::vector<double> grad_g;
  std::vector<double> grad_bias;
};

// Gradients of sum(grad_y ⊙ y) w.r.t. x, v, g and bias (chain rule through
// the weight normalization).
ConvGrads dilated_conv1d_grads(const Signal2D& x, const ConvFilter& f, const Signal2D& grad_y);

// Receptive field of a stack of L levels with dilations 1,2,...,2^(L-1):
// causal 2^(L-1)*k, acausal 1 + k*(2^L - 1). Diagnostic only.
std::int64_t receptive_field(int n_levels, int k, bool causal);

}  // namespace sentinel

#pragma once

#include <vector>

#include "sentinel/conv.hpp"
#include "sentinel/signal.hpp"

// Serial reference implementations, written independently of the optimized
// kernels and kept for testing and benchmarking. Tests treat these as the
// ground truth the parallel kernels must reproduce.
namespace sentinel::reference {

// Direct-sum dilated convolution: y[n,o] = bias[o] + sum_j h_j . x[n - q*(j - shift)]
// with shift = 0 (causal) or k/2 (acausal) and zero padding out of range.
Signal2D dilated_conv1d(const Signal2D& x, const ConvFilter& f);

// Mahalanobis scores via an explicitly inverted covariance (Gauss-Jordan).
// rows: row-major n x dim matrix of windows. Small dimensions only.
std::vector<double> mahalanobis_explicit_inverse(const std::vector<double>& rows, std::size_t n, std::size_t dim,
                                                 const std::vector<double>& mu, const std::vector<double>& cov);

// Independently written Adam updater for a single scalar parameter.
struct ScalarAdam {
  double m = 0.0, v = 0.0;
  long t = 0;
  double step(double w, double grad, double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);
};

// Exhaustive threshold scan: evaluates F1 at every candidate (midpoints of
// consecutive sorted unique scores plus +/-infinity) by a full O(n) recount,
// ties broken toward the largest threshold.
double exhaustive_best_f1_threshold(const std::vector<double>& scores, const std::vector<unsigned char>& labels);

}  // namespace sentinel::reference

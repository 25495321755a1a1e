#pragma once

#include "sentinel/signal.hpp"

namespace sentinel {

struct LossResult {
  double loss = 0.0;
  Signal2D grad;  // d loss / d x_hat
};

// Mean log-cosh reconstruction loss over all T*d entries, evaluated in the
// overflow-safe form log cosh r = |r| + log1p(exp(-2|r|)) - log 2.
// Gradient w.r.t. x_hat is tanh(r)/(T*d) with r = x_hat - x.
LossResult logcosh_loss(const Signal2D& x, const Signal2D& x_hat);

double logcosh(double r);

}  // namespace sentinel

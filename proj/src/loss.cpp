#include "sentinel/loss.hpp"

#include <cmath>

namespace sentinel {

double logcosh(double r) {
  const double a = std::fabs(r);
  return a + std::log1p(std::exp(-2.0 * a)) - M_LN2;
}

LossResult logcosh_loss(const Signal2D& x, const Signal2D& x_hat) {
  require_same_shape(x, x_hat, "logcosh_loss");
  const std::size_t n = x.data.size();
  LossResult res;
  res.grad = Signal2D(x.T, x.d);
  std::vector<double> terms(n);
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double r = x_hat.data[i] - x.data[i];
    terms[i] = logcosh(r);
    res.grad.data[i] = std::tanh(r) * inv_n;
  }
  res.loss = chunked_sum(terms.data(), n) * inv_n;
  return res;
}

}  // namespace sentinel

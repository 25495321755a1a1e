#include "sentinel/adam.hpp"

#include <cmath>

namespace sentinel {

void adam_step(const ParamRefs& params, const std::vector<double>& grads, AdamState& st, const AdamConfig& cfg) {
  if (grads.size() != params.total) throw ValidationError("adam_step: gradient size does not match parameter count");
  if (st.m.size() != params.total || st.v.size() != params.total)
    throw ValidationError("adam_step: optimizer state size does not match parameter count");

  st.t += 1;
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(st.t));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(st.t));

  std::size_t off = 0;
  for (std::size_t a = 0; a < params.ptr.size(); ++a) {
    double* p = params.ptr[a];
    for (std::size_t i = 0; i < params.len[a]; ++i, ++off) {
      const double g = grads[off];
      st.m[off] = cfg.beta1 * st.m[off] + (1.0 - cfg.beta1) * g;
      st.v[off] = cfg.beta2 * st.v[off] + (1.0 - cfg.beta2) * g * g;
      const double mhat = st.m[off] / c1;
      const double vhat = st.v[off] / c2;
      p[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
    }
  }
}

}  // namespace sentinel

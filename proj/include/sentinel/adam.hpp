#pragma once

#include <cstdint>
#include <vector>

#include "sentinel/common.hpp"

namespace sentinel {

// Flat view over a model's parameter arrays in their declared order. The same
// order is used for gradients, optimizer state and serialization.
struct ParamRefs {
  std::vector<double*> ptr;
  std::vector<std::size_t> len;
  std::size_t total = 0;

  void add(std::vector<double>& a) {
    ptr.push_back(a.data());
    len.push_back(a.size());
    total += a.size();
  }
};

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::int64_t t = 0;
  std::vector<double> m, v;  // first/second moment, flat layout

  explicit AdamState(std::size_t n = 0) : m(n, 0.0), v(n, 0.0) {}
};

// One bias-corrected update, t incremented before use:
//   m <- b1*m + (1-b1)*g;  v <- b2*v + (1-b2)*g^2
//   p <- p - lr * (m/(1-b1^t)) / (sqrt(v/(1-b2^t)) + eps)
void adam_step(const ParamRefs& params, const std::vector<double>& grads, AdamState& st, const AdamConfig& cfg);

}  // namespace sentinel

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sentinel/common.hpp"

namespace sentinel {

// Multivariate time series, row-major: data[t*d + c]. 64-bit floats throughout.
struct Signal2D {
  std::int64_t T = 0;
  int d = 0;
  std::vector<double> data;
  std::vector<std::string> channels;  // optional names; empty or size d

  Signal2D() = default;
  Signal2D(std::int64_t T_, int d_) : T(T_), d(d_), data(static_cast<std::size_t>(T_) * static_cast<std::size_t>(d_), 0.0) {}

  double& at(std::int64_t t, int c) { return data[static_cast<std::size_t>(t) * static_cast<std::size_t>(d) + static_cast<std::size_t>(c)]; }
  double at(std::int64_t t, int c) const { return data[static_cast<std::size_t>(t) * static_cast<std::size_t>(d) + static_cast<std::size_t>(c)]; }
  double* row(std::int64_t t) { return data.data() + static_cast<std::size_t>(t) * static_cast<std::size_t>(d); }
  const double* row(std::int64_t t) const { return data.data() + static_cast<std::size_t>(t) * static_cast<std::size_t>(d); }

  bool same_shape(const Signal2D& o) const { return T == o.T && d == o.d; }
};

void require_nonempty(const Signal2D& x, const char* who);
void require_same_shape(const Signal2D& a, const Signal2D& b, const char* who);
int channel_index(const Signal2D& x, const std::string& name);  // -1 when absent

}  // namespace sentinel

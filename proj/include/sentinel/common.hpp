#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace sentinel {

// Bad inputs, malformed files, contract violations. CLI maps this to exit code 2.
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Non-finite losses, failed factorizations, degenerate numerics. CLI maps this to exit code 3.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// splitmix64. Hand-rolled so streams are bit-stable across platforms and stdlib
// versions; std::uniform_*_distribution output is implementation-defined.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0,1), 53-bit resolution.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0,n). Lemire's multiply-shift with rejection (unbiased).
  std::uint64_t below(std::uint64_t n);

 private:
  std::uint64_t state_;
};

// Derives an independent child stream seed; used to give every consumer
// (noise, sessions, dropout per item, ...) its own deterministic stream.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t tag);

// Sum with a fixed chunked association order: partial sums over fixed-size
// chunks (computed in parallel), then combined left to right. The result is
// bit-identical for any thread count.
double chunked_sum(const double* x, std::size_t n);

// FNV-1a 64-bit over raw bytes; used for model-file checksums.
std::uint64_t fnv1a64(const unsigned char* bytes, std::size_t n, std::uint64_t h = 0xCBF29CE484222325ULL);
std::string to_hex(std::uint64_t v);

// Worker cap honoured by the CLI: REPLAY_SENTINEL_THREADS clamps the OpenMP
// thread count. Returns the applied value.
int apply_thread_cap_from_env();

// Writes to a temp file in the same directory, then renames over the target,
// so readers never observe a partially written artifact.
void write_text_atomic(const std::string& path, const std::string& content);
std::string read_text(const std::string& path);

}  // namespace sentinel

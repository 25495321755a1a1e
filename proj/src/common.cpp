#include "sentinel/common.hpp"

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#if defined(_OPENMP)
#include <omp.h>
#endif

namespace sentinel {

std::uint64_t SplitMix64::below(std::uint64_t n) {
  if (n == 0) throw ValidationError("SplitMix64::below: n must be positive");
  unsigned __int128 m = static_cast<unsigned __int128>(next()) * n;
  std::uint64_t lo = static_cast<std::uint64_t>(m);
  if (lo < n) {
    std::uint64_t t = (0 - n) % n;
    while (lo < t) {
      m = static_cast<unsigned __int128>(next()) * n;
      lo = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t tag) {
  SplitMix64 g(seed ^ (tag * 0xD1B54A32D192ED03ULL));
  return g.next();
}

double chunked_sum(const double* x, std::size_t n) {
  constexpr std::size_t kChunk = 4096;
  if (n <= kChunk) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += x[i];
    return s;
  }
  const std::size_t n_chunks = (n + kChunk - 1) / kChunk;
  std::vector<double> partial(n_chunks, 0.0);
#if defined(_OPENMP)
#pragma omp parallel for schedule(static)
#endif
  for (std::int64_t c = 0; c < static_cast<std::int64_t>(n_chunks); ++c) {
    const std::size_t b = static_cast<std::size_t>(c) * kChunk;
    const std::size_t e = b + kChunk < n ? b + kChunk : n;
    double s = 0.0;
    for (std::size_t i = b; i < e; ++i) s += x[i];
    partial[static_cast<std::size_t>(c)] = s;
  }
  double s = 0.0;
  for (double p : partial) s += p;
  return s;
}

std::uint64_t fnv1a64(const unsigned char* bytes, std::size_t n, std::uint64_t h) {
  for (std::size_t i = 0; i < n; ++i) {
    h ^= bytes[i];
    h *= 0x100000001B3ULL;
  }
  return h;
}

std::string to_hex(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i) {
    s[static_cast<std::size_t>(i)] = digits[v & 0xF];
    v >>= 4;
  }
  return s;
}

void write_text_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("cannot open for writing: " + tmp);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw ValidationError("write failed: " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw ValidationError("rename failed: " + tmp + " -> " + path + " (" + ec.message() + ")");
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open for reading: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int apply_thread_cap_from_env() {
#if defined(_OPENMP)
  int n = omp_get_max_threads();
  if (const char* env = std::getenv("REPLAY_SENTINEL_THREADS")) {
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (end != env && v >= 1 && v < n) n = static_cast<int>(v);
  }
  omp_set_num_threads(n);
  return n;
#else
  return 1;
#endif
}

}  // namespace sentinel

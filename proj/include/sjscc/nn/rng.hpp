#ifndef SJSCC_NN_RNG_HPP
#define SJSCC_NN_RNG_HPP

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace sjscc::nn {

/// Seedable random stream. Streams derived from the same master seed but
/// different ids produce decorrelated sequences; identical (seed, id) pairs
/// reproduce identical draws. Gaussian draws avoid any cached state so the
/// engine state alone captures the stream position.
class RngStream {
 public:
  RngStream() : RngStream(0, 0) {}

  RngStream(uint64_t seed, uint64_t stream_id) {
    uint64_t s = splitmix(seed ^ (0x9e3779b97f4a7c15ull * (stream_id + 1)));
    engine_.seed(s);
  }

  uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller, one value per two uniforms (no cache).
  double normal() {
    double u1 = 1.0 - uniform();  // (0, 1]
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  /// Fisher-Yates permutation of 0..n-1.
  std::vector<long> permutation(long n) {
    std::vector<long> p(static_cast<size_t>(n));
    for (long i = 0; i < n; ++i) p[static_cast<size_t>(i)] = i;
    for (long i = n - 1; i > 0; --i) {
      long j = static_cast<long>(next_u64() % static_cast<uint64_t>(i + 1));
      std::swap(p[static_cast<size_t>(i)], p[static_cast<size_t>(j)]);
    }
    return p;
  }

  std::string save_state() const {
    std::ostringstream os;
    os << engine_;
    return os.str();
  }

  void load_state(const std::string& s) {
    std::istringstream is(s);
    is >> engine_;
    if (!is) throw std::invalid_argument("RngStream::load_state: malformed state");
  }

  static uint64_t splitmix(uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace sjscc::nn

#endif

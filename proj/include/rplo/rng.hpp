#pragma once

#include <cmath>
#include <cstdint>

#include "rplo/mat.hpp"

namespace rplo::rng {

// Counter-based generator built on the SplitMix64 finalizer.
//
// Contract (documented so any conforming implementation reproduces the
// streams): a stream is identified by (seed, stream_id); its key is
//   key = mix(seed ^ mix(stream_id + GOLDEN))
// and the k-th raw output (k = 1, 2, ...) is mix(key + k * GOLDEN),
// where GOLDEN = 0x9E3779B97F4A7C15 and mix is the SplitMix64 finalizer.
// Uniform doubles take the top 53 bits; Gaussians are Box-Muller pairs.
// Streams for distinct stream_ids are independent, so per-run streams in
// a sweep are a pure function of (master seed, run index).

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

inline constexpr std::uint64_t mix(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xBF58476D1CE4E5B9ULL;
  z ^= z >> 27;
  z *= 0x94D049BB133111EBULL;
  z ^= z >> 31;
  return z;
}

/// Per-run seed derivation for sweeps: a pure function of the master
/// seed and the run index.
inline constexpr std::uint64_t derive_seed(std::uint64_t master,
                                           std::uint64_t index) {
  return mix(master ^ mix(index + kGolden));
}

class Stream {
 public:
  explicit Stream(std::uint64_t seed, std::uint64_t stream_id = 0)
      : key_(mix(seed ^ mix(stream_id + kGolden))) {}

  std::uint64_t next_u64() { return mix(key_ + (++counter_) * kGolden); }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Standard normal via Box-Muller (second sample cached).
  double gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    double u2 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * M_PI * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  Mat gaussian_mat(Index rows, Index cols, double stddev = 1.0) {
    Mat out(rows, cols);
    for (Index i = 0; i < rows; ++i)
      for (Index j = 0; j < cols; ++j) out(i, j) = stddev * gaussian();
    return out;
  }

  Vec gaussian_vec(Index n, double stddev = 1.0) {
    Vec out(n);
    for (Index i = 0; i < n; ++i) out(i) = stddev * gaussian();
    return out;
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace rplo::rng

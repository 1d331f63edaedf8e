#pragma once

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <limits>

namespace ccsp {

// Stream identifiers used to derive independent substreams from one
// experiment seed. Keeping these fixed makes every draw addressable by
// (seed, purpose, trial, step) so trials can run in any order, or in
// parallel, and still reproduce bitwise.
namespace streams {
inline constexpr std::uint64_t kMask = 0x6d61736bULL;      // per-step firing masks
inline constexpr std::uint64_t kInit = 0x696e6974ULL;      // initial-state sampling
inline constexpr std::uint64_t kProbe = 0x70726f62ULL;     // conic/mixing probes
inline constexpr std::uint64_t kProblem = 0x67656e00ULL;   // instance generation
}  // namespace streams

/// Counter-based generator: the n-th output is a pure function of
/// (key, n), where the key is derived from a seed and up to three
/// substream indices. Satisfies UniformRandomBitGenerator.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit CounterRng(std::uint64_t seed, std::uint64_t s1 = 0,
                      std::uint64_t s2 = 0, std::uint64_t s3 = 0) {
    std::uint64_t k = mix(seed + 0x9E3779B97F4A7C15ULL);
    k = mix(k ^ (s1 * 0xBF58476D1CE4E5B9ULL + 0x2545F4914F6CDD1DULL));
    k = mix(k ^ (s2 * 0x94D049BB133111EBULL + 0x632BE59BD9B4E019ULL));
    k = mix(k ^ (s3 * 0xD6E8FEB86659FD93ULL + 0x8CB92BA72F3D8DD7ULL));
    key_ = k;
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() {
    counter_ += 0x9E3779B97F4A7C15ULL;
    return mix(key_ ^ counter_);
  }

  /// Uniform double in [0, 1).
  double uniform01() {
    return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller (pairs cached).
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    do {
      u1 = uniform01();
    } while (u1 <= 0.0);
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.28318530717958647692 * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  Eigen::VectorXd gaussian_vector(Eigen::Index k) {
    Eigen::VectorXd v(k);
    for (Eigen::Index i = 0; i < k; ++i) v[i] = normal();
    return v;
  }

  /// Uniform on the boundary of the unit ball.
  Eigen::VectorXd sphere_vector(Eigen::Index k) {
    while (true) {
      Eigen::VectorXd v = gaussian_vector(k);
      const double n = v.norm();
      if (n > 1e-12) return v / n;
    }
  }

  Eigen::MatrixXd gaussian_matrix(Eigen::Index rows, Eigen::Index cols) {
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
      for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = normal();
    return m;
  }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ULL;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBULL;
    z ^= z >> 31;
    return z;
  }

  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace ccsp

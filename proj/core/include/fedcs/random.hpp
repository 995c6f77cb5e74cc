#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace fedcs {

/// Reproducible random stream identified by (seed, label).
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the standard. The
/// transforms to uniform/normal variates are implemented here rather than taken from
/// <random>'s distributions, whose algorithms are implementation-defined, so the same
/// (seed, label) gives the same samples with every standard library.
///
/// A stream is single-owner. Parallel users take distinct labels, or fork().
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::string_view label);

  std::uint64_t seed() const noexcept { return seed_; }
  const std::string& label() const noexcept { return label_; }

  /// Independent child stream labelled "<label>/<child>". Depends only on (seed, label,
  /// child), never on how much of this stream has been consumed.
  RngStream fork(std::string_view child) const;

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53 bits of resolution.
  double uniform01();
  /// Uniform on [lo, hi).
  double uniform(double lo, double hi);
  /// Uniform on the closed interval [lo, hi]; both endpoints are attainable.
  double uniform_closed(double lo, double hi);
  /// Uniform integer on the closed range [lo, hi]. Unbiased (rejection sampling).
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);
  /// Standard normal variate (Box-Muller, one output per call).
  double standard_normal();

  /// k distinct indices drawn uniformly from [0, n), in draw order.
  std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k);

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(uniform_int(0, static_cast<std::int64_t>(i - 1)));
      using std::swap;
      swap(items[i - 1], items[j]);
    }
  }

 private:
  std::uint64_t seed_;
  std::string label_;
  std::mt19937_64 engine_;
};

/// Smallest value gaussian_truncated ever returns, whatever floor is requested.
inline constexpr double kGaussianEpsilon = 1e-9;

/// Sample Normal(mean, rel_std * mean) clamped below at max(floor, kGaussianEpsilon).
/// Always consumes exactly one normal variate, so streams stay aligned across values of r;
/// rel_std == 0 returns `mean` exactly.
double gaussian_truncated(RngStream& rng, double mean, double rel_std, double floor);

}  // namespace fedcs

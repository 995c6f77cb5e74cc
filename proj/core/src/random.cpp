#include "fedcs/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "fedcs/error.hpp"

namespace fedcs {
namespace {

constexpr std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (const char c : text) {
    hash ^= static_cast<unsigned char>(c);
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::string_view label)
    : seed_(seed), label_(label), engine_(splitmix64(splitmix64(seed) ^ fnv1a(label))) {}

RngStream RngStream::fork(std::string_view child) const {
  std::string path = label_;
  path += '/';
  path += child;
  return RngStream(seed_, path);
}

double RngStream::uniform01() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double RngStream::uniform(double lo, double hi) {
  if (!(lo <= hi)) {
    throw ParameterError("uniform: lo must not exceed hi");
  }
  return lo + (hi - lo) * uniform01();
}

double RngStream::uniform_closed(double lo, double hi) {
  if (!(lo <= hi)) {
    throw ParameterError("uniform_closed: lo must not exceed hi");
  }
  const double u = static_cast<double>(engine_() >> 11) / static_cast<double>((1ULL << 53) - 1);
  return lo + (hi - lo) * u;
}

std::int64_t RngStream::uniform_int(std::int64_t lo, std::int64_t hi) {
  if (lo > hi) {
    throw ParameterError("uniform_int: lo must not exceed hi");
  }
  const auto span = static_cast<std::uint64_t>(hi) - static_cast<std::uint64_t>(lo);
  if (span == std::numeric_limits<std::uint64_t>::max()) {
    return static_cast<std::int64_t>(engine_());
  }
  const std::uint64_t range = span + 1;
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % range;
  std::uint64_t draw = engine_();
  while (draw >= limit) {
    draw = engine_();
  }
  return lo + static_cast<std::int64_t>(draw % range);
}

double RngStream::standard_normal() {
  // u1 in (0, 1] keeps the log finite.
  const double u1 = 1.0 - uniform01();
  const double u2 = uniform01();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::vector<std::size_t> RngStream::sample_without_replacement(std::size_t n, std::size_t k) {
  if (k > n) {
    throw ParameterError("sample_without_replacement: k exceeds population size");
  }
  std::vector<std::size_t> pool(n);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  // Partial Fisher-Yates: the first k slots end up as the sample.
  for (std::size_t i = 0; i < k; ++i) {
    const auto j = static_cast<std::size_t>(
        uniform_int(static_cast<std::int64_t>(i), static_cast<std::int64_t>(n - 1)));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(k);
  return pool;
}

double gaussian_truncated(RngStream& rng, double mean, double rel_std, double floor) {
  if (!std::isfinite(mean) || mean <= 0.0) {
    throw ParameterError("gaussian_truncated: mean must be finite and positive");
  }
  if (!std::isfinite(rel_std) || rel_std < 0.0) {
    throw ParameterError("gaussian_truncated: relative std must be non-negative");
  }
  if (!std::isfinite(floor) || floor < 0.0) {
    throw ParameterError("gaussian_truncated: floor must be non-negative");
  }
  const double z = rng.standard_normal();
  const double sample = mean + rel_std * mean * z;
  return std::max(sample, std::max(floor, kGaussianEpsilon));
}

}  // namespace fedcs

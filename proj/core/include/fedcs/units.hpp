#pragma once

#include <cmath>
#include <compare>
#include <string>

#include "fedcs/error.hpp"

namespace fedcs {

/// Non-negative, finite scalar tagged with a physical unit. Construction is explicit and
/// validated; quantities of different units never convert implicitly.
template <typename Tag>
class Quantity {
 public:
  constexpr Quantity() noexcept = default;

  explicit Quantity(double value) : value_(value) {
    if (!std::isfinite(value) || value < 0.0) {
      throw ParameterError(std::string(Tag::name) + " must be finite and non-negative, got " +
                           std::to_string(value));
    }
  }

  constexpr double value() const noexcept { return value_; }

  constexpr auto operator<=>(const Quantity&) const = default;

  Quantity& operator+=(Quantity other) {
    *this = Quantity(value_ + other.value_);
    return *this;
  }

  friend Quantity operator+(Quantity a, Quantity b) { return a += b; }
  friend Quantity operator*(Quantity q, double factor) { return Quantity(q.value_ * factor); }
  friend Quantity operator*(double factor, Quantity q) { return Quantity(q.value_ * factor); }

 private:
  double value_ = 0.0;
};

struct SecondsTag {
  static constexpr const char* name = "Seconds";
};
struct MegabitsTag {
  static constexpr const char* name = "Megabits";
};
struct MegabitsPerSecondTag {
  static constexpr const char* name = "MegabitsPerSecond";
};
struct SamplesTag {
  static constexpr const char* name = "Samples";
};
struct SamplesPerSecondTag {
  static constexpr const char* name = "SamplesPerSecond";
};

using Seconds = Quantity<SecondsTag>;
using Megabits = Quantity<MegabitsTag>;
using MegabitsPerSecond = Quantity<MegabitsPerSecondTag>;
using Samples = Quantity<SamplesTag>;
using SamplesPerSecond = Quantity<SamplesPerSecondTag>;

/// Transfer time of a payload at a rate. A zero rate is a model error, not infinity.
inline Seconds operator/(Megabits payload, MegabitsPerSecond rate) {
  if (rate.value() <= 0.0) {
    throw ModelError("transfer time requested at zero throughput");
  }
  return Seconds(payload.value() / rate.value());
}

/// Processing time of a sample count at a rate.
inline Seconds operator/(Samples work, SamplesPerSecond rate) {
  if (rate.value() <= 0.0) {
    throw ModelError("processing time requested at zero capability");
  }
  return Seconds(work.value() / rate.value());
}

/// Dense client index in [1, K].
struct ClientId {
  int value = 0;

  constexpr auto operator<=>(const ClientId&) const = default;
};

}  // namespace fedcs

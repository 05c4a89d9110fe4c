#pragma once

#include <compare>
#include <cstdint>
#include <limits>
#include <string>

namespace ivn {

/// Simulation time as a signed 64-bit count of picoseconds.
///
/// All time arithmetic in the simulator is exact integer arithmetic; there
/// is no floating point anywhere in the time domain. One bit at 100 Mb/s is
/// 10 ns = 10000 ticks, so every transmission duration used here is
/// representable without rounding. 2^63 ps spans about 106 days.
class SimTime {
 public:
  constexpr SimTime() = default;

  static constexpr SimTime ps(std::int64_t v) { return SimTime(v); }
  static constexpr SimTime ns(std::int64_t v) { return SimTime(v * 1'000); }
  static constexpr SimTime us(std::int64_t v) { return SimTime(v * 1'000'000); }
  static constexpr SimTime ms(std::int64_t v) { return SimTime(v * 1'000'000'000); }
  static constexpr SimTime sec(std::int64_t v) { return SimTime(v * 1'000'000'000'000); }

  static constexpr SimTime zero() { return SimTime(0); }
  static constexpr SimTime max() { return SimTime(std::numeric_limits<std::int64_t>::max()); }

  constexpr std::int64_t ticks() const { return ticks_; }

  constexpr friend SimTime operator+(SimTime a, SimTime b) { return SimTime(a.ticks_ + b.ticks_); }
  constexpr friend SimTime operator-(SimTime a, SimTime b) { return SimTime(a.ticks_ - b.ticks_); }
  constexpr friend SimTime operator*(SimTime a, std::int64_t k) { return SimTime(a.ticks_ * k); }
  constexpr friend SimTime operator*(std::int64_t k, SimTime a) { return SimTime(k * a.ticks_); }
  constexpr friend std::int64_t operator/(SimTime a, SimTime b) { return a.ticks_ / b.ticks_; }
  constexpr friend SimTime operator/(SimTime a, std::int64_t k) { return SimTime(a.ticks_ / k); }
  constexpr friend SimTime operator%(SimTime a, SimTime b) { return SimTime(a.ticks_ % b.ticks_); }

  constexpr SimTime& operator+=(SimTime o) { ticks_ += o.ticks_; return *this; }
  constexpr SimTime& operator-=(SimTime o) { ticks_ -= o.ticks_; return *this; }

  constexpr auto operator<=>(const SimTime&) const = default;

  /// Largest multiple of `grid` that is <= *this (grid > 0, *this >= 0).
  constexpr SimTime floor_to(SimTime grid) const {
    return SimTime(ticks_ - ticks_ % grid.ticks_);
  }
  /// Smallest multiple of `grid` that is >= *this (grid > 0, *this >= 0).
  constexpr SimTime ceil_to(SimTime grid) const {
    const std::int64_t r = ticks_ % grid.ticks_;
    return SimTime(r == 0 ? ticks_ : ticks_ - r + grid.ticks_);
  }

  std::string to_string() const;

 private:
  constexpr explicit SimTime(std::int64_t t) : ticks_(t) {}
  std::int64_t ticks_ = 0;
};

namespace time_literals {
constexpr SimTime operator""_ps(unsigned long long v) { return SimTime::ps(static_cast<std::int64_t>(v)); }
constexpr SimTime operator""_ns(unsigned long long v) { return SimTime::ns(static_cast<std::int64_t>(v)); }
constexpr SimTime operator""_us(unsigned long long v) { return SimTime::us(static_cast<std::int64_t>(v)); }
constexpr SimTime operator""_ms(unsigned long long v) { return SimTime::ms(static_cast<std::int64_t>(v)); }
constexpr SimTime operator""_s(unsigned long long v) { return SimTime::sec(static_cast<std::int64_t>(v)); }
}  // namespace time_literals

}  // namespace ivn

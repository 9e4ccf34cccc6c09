#pragma once

#include <cmath>
#include <compare>
#include <cstdint>
#include <limits>

namespace meshsim {

// Fixed-point simulation clock. One tick = 1 microsecond.
// Integer ticks keep event ordering and window arithmetic exact across
// platforms; floating seconds exist only at the API edges.
class SimTime {
 public:
  constexpr SimTime() = default;

  static constexpr SimTime from_us(std::int64_t us) { return SimTime(us); }
  static SimTime from_seconds(double s) {
    return SimTime(static_cast<std::int64_t>(std::llround(s * 1e6)));
  }
  static constexpr SimTime zero() { return SimTime(0); }
  static constexpr SimTime max() {
    return SimTime(std::numeric_limits<std::int64_t>::max());
  }

  constexpr std::int64_t us() const { return us_; }
  constexpr double seconds() const { return static_cast<double>(us_) * 1e-6; }

  friend constexpr auto operator<=>(SimTime a, SimTime b) = default;

  constexpr SimTime operator+(SimTime o) const { return SimTime(us_ + o.us_); }
  constexpr SimTime operator-(SimTime o) const { return SimTime(us_ - o.us_); }
  constexpr SimTime& operator+=(SimTime o) {
    us_ += o.us_;
    return *this;
  }
  constexpr SimTime& operator-=(SimTime o) {
    us_ -= o.us_;
    return *this;
  }
  constexpr SimTime operator*(std::int64_t k) const { return SimTime(us_ * k); }

 private:
  constexpr explicit SimTime(std::int64_t us) : us_(us) {}
  std::int64_t us_ = 0;
};

// Airtime of a frame at a nominal rate, rounded up to the clock tick.
inline SimTime airtime(std::uint32_t size_bytes, double rate_bps) {
  const double bits = static_cast<double>(size_bytes) * 8.0;
  const double us = bits * 1e6 / rate_bps;
  return SimTime::from_us(static_cast<std::int64_t>(std::ceil(us - 1e-9)));
}

}  // namespace meshsim

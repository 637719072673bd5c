#pragma once

#include <limits>

// Unit conventions used throughout:
//   time            µs
//   angular rates   rad/µs  (internal representation everywhere)
//   config files    linear frequencies in MHz, times in µs, angles in degrees
// Conversion between linear MHz and rad/µs happens only at the I/O boundary.

namespace sse {

inline constexpr double kTwoPi = 6.283185307179586476925286766559;
inline constexpr double kPi = kTwoPi / 2.0;
inline constexpr double kInf = std::numeric_limits<double>::infinity();

inline constexpr double mhz_to_rad_per_us(double f_mhz) { return kTwoPi * f_mhz; }
inline constexpr double rad_per_us_to_mhz(double w) { return w / kTwoPi; }
inline constexpr double deg_to_rad(double d) { return d * (kPi / 180.0); }
inline constexpr double rad_to_deg(double r) { return r * (180.0 / kPi); }

}  // namespace sse

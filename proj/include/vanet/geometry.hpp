#pragma once

#include <cmath>
#include <numbers>

namespace vanet {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Wraps an angle into [0, 2*pi).
inline double normalize_heading(double rad) {
  double r = std::fmod(rad, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  if (r >= kTwoPi) r = 0.0;
  return r;
}

/// Absolute angular difference folded into [0, pi].
inline double heading_difference(double a, double b) {
  double d = std::fabs(normalize_heading(a) - normalize_heading(b));
  return d > std::numbers::pi ? kTwoPi - d : d;
}

inline double distance(double ax, double ay, double bx, double by) {
  return std::hypot(ax - bx, ay - by);
}

}  // namespace vanet

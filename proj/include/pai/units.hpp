#pragma once

#include <string>
#include <string_view>

namespace pai {

enum class LinearUnit { Meters, Feet };

inline constexpr double kMetersPerFoot = 0.3048;

inline constexpr double meters_per_unit(LinearUnit u) {
  return u == LinearUnit::Feet ? kMetersPerFoot : 1.0;
}

/// Converts a length in meters into the given cloud unit.
inline constexpr double from_meters(double meters, LinearUnit u) {
  return meters / meters_per_unit(u);
}

inline constexpr double to_meters(double value, LinearUnit u) {
  return value * meters_per_unit(u);
}

std::string to_string(LinearUnit u);
LinearUnit parse_linear_unit(std::string_view text);

}  // namespace pai

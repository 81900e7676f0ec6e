#pragma once

#include <variant>

#include "lent/driver_path.hpp"
#include "lent/errors.hpp"

namespace lent {

// Mark value: interpretable only by its owning mark space. Circle marks are
// angles in [0, 2pi); Wiener marks are discretized driver paths.
using Mark = std::variant<double, DriverPath>;

inline bool is_angle(const Mark& m) { return std::holds_alternative<double>(m); }
inline bool is_path(const Mark& m) { return std::holds_alternative<DriverPath>(m); }

inline double mark_angle(const Mark& m) {
  if (const double* a = std::get_if<double>(&m)) return *a;
  throw Error("mark is not a circle angle");
}

inline const DriverPath& mark_path(const Mark& m) {
  if (const DriverPath* p = std::get_if<DriverPath>(&m)) return *p;
  throw Error("mark is not a driver path");
}

inline bool mark_equal(const Mark& a, const Mark& b) {
  if (a.index() != b.index()) return false;
  if (is_angle(a)) return std::get<double>(a) == std::get<double>(b);
  return std::get<DriverPath>(a) == std::get<DriverPath>(b);
}

inline bool mark_less(const Mark& a, const Mark& b) {
  if (a.index() != b.index()) return a.index() < b.index();
  if (is_angle(a)) return std::get<double>(a) < std::get<double>(b);
  return path_less(std::get<DriverPath>(a), std::get<DriverPath>(b));
}

}  // namespace lent

#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace dtwapprox {

enum class CostKind { absolute, squared };

inline const char* to_string(CostKind k) {
  return k == CostKind::absolute ? "absolute" : "squared";
}

inline CostKind cost_kind_from_string(const std::string& s) {
  if (s == "absolute") return CostKind::absolute;
  if (s == "squared") return CostKind::squared;
  throw std::invalid_argument("unknown cost kind: " + s);
}

// Pointwise alignment cost between two samples.
inline double point_cost(double a, double b, CostKind kind) {
  const double d = a - b;
  return kind == CostKind::absolute ? std::abs(d) : d * d;
}

// Derivative of point_cost with respect to a. The absolute kind uses
// subgradient 0 at a == b.
inline double point_cost_grad(double a, double b, CostKind kind) {
  const double d = a - b;
  if (kind == CostKind::squared) return 2.0 * d;
  if (d > 0.0) return 1.0;
  if (d < 0.0) return -1.0;
  return 0.0;
}

}  // namespace dtwapprox

#pragma once

#include <functional>

namespace pro::quad {

/// Per-integral absolute tolerance used by the prediction paths.
inline constexpr double kAbsTol = 1e-6;

struct Options {
  double abs_tol{kAbsTol};
  double rel_tol{1e-9};
  unsigned max_depth{18};
};

/// Adaptive 15-point Gauss–Kronrod integral of f over [a, b]. Returns 0 for
/// empty or reversed ranges.
double integrate(const std::function<double(double)>& f, double a, double b, Options opts = {});

}  // namespace pro::quad

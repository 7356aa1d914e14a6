#pragma once

// Small independent oracles shared by the unit tests. Deliberately simple and
// unrelated to the library's numerical code paths.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

namespace testing_support {

/// Composite Simpson rule with n (even) panels.
inline double simpson(const std::function<double(double)>& f, double a, double b, int n) {
  if (n % 2) ++n;
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

/// Simpson on a log-spaced grid, for integrands spread over many decades.
inline double simpson_log(const std::function<double(double)>& f, double a, double b, int n) {
  const double la = std::log(a);
  const double lb = std::log(b);
  return simpson([&](double t) { return f(std::exp(t)) * std::exp(t); }, la, lb, n);
}

/// Two-sample Kolmogorov-Smirnov statistic.
inline double ks_statistic(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0;
  std::size_t j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / a.size() - static_cast<double>(j) / b.size()));
  }
  return d;
}

/// Critical value of the two-sample KS statistic at significance alpha.
inline double ks_critical(std::size_t n, std::size_t m, double alpha = 0.001) {
  const double c = std::sqrt(-0.5 * std::log(alpha / 2.0));
  return c * std::sqrt(static_cast<double>(n + m) / (static_cast<double>(n) * m));
}

/// Standard normal CDF via erfc, independent of the library's implementation.
inline double phi(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

}  // namespace testing_support

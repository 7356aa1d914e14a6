#include "pro/quadrature.hpp"

#include <cmath>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace pro::quad {

double integrate(const std::function<double(double)>& f, double a, double b, Options opts) {
  if (!(b > a)) return 0.0;
  using GK = boost::math::quadrature::gauss_kronrod<double, 15>;
  double err = 0.0;
  double l1 = 0.0;
  const double value = GK::integrate(f, a, b, opts.max_depth, opts.rel_tol, &err, &l1);
  if (err > opts.abs_tol && err > opts.rel_tol * l1 && opts.max_depth < 30) {
    // One deeper pass when the default depth left the absolute error too large.
    Options deeper = opts;
    deeper.max_depth = opts.max_depth + 6;
    return GK::integrate(f, a, b, deeper.max_depth, opts.rel_tol, &err, &l1);
  }
  return value;
}

}  // namespace pro::quad

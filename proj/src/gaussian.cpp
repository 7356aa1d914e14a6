#include "pro/gaussian.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <boost/math/special_functions/erf.hpp>

namespace pro {

double normal_pdf(double z) {
  return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double normal_sf(double z) { return 0.5 * std::erfc(z / std::numbers::sqrt2); }

double normal_quantile(double p) {
  if (p <= 0.0) return -HUGE_VAL;
  if (p >= 1.0) return HUGE_VAL;
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

TruncatedNormal::TruncatedNormal(GaussianSpec spec, double floor)
    : mu_(spec.mean), sigma_(0.0), floor_(floor), point_(0.0), z_floor_(0.0), mass_above_(1.0) {
  if (!(spec.variance >= 0.0) || !std::isfinite(spec.mean)) {
    throw std::invalid_argument("TruncatedNormal: variance must be >= 0 and mean finite");
  }
  sigma_ = std::sqrt(spec.variance);
  point_ = std::max(mu_, floor_);
  if (sigma_ > 0.0) {
    z_floor_ = (floor_ - mu_) / sigma_;
    mass_above_ = normal_sf(z_floor_);
    if (mass_above_ <= 0.0) {
      // All mass sits far below the floor; collapse onto it.
      sigma_ = 0.0;
      point_ = floor_;
      mass_above_ = 1.0;
    }
  }
}

double TruncatedNormal::pdf(double x) const {
  if (degenerate() || x <= floor_) return 0.0;
  return normal_pdf((x - mu_) / sigma_) / (sigma_ * mass_above_);
}

double TruncatedNormal::cdf(double x) const {
  if (degenerate()) return x >= point_ ? 1.0 : 0.0;
  if (x <= floor_) return 0.0;
  return std::clamp(1.0 - sf(x), 0.0, 1.0);
}

double TruncatedNormal::sf(double x) const {
  if (degenerate()) return x >= point_ ? 0.0 : 1.0;
  if (x <= floor_) return 1.0;
  return std::clamp(normal_sf((x - mu_) / sigma_) / mass_above_, 0.0, 1.0);
}

double TruncatedNormal::support_lo() const {
  if (degenerate()) return point_;
  return std::max(floor_, mu_ - kSupportSigmas * sigma_);
}

double TruncatedNormal::support_hi() const {
  if (degenerate()) return point_;
  return std::max(floor_, mu_ + kSupportSigmas * sigma_);
}

double TruncatedNormal::sample(std::mt19937_64& rng) const {
  if (degenerate()) return point_;
  if (mass_above_ > 0.5) {
    std::normal_distribution<double> normal(mu_, sigma_);
    for (;;) {
      const double x = normal(rng);
      if (x > floor_) return x;
    }
  }
  // Inverse-CDF on the retained tail when rejection would be wasteful.
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  // Invert the upper tail so small retained masses keep full precision.
  const double v = (1.0 - unif(rng)) * mass_above_;
  const double z = -normal_quantile(v);
  return std::max(mu_ + sigma_ * z, std::nextafter(floor_, HUGE_VAL));
}

}  // namespace pro

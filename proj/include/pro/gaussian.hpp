#pragma once

#include <random>

namespace pro {

/// Mean/variance pair describing a predicted distance (or distance change).
struct GaussianSpec {
  double mean{0.0};
  double variance{0.0};

  bool operator==(const GaussianSpec&) const = default;
};

/// Lower truncation point for every distance law. Distances are physically
/// positive and x^(-alpha) is undefined at 0.
inline constexpr double kDistanceFloor = 0.1;

/// Support half-width, in standard deviations, used when integrating over a
/// Gaussian law.
inline constexpr double kSupportSigmas = 6.0;

double normal_pdf(double z);
double normal_cdf(double z);
/// Upper tail 1 - Phi(z), accurate for large z.
double normal_sf(double z);
double normal_quantile(double p);

/// N(mean, variance) conditioned on x > floor. Zero variance degenerates to a
/// point mass at max(mean, floor).
class TruncatedNormal {
 public:
  explicit TruncatedNormal(GaussianSpec spec, double floor = kDistanceFloor);

  bool degenerate() const { return sigma_ == 0.0; }
  double mean() const { return mu_; }
  double sigma() const { return sigma_; }
  double floor() const { return floor_; }
  /// Location of the point mass when degenerate().
  double point() const { return point_; }

  double pdf(double x) const;
  double cdf(double x) const;
  /// 1 - cdf(x), computed without cancellation.
  double sf(double x) const;

  /// Integration support: [max(floor, mu - 6 sigma), mu + 6 sigma].
  double support_lo() const;
  double support_hi() const;

  double sample(std::mt19937_64& rng) const;

 private:
  double mu_;
  double sigma_;
  double floor_;
  double point_;
  double z_floor_;     // (floor - mu) / sigma
  double mass_above_;  // P(N(mu, sigma^2) > floor)
};

}  // namespace pro

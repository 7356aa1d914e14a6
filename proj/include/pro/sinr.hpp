#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "pro/gaussian.hpp"
#include "pro/mobility.hpp"

namespace pro::sinr {

/// SINR parameters in the normalised form where transmit power and antenna
/// gains cancel: every power is a distance^(-alpha) quantity.
struct SinrConfig {
  double alpha{3.0};
  double beta{4.0};
  double noise{0.0};
  int mc_samples{10000};
  std::uint64_t rng_seed{1};

  void validate() const;
  /// Noise level at which a lone sender at `range` sits exactly at beta.
  static double noise_for_range(double range, double alpha, double beta);
  bool operator==(const SinrConfig&) const = default;
};

/// Thrown by the quadrature path when a scene has more random interferers
/// than nested integration can afford.
class UnsupportedDimension : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline constexpr int kMaxQuadratureInterferers = 3;

struct InterferenceScene {
  GaussianSpec sender_distance;
  std::vector<GaussianSpec> interferer_distances;
  /// Optional per-interferer inclusion probability (same order as
  /// interferer_distances). Empty means every interferer is always present.
  std::vector<double> inclusion;
  std::vector<mobility::VehicleId> interferer_ids;
  /// Expected interferer count; when set, the quadrature path keeps the
  /// round(count_weight) most likely interferers.
  std::optional<double> count_weight;

  void validate() const;
};

/// Instantaneous SINR d_sr^-a / (N + sum d_ir^-a). Throws std::domain_error on
/// non-positive distances.
double instantaneous_sinr(double d_sr, std::span<const double> interferer_dists, const SinrConfig& cfg);

struct McEstimate {
  double probability{0.0};
  double std_error{0.0};
};

/// Monte Carlo estimate of P(SINR >= beta) with all distances drawn from their
/// truncated Gaussian laws; interferers with inclusion weights are present
/// per sample with that probability.
McEstimate predict_sinr_probability_mc(const InterferenceScene& scene, const SinrConfig& cfg, std::mt19937_64& rng);

/// Density of y = x^-alpha for x ~ N(mu, sigma_sq) truncated to x > 0.1 m.
double pdf_inverse_power(double y, double mu, double sigma_sq, double alpha);

/// Density of z = N + sum_i x_i^-alpha for 1..3 independent distance laws,
/// by iterated convolution. Zero-variance laws act as deterministic shifts.
double pdf_interference_sum(double z, std::span<const GaussianSpec> interferers, double noise, double alpha);

/// Density of the predicted SINR w = y / z.
double pdf_sinr_ratio(double w, const InterferenceScene& scene, const SinrConfig& cfg);

/// P(SINR >= beta) by nested adaptive quadrature; at most three random
/// interferers.
double predict_sinr_probability_quadrature(const InterferenceScene& scene, const SinrConfig& cfg);

/// Interferer laws the quadrature path integrates over, after applying
/// count_weight selection.
std::vector<GaussianSpec> quadrature_interferers(const InterferenceScene& scene);

/// Prediction scene for `receiver` hearing `sender` after dt: every other
/// vehicle whose link probability to the receiver is at least p_cut becomes an
/// interferer, with inclusion probability link_probability * activity.
InterferenceScene effective_interference_scene(const mobility::VehicleState& receiver,
                                               std::span<const mobility::VehicleState> world,
                                               const mobility::VehicleState& sender, double dt,
                                               const mobility::MobilityConfig& mob, double p_cut = 0.01,
                                               double activity = 1.0);

}  // namespace pro::sinr

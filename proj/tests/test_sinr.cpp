#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "pro/sinr.hpp"
#include "test_support.hpp"

using namespace pro;
using namespace pro::sinr;
using testing_support::phi;

namespace {

SinrConfig cfg_with(double alpha, double beta, double noise, int samples = 100000) {
  SinrConfig c;
  c.alpha = alpha;
  c.beta = beta;
  c.noise = noise;
  c.mc_samples = samples;
  return c;
}

// Draws from N(mu, var) conditioned on x > 0.1 by rejection.
double draw_distance(std::mt19937_64& rng, GaussianSpec s) {
  std::normal_distribution<double> g(s.mean, std::sqrt(s.variance));
  for (;;) {
    const double x = g(rng);
    if (x > kDistanceFloor) return x;
  }
}

// Per-bin comparison of a density against a histogram of samples. Bin
// probabilities come from Simpson integration of the density.
void expect_histogram_match(const std::function<double(double)>& pdf, const std::vector<double>& samples,
                            const std::vector<double>& edges) {
  const double n = static_cast<double>(samples.size());
  for (std::size_t b = 0; b + 1 < edges.size(); ++b) {
    const double lo = edges[b];
    const double hi = edges[b + 1];
    const double p = testing_support::simpson(pdf, lo, hi, 400);
    const double count = static_cast<double>(
        std::count_if(samples.begin(), samples.end(), [&](double x) { return x >= lo && x < hi; }));
    const double se = std::sqrt(std::max(p * (1.0 - p), 1e-12) / n);
    EXPECT_NEAR(count / n, p, 3.0 * se) << "bin [" << lo << ", " << hi << ")";
  }
}

std::vector<double> quantile_edges(std::vector<double> samples, int bins) {
  std::sort(samples.begin(), samples.end());
  std::vector<double> edges;
  for (int b = 0; b <= bins; ++b) {
    const double q = 0.02 + 0.96 * b / bins;
    edges.push_back(samples[static_cast<std::size_t>(q * (samples.size() - 1))]);
  }
  return edges;
}

mobility::VehicleState vehicle(mobility::VehicleId id, Vec2 p, Vec2 heading, double speed) {
  mobility::VehicleState v;
  v.id = id;
  v.position = p;
  v.heading = heading;
  v.speed = speed;
  v.sigma = 1.0;
  return v;
}

}  // namespace

TEST(InstantaneousSinr, Examples) {
  const auto c2 = cfg_with(2.0, 4.0, 0.0);
  const std::vector<double> same{50.0};
  EXPECT_DOUBLE_EQ(instantaneous_sinr(50.0, same, cfg_with(3.0, 4.0, 0.0)), 1.0);
  const std::vector<double> twice{200.0};
  EXPECT_DOUBLE_EQ(instantaneous_sinr(100.0, twice, c2), 4.0);
  const std::vector<double> set{70.0, 130.0, 220.0};
  const double base = instantaneous_sinr(40.0, set, cfg_with(3.5, 4.0, 0.0));
  for (double c : {0.01, 0.5, 3.0, 1000.0}) {
    std::vector<double> scaled;
    for (double d : set) scaled.push_back(d * c);
    EXPECT_NEAR(instantaneous_sinr(40.0 * c, scaled, cfg_with(3.5, 4.0, 0.0)), base, 1e-12 * base);
  }
  EXPECT_THROW(instantaneous_sinr(0.0, same, c2), std::domain_error);
  const std::vector<double> bad{-1.0};
  EXPECT_THROW(instantaneous_sinr(10.0, bad, c2), std::domain_error);
}

TEST(InstantaneousSinr, StrictlyDecreasingInDistances) {
  const auto c = cfg_with(3.0, 4.0, 1e-8);
  double prev = instantaneous_sinr(10.0, std::vector<double>{100.0}, c);
  for (double d = 11.0; d < 200.0; d += 7.0) {
    const double s = instantaneous_sinr(d, std::vector<double>{100.0}, c);
    EXPECT_LT(s, prev);
    prev = s;
  }
  prev = 0.0;
  for (double di = 20.0; di < 500.0; di += 13.0) {
    const double s = instantaneous_sinr(50.0, std::vector<double>{di, 300.0}, c);
    EXPECT_GT(s, prev);
    prev = s;
  }
  EXPECT_GT(instantaneous_sinr(5.0, std::vector<double>{}, c), 0.0);
}

TEST(SinrMc, ThresholdLimits) {
  InterferenceScene scene;
  scene.sender_distance = {100.0, 250.0};
  scene.interferer_distances = {{200.0, 250.0}};
  std::mt19937_64 rng(3);
  EXPECT_EQ(predict_sinr_probability_mc(scene, cfg_with(2.0, 1e-9, 0.0, 5000), rng).probability, 1.0);
  EXPECT_EQ(predict_sinr_probability_mc(scene, cfg_with(2.0, 1e12, 0.0, 5000), rng).probability, 0.0);
}

TEST(SinrMc, AgreesWithQuadratureSingleInterferer) {
  InterferenceScene scene;
  scene.sender_distance = {100.0, 250.0};
  scene.interferer_distances = {{200.0, 250.0}};
  const auto c = cfg_with(2.0, 2.0, 0.0, 100000);
  std::mt19937_64 rng(19);
  const auto mc = predict_sinr_probability_mc(scene, c, rng);
  const double q = predict_sinr_probability_quadrature(scene, c);
  EXPECT_GT(mc.std_error, 0.0);
  EXPECT_NEAR(mc.probability, q, 3.0 * mc.std_error);
}

TEST(SinrMc, MatchesDirectSampling) {
  // Independent sampler for the same scene, including Bernoulli presence.
  InterferenceScene scene;
  scene.sender_distance = {120.0, 400.0};
  scene.interferer_distances = {{180.0, 300.0}, {260.0, 500.0}, {90.0, 100.0}};
  scene.inclusion = {0.8, 0.5, 0.2};
  const auto c = cfg_with(3.0, 4.0, 1e-8, 100000);
  std::mt19937_64 rng(5);
  const auto mc = predict_sinr_probability_mc(scene, c, rng);

  std::mt19937_64 oracle_rng(6);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int n = 100000;
  int ok = 0;
  for (int s = 0; s < n; ++s) {
    const double y = std::pow(draw_distance(oracle_rng, scene.sender_distance), -3.0);
    double z = c.noise;
    for (std::size_t i = 0; i < 3; ++i) {
      const double x = draw_distance(oracle_rng, scene.interferer_distances[i]);
      if (u(oracle_rng) < scene.inclusion[i]) z += std::pow(x, -3.0);
    }
    ok += y / z >= c.beta;
  }
  const double p = static_cast<double>(ok) / n;
  const double se = std::sqrt(mc.std_error * mc.std_error + p * (1.0 - p) / n);
  EXPECT_NEAR(mc.probability, p, 3.0 * se);
}

TEST(PdfInversePower, Normalizes) {
  for (auto [mu, var, alpha] : {std::tuple{10.0, 1.0, 2.0}, std::tuple{100.0, 250.0, 3.0},
                                std::tuple{1.0, 4.0, 2.5}, std::tuple{200.0, 900.0, 4.0}}) {
    const double x_hi = mu + 9.0 * std::sqrt(var);
    const double y_lo = std::pow(x_hi, -alpha);
    const double y_hi = std::pow(kDistanceFloor, -alpha);
    const double mass = testing_support::simpson_log(
        [&](double y) { return pdf_inverse_power(y, mu, var, alpha); }, y_lo, y_hi, 200000);
    EXPECT_NEAR(mass, 1.0, 1e-6) << mu;
  }
  EXPECT_EQ(pdf_inverse_power(0.0, 10.0, 1.0, 2.0), 0.0);
  EXPECT_EQ(pdf_inverse_power(-1.0, 10.0, 1.0, 2.0), 0.0);
  EXPECT_EQ(pdf_inverse_power(1000.0, 10.0, 1.0, 2.0), 0.0);  // x below the floor
}

TEST(PdfInversePower, TailMassMatchesGaussianCdf) {
  const double mass = testing_support::simpson_log([](double y) { return pdf_inverse_power(y, 10.0, 1.0, 2.0); },
                                                   1.0 / 121.0, 100.0, 200000);
  EXPECT_NEAR(mass, phi(1.0), 1e-6);
  EXPECT_NEAR(mass, 0.8413, 1e-4);
}

TEST(PdfInversePower, MatchesHistogram) {
  std::mt19937_64 rng(123);
  std::vector<double> ys;
  for (int i = 0; i < 1000000; ++i) ys.push_back(std::pow(draw_distance(rng, {10.0, 1.0}), -2.0));
  expect_histogram_match([](double y) { return pdf_inverse_power(y, 10.0, 1.0, 2.0); }, ys,
                         quantile_edges(ys, 12));
}

TEST(PdfInterferenceSum, SingleTermIsShiftedInversePower) {
  const std::vector<GaussianSpec> one{{50.0, 40.0}};
  for (double z : {1e-4, 3e-4, 4e-4, 8e-4, 2e-3}) {
    EXPECT_NEAR(pdf_interference_sum(z, one, 1e-4, 2.0), pdf_inverse_power(z - 1e-4, 50.0, 40.0, 2.0),
                1e-9 * std::max(1.0, pdf_inverse_power(z - 1e-4, 50.0, 40.0, 2.0)));
  }
  EXPECT_EQ(pdf_interference_sum(0.5e-4, one, 1e-4, 2.0), 0.0);
}

TEST(PdfInterferenceSum, TwoIdenticalTermsNormalize) {
  const std::vector<GaussianSpec> two{{50.0, 40.0}, {50.0, 40.0}};
  const double mass = testing_support::simpson_log(
      [&](double z) { return pdf_interference_sum(z, two, 0.0, 2.0); }, 2.0 * std::pow(95.0, -2.0),
      2.0 * std::pow(12.0, -2.0), 2000);
  EXPECT_NEAR(mass, 1.0, 1e-4);
}

TEST(PdfInterferenceSum, TwoTermsMatchHistogram) {
  const std::vector<GaussianSpec> two{{50.0, 40.0}, {80.0, 90.0}};
  const double noise = 1e-4;
  std::mt19937_64 rng(321);
  std::vector<double> zs;
  for (int i = 0; i < 1000000; ++i) {
    zs.push_back(noise + std::pow(draw_distance(rng, two[0]), -2.0) + std::pow(draw_distance(rng, two[1]), -2.0));
  }
  expect_histogram_match([&](double z) { return pdf_interference_sum(z, two, noise, 2.0); }, zs,
                         quantile_edges(zs, 8));
}

TEST(PdfInterferenceSum, RejectsTooManyTerms) {
  const std::vector<GaussianSpec> four(4, GaussianSpec{50.0, 40.0});
  EXPECT_THROW(pdf_interference_sum(1e-3, four, 0.0, 2.0), UnsupportedDimension);
  InterferenceScene scene;
  scene.sender_distance = {50.0, 10.0};
  scene.interferer_distances = four;
  EXPECT_THROW(predict_sinr_probability_quadrature(scene, cfg_with(2.0, 4.0, 0.0)), UnsupportedDimension);
}

TEST(PdfSinrRatio, Normalizes) {
  InterferenceScene scene;
  scene.sender_distance = {100.0, 250.0};
  scene.interferer_distances = {{200.0, 250.0}};
  const auto c = cfg_with(2.0, 2.0, 0.0);
  const double mass =
      testing_support::simpson_log([&](double w) { return pdf_sinr_ratio(w, scene, c); }, 1e-2, 1e3, 4000);
  EXPECT_NEAR(mass, 1.0, 1e-3);
}

TEST(PdfSinrRatio, NoiseOnlyIsRescaledInversePower) {
  InterferenceScene scene;
  scene.sender_distance = {0.6, 0.01};
  const double noise = 2.5;
  const auto c = cfg_with(3.0, 4.0, noise);
  for (double w : {0.5, 1.0, 2.0, 4.0, 10.0}) {
    const double expected = noise * pdf_inverse_power(noise * w, 0.6, 0.01, 3.0);
    EXPECT_NEAR(pdf_sinr_ratio(w, scene, c), expected, 1e-9 * std::max(1.0, expected)) << w;
  }
}

TEST(PdfSinrRatio, MatchesHistogram) {
  InterferenceScene scene;
  scene.sender_distance = {100.0, 250.0};
  scene.interferer_distances = {{200.0, 250.0}};
  const auto c = cfg_with(2.0, 2.0, 0.0);
  std::mt19937_64 rng(78);
  std::vector<double> ws;
  for (int i = 0; i < 1000000; ++i) {
    ws.push_back(std::pow(draw_distance(rng, scene.sender_distance), -2.0) /
                 std::pow(draw_distance(rng, scene.interferer_distances[0]), -2.0));
  }
  expect_histogram_match([&](double w) { return pdf_sinr_ratio(w, scene, c); }, ws, quantile_edges(ws, 10));
}

TEST(SinrQuadrature, DeterministicSceneAboveThreshold) {
  InterferenceScene scene;
  scene.sender_distance = {100.0, 0.0};
  scene.interferer_distances = {{200.0, 0.0}};
  EXPECT_EQ(predict_sinr_probability_quadrature(scene, cfg_with(2.0, 3.0, 0.0)), 1.0);
  EXPECT_EQ(predict_sinr_probability_quadrature(scene, cfg_with(2.0, 5.0, 0.0)), 0.0);
}

TEST(SinrQuadrature, NoiseOnlyClosedForm) {
  // SINR >= beta  <=>  x <= beta^(-1/alpha) when N = 1.
  InterferenceScene scene;
  scene.sender_distance = {0.6, 0.01};
  const double p = predict_sinr_probability_quadrature(scene, cfg_with(2.0, 4.0, 1.0));
  const double below = phi((kDistanceFloor - 0.6) / 0.1);
  const double expected = (phi((0.5 - 0.6) / 0.1) - below) / (1.0 - below);
  EXPECT_NEAR(p, expected, 1e-6);
}

TEST(SinrQuadrature, AgreesWithMcOnRandomScenes) {
  std::mt19937_64 gen(2718);
  std::uniform_real_distribution<double> mean(20.0, 250.0);
  std::uniform_real_distribution<double> var(5.0, 900.0);
  for (int m = 0; m <= 3; ++m) {
    for (int rep = 0; rep < 2; ++rep) {
      InterferenceScene scene;
      scene.sender_distance = {mean(gen) * 0.5, var(gen)};
      for (int i = 0; i < m; ++i) scene.interferer_distances.push_back({mean(gen), var(gen)});
      const auto c = cfg_with(3.0, 2.0, m == 0 ? 1e-6 : 1e-8, 100000);
      std::mt19937_64 rng(100 + 10 * m + rep);
      const auto mc = predict_sinr_probability_mc(scene, c, rng);
      const double q = predict_sinr_probability_quadrature(scene, c);
      ASSERT_GE(q, 0.0);
      ASSERT_LE(q, 1.0);
      EXPECT_NEAR(mc.probability, q, 3.0 * std::max(mc.std_error, 1.0 / c.mc_samples)) << "m=" << m;
    }
  }
}

TEST(SinrQuadrature, MonotoneInBeta) {
  InterferenceScene scene;
  scene.sender_distance = {90.0, 300.0};
  scene.interferer_distances = {{150.0, 200.0}, {220.0, 500.0}};
  double prev_q = 1.0;
  double prev_mc = 1.0;
  for (double beta : {0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 64.0}) {
    const auto c = cfg_with(3.0, beta, 0.0, 20000);
    const double q = predict_sinr_probability_quadrature(scene, c);
    std::mt19937_64 rng(9);  // common random numbers
    const double mc = predict_sinr_probability_mc(scene, c, rng).probability;
    EXPECT_LE(q, prev_q + 1e-9);
    EXPECT_LE(mc, prev_mc);
    prev_q = q;
    prev_mc = mc;
  }
}

TEST(SinrQuadrature, CountWeightKeepsMostLikelyInterferers) {
  InterferenceScene scene;
  scene.sender_distance = {90.0, 300.0};
  scene.interferer_distances = {{150.0, 200.0}, {220.0, 500.0}, {300.0, 100.0}, {120.0, 50.0}};
  scene.inclusion = {0.9, 0.2, 0.6, 0.4};
  scene.count_weight = 2.4;
  const auto picked = quadrature_interferers(scene);
  ASSERT_EQ(picked.size(), 2u);
  EXPECT_EQ(picked[0], (GaussianSpec{150.0, 200.0}));
  EXPECT_EQ(picked[1], (GaussianSpec{300.0, 100.0}));
}

TEST(EffectiveScene, EmptyWorld) {
  const auto r = vehicle(0, {0.0, 0.0}, {1.0, 0.0}, 10.0);
  const auto s = vehicle(1, {100.0, 0.0}, {1.0, 0.0}, 10.0);
  const std::vector<mobility::VehicleState> world{r, s};
  const auto scene = effective_interference_scene(r, world, s, 1.0, {});
  EXPECT_TRUE(scene.interferer_distances.empty());
  ASSERT_TRUE(scene.count_weight.has_value());
  EXPECT_EQ(*scene.count_weight, 0.0);
  EXPECT_DOUBLE_EQ(scene.sender_distance.mean, 100.0);
  EXPECT_DOUBLE_EQ(scene.sender_distance.variance, 2.0);
}

TEST(EffectiveScene, FarVehiclesExcluded) {
  const auto r = vehicle(0, {0.0, 0.0}, {1.0, 0.0}, 10.0);
  const auto s = vehicle(1, {100.0, 0.0}, {1.0, 0.0}, 10.0);
  std::vector<mobility::VehicleState> world{r, s};
  for (int k = 0; k < 5; ++k) world.push_back(vehicle(2 + k, {1500.0 + 100.0 * k, 0.0}, {1.0, 0.0}, 10.0));
  EXPECT_TRUE(effective_interference_scene(r, world, s, 0.5, {}).interferer_distances.empty());
}

TEST(EffectiveScene, InclusionMatchesLinkProbability) {
  mobility::MobilityConfig mob;
  std::mt19937_64 rng(4);
  const auto roads = mobility::RoadGraph::manhattan(2000.0, 2000.0, 500.0);
  const auto world = mobility::place_uniform(roads, 200, mob, rng);
  const auto& r = world[0];
  const auto& s = world[1];
  const double dt = 3.0;
  const auto scene = effective_interference_scene(r, world, s, dt, mob, 0.01);
  std::vector<mobility::VehicleId> expected;
  double total = 0.0;
  for (const auto& v : world) {
    if (v.id == r.id || v.id == s.id) continue;
    // Brute force: P(d + radial*dt + N(0, var) < R).
    const double d = distance(v.position, r.position);
    const Vec2 u = (v.position - r.position) * (1.0 / d);
    const Vec2 rel = v.velocity() - r.velocity();
    const double mean = (rel.x * u.x + rel.y * u.y) * dt;
    const double sd = std::sqrt((v.sigma * v.sigma + r.sigma * r.sigma) * dt * dt * dt);
    const double p = phi((mob.range - d - mean) / sd);
    total += p;
    if (p >= 0.01) expected.push_back(v.id);
  }
  auto got = scene.interferer_ids;
  std::sort(got.begin(), got.end());
  EXPECT_EQ(got, expected);
  EXPECT_NEAR(*scene.count_weight, total, 1e-9);
  for (double p : scene.inclusion) {
    EXPECT_GE(p, 0.01);
    EXPECT_LE(p, 1.0);
  }
}

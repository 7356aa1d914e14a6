#include "pro/sinr.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pro/quadrature.hpp"

namespace pro::sinr {

namespace {

// x^-alpha with exact fast paths for the common integer exponents.
inline double inv_pow(double x, double alpha) {
  if (alpha == 2.0) return 1.0 / (x * x);
  if (alpha == 3.0) return 1.0 / (x * x * x);
  if (alpha == 4.0) {
    const double x2 = x * x;
    return 1.0 / (x2 * x2);
  }
  return std::pow(x, -alpha);
}

// Inverse of inv_pow: y^(-1/alpha).
inline double root_inv(double y, double alpha) {
  if (alpha == 2.0) return 1.0 / std::sqrt(y);
  return std::pow(y, -1.0 / alpha);
}

// Random distance law together with the range of y = x^-alpha over its
// integration support.
struct PowerLaw {
  TruncatedNormal x;
  double y_lo;
  double y_hi;
  double mode;       // power at the distance mean, a landmark for quadrature splits
  double log_width;  // rough spread of ln y

  PowerLaw(const TruncatedNormal& law, double alpha)
      : x(law),
        y_lo(inv_pow(law.support_hi(), alpha)),
        y_hi(inv_pow(law.support_lo(), alpha)),
        mode(inv_pow(std::max(law.mean(), law.support_lo()), alpha)),
        log_width(std::clamp(alpha * law.sigma() / std::max(law.mean(), law.support_lo()), 1e-3, 1.0)) {}

  // Density of y by change of variables: (1/a) y^-(1+a)/a f_X(y^-1/a).
  double density(double y, double alpha) const {
    if (!(y > 0.0)) return 0.0;
    const double xv = root_inv(y, alpha);
    const double fx = x.pdf(xv);
    if (fx == 0.0) return 0.0;
    return fx * std::pow(xv, 1.0 + alpha) / alpha;
  }
};

struct SplitLaws {
  std::vector<PowerLaw> random;
  double shift{0.0};  // noise + deterministic interferer powers
};

SplitLaws split(std::span<const GaussianSpec> specs, double noise, double alpha) {
  SplitLaws out;
  out.shift = noise;
  for (const auto& spec : specs) {
    TruncatedNormal law(spec);
    if (law.degenerate()) {
      out.shift += inv_pow(law.point(), alpha);
    } else {
      out.random.emplace_back(law, alpha);
    }
  }
  return out;
}

constexpr quad::Options kInner{quad::kAbsTol * 1e-3, 1e-8, 12};
constexpr quad::Options kOuter{quad::kAbsTol, 1e-8, 14};

// Density of shift + sum of the laws' powers at z. The last law is convolved
// with the density of the rest, split at excess/2 so that each half runs over
// the log of the smaller summand. Narrow peaks then stay wide enough for the
// adaptive rule to find, which is not the case in distance coordinates.
double sum_density(double z, std::span<const PowerLaw> laws, double shift, double alpha) {
  const double excess = z - shift;
  if (laws.size() == 1) return laws.front().density(excess, alpha);
  if (!(excess > 0.0)) return 0.0;
  const PowerLaw& last = laws.back();
  const auto rest = laws.first(laws.size() - 1);
  double rest_lo = 0.0;
  double rest_hi = 0.0;
  for (const auto& l : rest) {
    rest_lo += l.y_lo;
    rest_hi += l.y_hi;
  }
  const double ya = std::max(last.y_lo, excess - rest_hi);
  const double yb = std::min(last.y_hi, excess - rest_lo);
  if (!(yb > ya)) return 0.0;
  const double c = std::clamp(0.5 * excess, ya, yb);
  const quad::Options& opts = laws.size() > 2 ? kOuter : kInner;

  // Landmarks: the modes of the last law and of the rest, in both variables.
  double width = last.log_width;
  double rest_mode = 0.0;
  for (const auto& l : rest) {
    width = std::min(width, l.log_width);
    rest_mode += l.mode;
  }
  std::vector<double> y_marks{last.mode, excess - rest_mode};
  for (const auto& l : rest) y_marks.push_back(excess - l.mode);

  const auto cuts_for = [&](double lo, double hi, bool in_y) {
    const double t_lo = std::log(lo);
    const double t_hi = std::log(hi);
    std::vector<double> cuts{t_lo, t_hi};
    for (double y : y_marks) {
      const double v = in_y ? y : excess - y;
      if (!(v > 0.0)) continue;
      for (double k : {-4.0, -1.0, 0.0, 1.0, 4.0}) {
        const double t = std::log(v) + k * width;
        if (t > t_lo && t < t_hi) cuts.push_back(t);
      }
    }
    std::sort(cuts.begin(), cuts.end());
    return cuts;
  };
  const auto pieces = [&](const auto& f, const std::vector<double>& cuts) {
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) total += quad::integrate(f, cuts[i], cuts[i + 1], opts);
    return total;
  };

  double total = 0.0;
  if (c > ya) {
    const auto lower = [&](double t) {
      const double y = std::exp(t);
      const double fy = last.density(y, alpha);
      if (fy == 0.0) return 0.0;
      return y * fy * sum_density(excess - y, rest, 0.0, alpha);
    };
    total += pieces(lower, cuts_for(ya, c, true));
  }
  if (yb > c) {
    const auto upper = [&](double t) {
      const double u = std::exp(t);
      const double g = sum_density(u, rest, 0.0, alpha);
      if (g == 0.0) return 0.0;
      return u * g * last.density(excess - u, alpha);
    };
    total += pieces(upper, cuts_for(excess - yb, excess - c, false));
  }
  return total;
}

std::vector<std::size_t> selected_indices(const InterferenceScene& scene) {
  const std::size_t n = scene.interferer_distances.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  if (!scene.count_weight) return order;
  if (!scene.inclusion.empty()) {
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scene.inclusion[a] > scene.inclusion[b]; });
  }
  const double k = std::floor(std::max(0.0, *scene.count_weight) + 0.5);
  order.resize(std::min(n, static_cast<std::size_t>(k)));
  return order;
}

SplitLaws scene_interferers(const InterferenceScene& scene, double noise, double alpha) {
  const auto specs = quadrature_interferers(scene);
  SplitLaws laws = split(specs, noise, alpha);
  if (laws.random.size() > static_cast<std::size_t>(kMaxQuadratureInterferers)) {
    throw UnsupportedDimension("quadrature path supports at most 3 random interferers; use the Monte Carlo path");
  }
  return laws;
}

// P(sender power < beta * z) with interferers idx.. still random.
double failure_probability(const TruncatedNormal& sender, std::span<const PowerLaw> laws, double z_acc,
                           double alpha, double beta) {
  if (sender.degenerate()) {
    const double y0 = inv_pow(sender.point(), alpha);
    if (laws.empty()) return y0 < beta * z_acc ? 1.0 : 0.0;
    if (laws.size() == 1) {
      // y0 < beta (z_acc + y)  <=>  x < (y0 / beta - z_acc)^(-1/alpha)
      const double t = y0 / beta - z_acc;
      if (!(t > 0.0)) return 1.0;
      return laws.front().x.cdf(root_inv(t, alpha));
    }
  } else if (laws.empty()) {
    if (!(z_acc > 0.0)) return 0.0;
    // y_s < beta z  <=>  x_s > (beta z)^(-1/alpha)
    return sender.sf(root_inv(beta * z_acc, alpha));
  }
  const PowerLaw& head = laws.front();
  const auto tail = laws.subspan(1);
  const auto integrand = [&](double xv) {
    const double fx = head.x.pdf(xv);
    if (fx == 0.0) return 0.0;
    return fx * failure_probability(sender, tail, z_acc + inv_pow(xv, alpha), alpha, beta);
  };
  return quad::integrate(integrand, head.x.support_lo(), head.x.support_hi(), tail.empty() ? kInner : kOuter);
}

}  // namespace

void SinrConfig::validate() const {
  if (!(alpha >= 2.0 && alpha <= 5.0)) throw std::invalid_argument("sinr: alpha must lie in [2, 5]");
  if (!(beta > 0.0)) throw std::invalid_argument("sinr: beta must be > 0");
  if (!(noise >= 0.0)) throw std::invalid_argument("sinr: noise must be >= 0");
  if (mc_samples < 1) throw std::invalid_argument("sinr: mc_samples must be >= 1");
}

double SinrConfig::noise_for_range(double range, double alpha, double beta) {
  return inv_pow(range, alpha) / beta;
}

void InterferenceScene::validate() const {
  const auto check = [](const GaussianSpec& g) {
    if (!(g.variance >= 0.0) || !std::isfinite(g.mean)) throw std::invalid_argument("scene: invalid distance law");
  };
  check(sender_distance);
  for (const auto& g : interferer_distances) check(g);
  if (!inclusion.empty() && inclusion.size() != interferer_distances.size()) {
    throw std::invalid_argument("scene: inclusion weights must match interferers");
  }
  for (double p : inclusion) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("scene: inclusion weight outside [0, 1]");
  }
  if (!interferer_ids.empty() && interferer_ids.size() != interferer_distances.size()) {
    throw std::invalid_argument("scene: interferer ids must match interferers");
  }
}

double instantaneous_sinr(double d_sr, std::span<const double> interferer_dists, const SinrConfig& cfg) {
  if (!(d_sr > 0.0)) throw std::domain_error("instantaneous_sinr: sender distance must be > 0");
  double denom = cfg.noise;
  for (double d : interferer_dists) {
    if (!(d > 0.0)) throw std::domain_error("instantaneous_sinr: interferer distance must be > 0");
    denom += inv_pow(d, cfg.alpha);
  }
  const double signal = inv_pow(d_sr, cfg.alpha);
  return denom > 0.0 ? signal / denom : HUGE_VAL;
}

McEstimate predict_sinr_probability_mc(const InterferenceScene& scene, const SinrConfig& cfg, std::mt19937_64& rng) {
  scene.validate();
  const TruncatedNormal sender(scene.sender_distance);
  std::vector<TruncatedNormal> interferers;
  interferers.reserve(scene.interferer_distances.size());
  for (const auto& g : scene.interferer_distances) interferers.emplace_back(g);
  const bool weighted = !scene.inclusion.empty();
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  long hits = 0;
  for (int s = 0; s < cfg.mc_samples; ++s) {
    const double signal = inv_pow(sender.sample(rng), cfg.alpha);
    double denom = cfg.noise;
    for (std::size_t i = 0; i < interferers.size(); ++i) {
      if (weighted && unif(rng) >= scene.inclusion[i]) continue;
      denom += inv_pow(interferers[i].sample(rng), cfg.alpha);
    }
    if (signal >= cfg.beta * denom) ++hits;
  }
  const double n = static_cast<double>(cfg.mc_samples);
  const double p = static_cast<double>(hits) / n;
  return {p, std::sqrt(p * (1.0 - p) / n)};
}

double pdf_inverse_power(double y, double mu, double sigma_sq, double alpha) {
  if (!(sigma_sq > 0.0)) throw std::invalid_argument("pdf_inverse_power: sigma_sq must be > 0");
  if (!(y > 0.0)) return 0.0;
  const TruncatedNormal law({mu, sigma_sq});
  return PowerLaw(law, alpha).density(y, alpha);
}

double pdf_interference_sum(double z, std::span<const GaussianSpec> interferers, double noise, double alpha) {
  if (interferers.empty()) throw std::invalid_argument("pdf_interference_sum: need at least one interferer");
  if (interferers.size() > static_cast<std::size_t>(kMaxQuadratureInterferers)) {
    throw UnsupportedDimension("pdf_interference_sum: more than 3 interferers; use the Monte Carlo path");
  }
  const SplitLaws laws = split(interferers, noise, alpha);
  if (laws.random.empty()) throw std::domain_error("pdf_interference_sum: all laws deterministic (point mass)");
  return sum_density(z, laws.random, laws.shift, alpha);
}

double pdf_sinr_ratio(double w, const InterferenceScene& scene, const SinrConfig& cfg) {
  scene.validate();
  if (!(w > 0.0)) return 0.0;
  const double alpha = cfg.alpha;
  const TruncatedNormal sender_law(scene.sender_distance);
  const SplitLaws laws = scene_interferers(scene, cfg.noise, alpha);

  if (laws.random.empty()) {
    if (!(laws.shift > 0.0)) throw std::domain_error("pdf_sinr_ratio: zero denominator (no noise, no interferers)");
    if (sender_law.degenerate()) throw std::domain_error("pdf_sinr_ratio: deterministic SINR (point mass)");
    // Deterministic denominator: f_W(w) = N f_Y(N w).
    return laws.shift * PowerLaw(sender_law, alpha).density(laws.shift * w, alpha);
  }
  if (sender_law.degenerate()) {
    const double y0 = inv_pow(sender_law.point(), alpha);
    return y0 / (w * w) * sum_density(y0 / w, laws.random, laws.shift, alpha);
  }

  const PowerLaw sender(sender_law, alpha);
  double z_lo = laws.shift;
  double z_hi = laws.shift;
  for (const auto& l : laws.random) {
    z_lo += l.y_lo;
    z_hi += l.y_hi;
  }
  z_lo = std::max(z_lo, sender.y_lo / w);
  z_hi = std::min(z_hi, sender.y_hi / w);
  if (!(z_hi > z_lo)) return 0.0;
  // Integrate over t = ln(z - shift); the interference sum spans decades.
  const double shift = laws.shift;
  const auto integrand = [&](double t) {
    const double excess = std::exp(t);
    const double z = shift + excess;
    const double fy = sender.density(w * z, alpha);
    if (fy == 0.0) return 0.0;
    return z * fy * sum_density(z, laws.random, shift, alpha) * excess;
  };
  const double t_lo = std::log(std::max(z_lo - shift, 1e-300));
  const double t_hi = std::log(z_hi - shift);
  return quad::integrate(integrand, t_lo, t_hi, kOuter);
}

double predict_sinr_probability_quadrature(const InterferenceScene& scene, const SinrConfig& cfg) {
  scene.validate();
  const TruncatedNormal sender(scene.sender_distance);
  const SplitLaws laws = scene_interferers(scene, cfg.noise, cfg.alpha);
  // Integrating the ratio density over [0, beta] and swapping the order of
  // integration gives E_Z[F_Y(beta Z)], with F_Y available in closed form.
  const double fail = failure_probability(sender, laws.random, laws.shift, cfg.alpha, cfg.beta);
  return std::clamp(1.0 - fail, 0.0, 1.0);
}

std::vector<GaussianSpec> quadrature_interferers(const InterferenceScene& scene) {
  std::vector<GaussianSpec> out;
  for (std::size_t i : selected_indices(scene)) out.push_back(scene.interferer_distances[i]);
  return out;
}

InterferenceScene effective_interference_scene(const mobility::VehicleState& receiver,
                                               std::span<const mobility::VehicleState> world,
                                               const mobility::VehicleState& sender, double dt,
                                               const mobility::MobilityConfig& mob, double p_cut, double activity) {
  InterferenceScene scene;
  const auto sender_change = mobility::distance_change_distribution(sender, receiver, dt);
  scene.sender_distance = {distance(sender.position, receiver.position) + sender_change.law.mean,
                           sender_change.law.variance};

  struct Candidate {
    double p;
    mobility::VehicleId id;
    GaussianSpec law;
  };
  std::vector<Candidate> kept;
  double expected = 0.0;
  for (const auto& v : world) {
    if (v.id == sender.id || v.id == receiver.id) continue;
    const double p = mobility::link_probability(v, receiver, dt, mob.range);
    expected += p;
    if (p < p_cut) continue;
    const auto change = mobility::distance_change_distribution(v, receiver, dt);
    kept.push_back({p, v.id, {distance(v.position, receiver.position) + change.law.mean, change.law.variance}});
  }
  std::stable_sort(kept.begin(), kept.end(), [](const Candidate& a, const Candidate& b) {
    return a.p != b.p ? a.p > b.p : a.id < b.id;
  });
  for (const auto& c : kept) {
    scene.interferer_distances.push_back(c.law);
    scene.inclusion.push_back(std::clamp(c.p * activity, 0.0, 1.0));
    scene.interferer_ids.push_back(c.id);
  }
  scene.count_weight = expected;
  return scene;
}

}  // namespace pro::sinr

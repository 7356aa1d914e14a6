#include "pro/queue_prediction.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace pro::pql {

void QueueConfig::validate() const {
  if (!(p0 >= 0.0 && p0 <= 1.0)) throw std::invalid_argument("queue: p0 must lie in [0, 1]");
  if (!(t_m > 0.0)) throw std::invalid_argument("queue: t_m must be > 0");
  if (max_len < 1) throw std::invalid_argument("queue: max_len must be >= 1");
  if (!(dt >= t_m * (1.0 - 1e-9))) throw std::invalid_argument("queue: dt must be >= t_m");
}

int QueueConfig::intervals() const { return static_cast<int>(std::floor(dt / t_m + 1e-9)); }

void QueueForecastInput::validate(const QueueConfig& cfg) const {
  if (current_len < 0 || current_len > cfg.max_len) throw std::invalid_argument("queue: current_len outside [0, M]");
  for (double n : neighbor_counts) {
    if (!(n >= 0.0)) throw std::invalid_argument("queue: neighbour counts must be >= 0");
  }
  if (neighbor_counts.size() > 1 && static_cast<int>(neighbor_counts.size()) != cfg.intervals()) {
    throw std::invalid_argument("queue: per-interval counts must cover every interval");
  }
}

double QueueForecastInput::average_count() const {
  if (neighbor_counts.empty()) return 0.0;
  return std::accumulate(neighbor_counts.begin(), neighbor_counts.end(), 0.0) /
         static_cast<double>(neighbor_counts.size());
}

double prob_any_neighbor_transmits(double n, double p0) {
  if (n == 0.0 || p0 == 0.0) return 0.0;
  return -std::expm1(n * std::log1p(-p0));
}

double prob_idle_interval(double n, double p0) { return std::pow(1.0 - p0, n + 1.0); }

double active_interval_count(std::span<const double> neighbor_counts, const QueueConfig& cfg) {
  const int n_inter = cfg.intervals();
  double idle = 0.0;
  if (neighbor_counts.size() > 1) {
    for (double n : neighbor_counts) idle += prob_idle_interval(n, cfg.p0);
  } else {
    const double n = neighbor_counts.empty() ? 0.0 : neighbor_counts.front();
    idle = n_inter * prob_idle_interval(n, cfg.p0);
  }
  return std::max(0.0, n_inter - idle);
}

int round_active(double active) { return static_cast<int>(std::floor(active + 0.5)); }

double queue_probability_from_active(int n_active, int headroom, double n_avg, double p0) {
  if (n_active <= 0) return 1.0;
  const int limit = std::min(n_active, static_cast<int>(std::floor((n_active + headroom) / 2.0)));
  if (limit < 0) return 0.0;
  const double arrive = prob_any_neighbor_transmits(n_avg, p0);
  const double stay = 1.0 - p0;
  // Binomial terms accumulated in log space so large n_active stays finite.
  double total = 0.0;
  for (int i = 0; i <= limit; ++i) {
    const double log_c = std::lgamma(n_active + 1.0) - std::lgamma(i + 1.0) - std::lgamma(n_active - i + 1.0);
    const double a = i == 0 ? 1.0 : std::pow(arrive, i);
    const double b = (n_active - i) == 0 ? 1.0 : std::pow(stay, n_active - i);
    total += std::exp(log_c) * a * b;
  }
  return std::clamp(total, 0.0, 1.0);
}

double predict_queue_probability(const QueueForecastInput& input, const QueueConfig& cfg) {
  cfg.validate();
  input.validate(cfg);
  const int headroom = cfg.max_len - input.current_len;
  const int n_active = round_active(active_interval_count(input.neighbor_counts, cfg));
  return queue_probability_from_active(n_active, headroom, input.average_count(), cfg.p0);
}

double queue_mc_oracle(const QueueForecastInput& input, const QueueConfig& cfg, std::mt19937_64& rng, int trials) {
  cfg.validate();
  input.validate(cfg);
  if (trials < 1) throw std::invalid_argument("queue_mc_oracle: trials must be >= 1");
  const int n_inter = cfg.intervals();
  std::vector<double> p_net(static_cast<std::size_t>(n_inter));
  for (int j = 0; j < n_inter; ++j) {
    const double n = input.neighbor_counts.size() > 1 ? input.neighbor_counts[j] : input.average_count();
    p_net[j] = prob_any_neighbor_transmits(n, cfg.p0);
  }
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  int ok = 0;
  for (int t = 0; t < trials; ++t) {
    int len = input.current_len;
    bool overflow = false;
    for (int j = 0; j < n_inter && !overflow; ++j) {
      const double p_rec = len > 0 ? cfg.p0 : 0.0;
      const bool arrival = unif(rng) < p_net[j];
      const bool departure = unif(rng) < p_rec;
      bool neighbour_wins = arrival;
      if (arrival && departure) neighbour_wins = unif(rng) < p_net[j] / (p_net[j] + p_rec);
      if (neighbour_wins) {
        overflow = ++len > cfg.max_len;
      } else if (departure) {
        --len;
      }
    }
    if (!overflow) ++ok;
  }
  return static_cast<double>(ok) / trials;
}

}  // namespace pro::pql

#pragma once

#include <random>
#include <span>
#include <vector>

namespace pro::pql {

struct QueueConfig {
  double p0{0.02};    // per-interval packet generation probability
  double t_m{0.01};   // transmission interval, s
  int max_len{50};    // M
  double dt{0.1};     // lookahead, s

  void validate() const;
  /// Whole transmission intervals in the lookahead.
  int intervals() const;
};

struct QueueForecastInput {
  int current_len{0};
  /// One expected neighbour count per interval, or a single average count.
  std::vector<double> neighbor_counts;

  void validate(const QueueConfig& cfg) const;
  double average_count() const;
};

/// 1 - (1 - p0)^n
double prob_any_neighbor_transmits(double n, double p0);

/// (1 - p0)^(n + 1): neither the neighbours nor the receiver sends.
double prob_idle_interval(double n, double p0);

/// Expected number of intervals carrying a packet:
/// n_inter - sum_j (1 - p0)^(n_j + 1).
double active_interval_count(std::span<const double> neighbor_counts, const QueueConfig& cfg);

/// Nearest integer, halves rounded up.
int round_active(double active);

/// Closed-form probability that at most floor((n_active + headroom) / 2) of
/// n_active intervals are arrivals, with arrival weight 1 - (1 - p0)^n_avg and
/// non-arrival weight (1 - p0). Clamped to [0, 1].
double queue_probability_from_active(int n_active, int headroom, double n_avg, double p0);

/// Probability the receiver's queue stays below M after the lookahead.
double predict_queue_probability(const QueueForecastInput& input, const QueueConfig& cfg);

/// Direct simulation of the interval process: per interval a neighbour sends
/// to the receiver with probability 1 - (1 - p0)^n and the receiver sends
/// with probability p0 (if it holds a packet); only one transmits, the
/// neighbour winning a conflict with probability p_net / (p_net + p_rec).
/// Returns the fraction of trials whose queue never exceeds M.
double queue_mc_oracle(const QueueForecastInput& input, const QueueConfig& cfg, std::mt19937_64& rng, int trials);

}  // namespace pro::pql

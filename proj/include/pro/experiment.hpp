#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "pro/sim.hpp"

namespace pro::experiment {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class SweepParam { none, n_vehicles, n_cbr_pairs };

std::string_view to_string(SweepParam param);
/// Accepts "none", "density"/"n_vehicles" and "traffic"/"n_cbr_pairs".
std::optional<SweepParam> parse_sweep_param(std::string_view text);
/// Default values swept when only the parameter is given.
std::vector<int> default_sweep_values(SweepParam param);

struct SweepSpec {
  SweepParam param{SweepParam::none};
  std::vector<int> values;  // ignored when param is none
  int replications{1};
  std::vector<sim::Algorithm> algorithms{sim::Algorithm::pro};

  void validate() const;
  bool operator==(const SweepSpec&) const = default;
};

struct ExperimentConfig {
  sim::SimConfig sim;
  SweepSpec sweep;
};

bool same_config(const ExperimentConfig& a, const ExperimentConfig& b);

/// Flat "key = value" text, '#' starts a comment. Unknown or repeated keys,
/// malformed lines and out-of-range values throw ConfigError naming the key.
ExperimentConfig parse_config_text(std::string_view text);
ExperimentConfig parse_config(const std::filesystem::path& path);
/// Every key, one per line, in a form parse_config_text reads back exactly.
std::string serialize(const ExperimentConfig& cfg);

struct SweepRow {
  sim::Algorithm algorithm{sim::Algorithm::pro};
  int value{0};  // swept value, or n_vehicles without a sweep
  int replication{0};
  sim::MetricsRecord metrics;
  std::optional<std::string> error;
};

struct SweepResult {
  std::vector<SweepRow> rows;  // (algorithm, value, replication) order
  bool ok{true};
};

/// Worker count: hardware concurrency capped by PRO_SIM_THREADS when set.
int worker_threads();

struct SweepOptions {
  int threads{0};  // 0: worker_threads()
  std::function<void(const SweepRow&)> progress;
  std::optional<std::filesystem::path> trace_dir;  // one event trace per run
};

/// Runs algorithms x values x replications. Replication r uses seed
/// base + r for every algorithm and value. A failing run stops the sweep;
/// finished rows are kept and the failure becomes an error row.
SweepResult run_sweep(const ExperimentConfig& cfg, const SweepOptions& options = {});

std::string csv_header();
std::string csv_row(const SweepRow& row);
void write_csv(std::ostream& out, const SweepResult& result);

struct Stat {
  int n{0};
  std::optional<double> mean;
  std::optional<double> ci95;  // Student-t half width; needs n >= 2
};

/// Mean and 95% half width of the values present.
Stat summarize_values(std::span<const double> values);

struct SummaryRow {
  sim::Algorithm algorithm{sim::Algorithm::pro};
  int value{0};
  int runs{0};
  Stat pdr;
  Stat delay;
  Stat throughput;
};

std::vector<SummaryRow> summarize(const SweepResult& result);
std::string summary_header();
void write_summary(std::ostream& out, const ExperimentConfig& cfg, std::span<const SummaryRow> rows);

/// %.17g, or NA when absent.
std::string format_number(std::optional<double> v);

}  // namespace pro::experiment

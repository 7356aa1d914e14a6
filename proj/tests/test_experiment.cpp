#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "pro/experiment.hpp"

using namespace pro;
using namespace pro::experiment;

namespace {

ExperimentConfig tiny(int reps) {
  auto cfg = parse_config_text(
      "n_vehicles = 30\n"
      "n_cbr_pairs = 4\n"
      "sim_duration = 20\n");
  cfg.sweep.replications = reps;
  return cfg;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string l;
  while (std::getline(in, l)) out.push_back(l);
  return out;
}

}  // namespace

TEST(ParseConfig, EmptyGivesDefaults) {
  const auto cfg = parse_config_text("");
  const auto& s = cfg.sim;
  EXPECT_EQ(s.mobility.width, 2000.0);
  EXPECT_EQ(s.mobility.height, 2000.0);
  EXPECT_EQ(s.n_vehicles, 100);
  EXPECT_EQ(s.mobility.range, 250.0);
  EXPECT_EQ(s.data_rate, 2e6);
  EXPECT_EQ(s.n_cbr_pairs, 20);
  EXPECT_EQ(s.packet_size, 512);
  EXPECT_NEAR(s.mobility.v_min * 3.6, 30.0, 1e-12);
  EXPECT_NEAR(s.mobility.v_max * 3.6, 60.0, 1e-12);
  EXPECT_EQ(s.beacon_interval, 1.0);
  EXPECT_EQ(s.max_queue, 50);
  EXPECT_EQ(s.cbr_rate, 1.0);
  EXPECT_EQ(s.routing.timer_T, 0.045);
  EXPECT_EQ(cfg.sweep.param, SweepParam::none);
  EXPECT_EQ(cfg.sweep.replications, 1);
  EXPECT_TRUE(same_config(cfg, ExperimentConfig{}));
}

TEST(ParseConfig, ErrorsNameTheKey) {
  const auto message = [](std::string_view text) {
    try {
      parse_config_text(text);
    } catch (const ConfigError& e) {
      return std::string(e.what());
    }
    return std::string("no error");
  };
  EXPECT_NE(message("n_vehicles = -1\n").find("n_vehicles"), std::string::npos);
  EXPECT_NE(message("colour = blue\n").find("colour"), std::string::npos);
  EXPECT_NE(message("seed = 1\nseed = 2\n").find("seed"), std::string::npos);
  EXPECT_NE(message("beta = abc\n").find("beta"), std::string::npos);
  EXPECT_NE(message("p0 = 1.5\n").find("p0"), std::string::npos);
  EXPECT_NE(message("sweep = density\nsweep_values = 300, 100\n").find("sweep_values"), std::string::npos);
  EXPECT_EQ(message("just words\n").find("no error"), std::string::npos);
  EXPECT_THROW(parse_config("/nonexistent/config.txt"), ConfigError);
}

TEST(ParseConfig, CommentsAndWhitespace) {
  const auto cfg = parse_config_text(
      "# header\n"
      "  n_vehicles=150   # trailing\n"
      "\n"
      "algorithms = pro, greedy ,exor\n"
      "sweep = traffic\n"
      "noise = 1e-9\n");
  EXPECT_EQ(cfg.sim.n_vehicles, 150);
  EXPECT_EQ(cfg.sweep.algorithms.size(), 3u);
  EXPECT_EQ(cfg.sweep.param, SweepParam::n_cbr_pairs);
  EXPECT_EQ(cfg.sweep.values, (std::vector<int>{20, 40, 60, 80, 100}));
  EXPECT_FALSE(cfg.sim.noise_auto);
  EXPECT_EQ(cfg.sim.sinr.noise, 1e-9);
}

TEST(ParseConfig, RoundTripIsIdentity) {
  auto cfg = parse_config_text(
      "n_vehicles = 75\nalpha = 3.3\nv_min_kmh = 27.5\nsigma = 0.7\nseed = 9\ncarry_on_void = 1\n"
      "sweep = density\nsweep_values = 50, 75\nreplications = 4\nalgorithms = exor, pro\nttl = 12.25\n");
  const auto text = serialize(cfg);
  const auto back = parse_config_text(text);
  EXPECT_TRUE(same_config(cfg, back));
  EXPECT_EQ(serialize(back), text);
  EXPECT_TRUE(same_config(ExperimentConfig{}, parse_config_text(serialize(ExperimentConfig{}))));
}

TEST(ParseConfig, ReadsFile) {
  const auto path = std::filesystem::temp_directory_path() / "pro_sim_cfg_test.txt";
  {
    std::ofstream f(path);
    f << "n_vehicles = 60\n";
  }
  EXPECT_EQ(parse_config(path).sim.n_vehicles, 60);
  std::filesystem::remove(path);
}

TEST(RunSweep, RowCountsAndSummary) {
  const auto cfg = tiny(3);
  const auto result = run_sweep(cfg);
  ASSERT_TRUE(result.ok);
  ASSERT_EQ(result.rows.size(), 3u);
  for (int r = 0; r < 3; ++r) {
    EXPECT_EQ(result.rows[r].replication, r);
    EXPECT_EQ(result.rows[r].metrics.seed, cfg.sim.seed + r);
    EXPECT_TRUE(result.rows[r].metrics.conserved());
  }
  std::ostringstream csv;
  write_csv(csv, result);
  const auto csv_lines = lines(csv.str());
  ASSERT_EQ(csv_lines.size(), 4u);
  EXPECT_EQ(csv_lines[0],
            "scenario_id,algorithm,seed,n_vehicles,n_cbr_pairs,generated,delivered,pdr,avg_delay_s,throughput,"
            "drop_queue,drop_sinr,drop_void,drop_limit");

  const auto summary = summarize(result);
  ASSERT_EQ(summary.size(), 1u);
  std::ostringstream sum;
  write_summary(sum, cfg, summary);
  EXPECT_EQ(lines(sum.str()).size(), 2u);

  // Mean and Student-t half width recomputed from the CSV text.
  std::vector<double> pdr;
  for (std::size_t i = 1; i < csv_lines.size(); ++i) pdr.push_back(std::stod(split(csv_lines[i])[7]));
  double mean = 0.0;
  for (double p : pdr) mean += p / 3.0;
  double ss = 0.0;
  for (double p : pdr) ss += (p - mean) * (p - mean);
  const double half = 4.302652729911275 * std::sqrt(ss / 2.0) / std::sqrt(3.0);
  EXPECT_NEAR(*summary[0].pdr.mean, mean, 1e-15);
  EXPECT_NEAR(*summary[0].pdr.ci95, half, 1e-12);
  EXPECT_EQ(summary[0].runs, 3);
}

TEST(RunSweep, RerunIsByteIdentical) {
  auto cfg = tiny(2);
  cfg.sweep.algorithms = {sim::Algorithm::pro, sim::Algorithm::greedy, sim::Algorithm::exor};
  cfg.sweep.param = SweepParam::n_vehicles;
  cfg.sweep.values = {20, 30};
  SweepOptions single;
  single.threads = 1;
  SweepOptions many;
  many.threads = 4;
  std::ostringstream a;
  std::ostringstream b;
  write_csv(a, run_sweep(cfg, single));
  write_csv(b, run_sweep(cfg, many));
  EXPECT_EQ(a.str(), b.str());
  const auto rows = lines(a.str());
  ASSERT_EQ(rows.size(), 1u + 3u * 2u * 2u);
  // (algorithm, value, replication) order.
  EXPECT_EQ(split(rows[1])[0], "n_vehicles=20-r0");
  EXPECT_EQ(split(rows[1])[1], "pro");
  EXPECT_EQ(split(rows[4])[0], "n_vehicles=30-r1");
  EXPECT_EQ(split(rows[5])[1], "greedy");
  EXPECT_EQ(split(rows[12])[1], "exor");
}

TEST(RunSweep, InvalidSweepRejectedUpFront) {
  auto cfg = tiny(1);
  cfg.sweep.param = SweepParam::n_cbr_pairs;
  cfg.sweep.values = {2, 40};  // 40 pairs among 30 vehicles
  EXPECT_THROW(run_sweep(cfg), ConfigError);
}

TEST(RunSweep, RunFailureBecomesErrorRow) {
  auto cfg = tiny(3);
  SweepOptions opts;
  opts.threads = 1;
  opts.trace_dir = std::filesystem::path("/nonexistent/trace/dir");
  const auto result = run_sweep(cfg, opts);
  EXPECT_FALSE(result.ok);
  ASSERT_FALSE(result.rows.empty());
  EXPECT_LT(result.rows.size(), 3u);  // the sweep stopped
  ASSERT_TRUE(result.rows.back().error.has_value());
  EXPECT_NE(csv_row(result.rows.back()).find("ERROR"), std::string::npos);
}

TEST(Summary, StudentT) {
  const std::vector<double> five{0.1, 0.4, 0.35, 0.2, 0.3};
  const auto s = summarize_values(five);
  EXPECT_EQ(s.n, 5);
  EXPECT_NEAR(*s.mean, 0.27, 1e-15);
  double ss = 0.0;
  for (double v : five) ss += (v - 0.27) * (v - 0.27);
  EXPECT_NEAR(*s.ci95, 2.7764451051977987 * std::sqrt(ss / 4.0) / std::sqrt(5.0), 1e-12);
  const std::vector<double> one{0.5};
  EXPECT_FALSE(summarize_values(one).ci95.has_value());
  EXPECT_FALSE(summarize_values(std::vector<double>{}).mean.has_value());
  EXPECT_EQ(format_number(std::nullopt), "NA");
  EXPECT_EQ(format_number(0.25), "0.25");
}

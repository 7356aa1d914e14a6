#include "pro/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <mutex>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include <boost/math/distributions/students_t.hpp>

namespace pro::experiment {

std::string_view to_string(SweepParam param) {
  switch (param) {
    case SweepParam::none:
      return "none";
    case SweepParam::n_vehicles:
      return "n_vehicles";
    case SweepParam::n_cbr_pairs:
      return "n_cbr_pairs";
  }
  return "?";
}

std::optional<SweepParam> parse_sweep_param(std::string_view text) {
  if (text == "none") return SweepParam::none;
  if (text == "density" || text == "n_vehicles") return SweepParam::n_vehicles;
  if (text == "traffic" || text == "n_cbr_pairs") return SweepParam::n_cbr_pairs;
  return std::nullopt;
}

std::vector<int> default_sweep_values(SweepParam param) {
  switch (param) {
    case SweepParam::none:
      return {};
    case SweepParam::n_vehicles:
      return {100, 150, 200, 250, 300};
    case SweepParam::n_cbr_pairs:
      return {20, 40, 60, 80, 100};
  }
  return {};
}

void SweepSpec::validate() const {
  if (replications < 1) throw ConfigError("replications: must be >= 1");
  if (algorithms.empty()) throw ConfigError("algorithms: at least one algorithm is required");
  if (param == SweepParam::none) return;
  if (values.empty()) throw ConfigError("sweep_values: must not be empty");
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] <= values[i - 1]) throw ConfigError("sweep_values: must be strictly ascending");
  }
}

bool same_config(const ExperimentConfig& a, const ExperimentConfig& b) { return a.sim == b.sim && a.sweep == b.sweep; }

std::string format_number(std::optional<double> v) {
  if (!v) return "NA";
  // Shortest text that parses back to the same double.
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof buf, *v);
  return std::string(buf, res.ptr);
}

// ---------------------------------------------------------------------------
// Config keys

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double to_double(const std::string& key, const std::string& text) {
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (text.empty() || end != text.c_str() + text.size() || errno == ERANGE || !std::isfinite(v)) {
    throw ConfigError(key + ": expected a finite number, got '" + text + "'");
  }
  return v;
}

long long to_integer(const std::string& key, const std::string& text) {
  errno = 0;
  char* end = nullptr;
  const long long v = std::strtoll(text.c_str(), &end, 10);
  if (text.empty() || end != text.c_str() + text.size() || errno == ERANGE) {
    throw ConfigError(key + ": expected an integer, got '" + text + "'");
  }
  return v;
}

int to_int(const std::string& key, const std::string& text) {
  const long long v = to_integer(key, text);
  if (v < -2147483647LL || v > 2147483647LL) throw ConfigError(key + ": integer out of range");
  return static_cast<int>(v);
}

void require(bool ok, const std::string& key, const char* what) {
  if (!ok) throw ConfigError(key + ": " + what);
}

struct Key {
  std::string name;
  std::function<std::string(const ExperimentConfig&)> get;
  std::function<void(ExperimentConfig&, const std::string&)> set;
};

Key real_key(std::string name, double sim::SimConfig::*field, bool (*ok)(double), const char* what) {
  return {name, [field](const ExperimentConfig& c) { return format_number(c.sim.*field); },
          [name, field, ok, what](ExperimentConfig& c, const std::string& v) {
            const double x = to_double(name, v);
            require(ok(x), name, what);
            c.sim.*field = x;
          }};
}

Key int_key(std::string name, int sim::SimConfig::*field, int min) {
  return {name, [field](const ExperimentConfig& c) { return std::to_string(c.sim.*field); },
          [name, field, min](ExperimentConfig& c, const std::string& v) {
            const int x = to_int(name, v);
            if (x < min) throw ConfigError(name + ": must be >= " + std::to_string(min));
            c.sim.*field = x;
          }};
}

bool positive(double x) { return x > 0.0; }
bool non_negative(double x) { return x >= 0.0; }
bool unit_interval(double x) { return x >= 0.0 && x <= 1.0; }
bool open_unit_upper(double x) { return x > 0.0 && x <= 1.0; }

const std::vector<Key>& keys() {
  static const std::vector<Key> table = [] {
    using sim::SimConfig;
    std::vector<Key> k;
    k.push_back(int_key("n_vehicles", &SimConfig::n_vehicles, 2));
    k.push_back(int_key("n_cbr_pairs", &SimConfig::n_cbr_pairs, 0));
    k.push_back(real_key("cbr_rate", &SimConfig::cbr_rate, positive, "must be > 0"));
    k.push_back(real_key("sim_duration", &SimConfig::sim_duration, positive, "must be > 0"));
    k.push_back(real_key("beacon_interval", &SimConfig::beacon_interval, positive, "must be > 0"));
    k.push_back(real_key("neighbor_timeout", &SimConfig::neighbor_timeout, positive, "must be > 0"));
    k.push_back(real_key("data_rate", &SimConfig::data_rate, positive, "must be > 0"));
    k.push_back(int_key("packet_size", &SimConfig::packet_size, 1));
    k.push_back(int_key("max_queue", &SimConfig::max_queue, 1));
    k.push_back(real_key("t_m", &SimConfig::t_m, positive, "must be > 0"));
    k.push_back(real_key("p0", &SimConfig::p0, unit_interval, "must lie in [0, 1]"));
    k.push_back(int_key("hop_limit", &SimConfig::hop_limit, 1));
    k.push_back(real_key("ttl", &SimConfig::ttl, positive, "must be > 0"));
    k.push_back(real_key("mobility_step", &SimConfig::mobility_step, positive, "must be > 0"));
    k.push_back({"carry_on_void", [](const ExperimentConfig& c) { return std::string(c.sim.carry_on_void ? "1" : "0"); },
                 [](ExperimentConfig& c, const std::string& v) {
                   if (v != "0" && v != "1") throw ConfigError("carry_on_void: expected 0 or 1, got '" + v + "'");
                   c.sim.carry_on_void = v == "1";
                 }});
    k.push_back(real_key("void_retry", &SimConfig::void_retry, positive, "must be > 0"));
    k.push_back(real_key("interferer_activity", &SimConfig::interferer_activity, unit_interval, "must lie in [0, 1]"));
    k.push_back(real_key("p_cut", &SimConfig::p_cut, unit_interval, "must lie in [0, 1]"));
    k.push_back(int_key("exor_k_max", &SimConfig::exor_k_max, 1));
    k.push_back({"seed", [](const ExperimentConfig& c) { return std::to_string(c.sim.seed); },
                 [](ExperimentConfig& c, const std::string& v) {
                   const long long x = to_integer("seed", v);
                   require(x >= 0, "seed", "must be >= 0");
                   c.sim.seed = static_cast<std::uint64_t>(x);
                 }});

    // Mobility
    const auto mob_real = [](std::string name, double mobility::MobilityConfig::*field, double scale, bool (*ok)(double),
                             const char* what) {
      return Key{name, [field, scale](const ExperimentConfig& c) { return format_number(c.sim.mobility.*field * scale); },
                 [name, field, scale, ok, what](ExperimentConfig& c, const std::string& v) {
                   const double x = to_double(name, v);
                   require(ok(x), name, what);
                   c.sim.mobility.*field = x / scale;
                 }};
    };
    k.push_back(mob_real("v_min_kmh", &mobility::MobilityConfig::v_min, 3.6, non_negative, "must be >= 0"));
    k.push_back(mob_real("v_max_kmh", &mobility::MobilityConfig::v_max, 3.6, non_negative, "must be >= 0"));
    k.push_back(mob_real("sigma", &mobility::MobilityConfig::default_sigma, 1.0, non_negative, "must be >= 0"));
    k.push_back(mob_real("range", &mobility::MobilityConfig::range, 1.0, positive, "must be > 0"));
    k.push_back(mob_real("area_width", &mobility::MobilityConfig::width, 1.0, positive, "must be > 0"));
    k.push_back(mob_real("area_height", &mobility::MobilityConfig::height, 1.0, positive, "must be > 0"));
    k.push_back(mob_real("block_size", &mobility::MobilityConfig::block_size, 1.0, positive, "must be > 0"));
    k.push_back(mob_real("light_period", &mobility::MobilityConfig::light_period, 1.0, positive, "must be > 0"));

    // SINR
    k.push_back({"alpha", [](const ExperimentConfig& c) { return format_number(c.sim.sinr.alpha); },
                 [](ExperimentConfig& c, const std::string& v) {
                   const double x = to_double("alpha", v);
                   require(x >= 2.0 && x <= 5.0, "alpha", "must lie in [2, 5]");
                   c.sim.sinr.alpha = x;
                 }});
    k.push_back({"beta", [](const ExperimentConfig& c) { return format_number(c.sim.sinr.beta); },
                 [](ExperimentConfig& c, const std::string& v) {
                   const double x = to_double("beta", v);
                   require(x > 0.0, "beta", "must be > 0");
                   c.sim.sinr.beta = x;
                 }});
    k.push_back({"noise",
                 [](const ExperimentConfig& c) { return c.sim.noise_auto ? std::string("auto") : format_number(c.sim.sinr.noise); },
                 [](ExperimentConfig& c, const std::string& v) {
                   if (v == "auto") {
                     c.sim.noise_auto = true;
                     c.sim.sinr.noise = 0.0;
                     return;
                   }
                   const double x = to_double("noise", v);
                   require(x >= 0.0, "noise", "must be >= 0 or auto");
                   c.sim.noise_auto = false;
                   c.sim.sinr.noise = x;
                 }});
    k.push_back({"mc_samples", [](const ExperimentConfig& c) { return std::to_string(c.sim.sinr.mc_samples); },
                 [](ExperimentConfig& c, const std::string& v) {
                   const int x = to_int("mc_samples", v);
                   require(x >= 1, "mc_samples", "must be >= 1");
                   c.sim.sinr.mc_samples = x;
                 }});

    // Routing
    k.push_back({"p_threshold", [](const ExperimentConfig& c) { return format_number(c.sim.routing.p_opp_threshold); },
                 [](ExperimentConfig& c, const std::string& v) {
                   const double x = to_double("p_threshold", v);
                   require(open_unit_upper(x), "p_threshold", "must lie in (0, 1]");
                   c.sim.routing.p_opp_threshold = x;
                 }});
    k.push_back({"timer_T", [](const ExperimentConfig& c) { return format_number(c.sim.routing.timer_T); },
                 [](ExperimentConfig& c, const std::string& v) {
                   const double x = to_double("timer_T", v);
                   require(x > 0.0, "timer_T", "must be > 0");
                   c.sim.routing.timer_T = x;
                 }});
    k.push_back({"algorithm", [](const ExperimentConfig& c) { return std::string(sim::to_string(c.sim.algorithm)); },
                 [](ExperimentConfig& c, const std::string& v) {
                   const auto a = sim::parse_algorithm(v);
                   if (!a) throw ConfigError("algorithm: expected pro, greedy or exor, got '" + v + "'");
                   c.sim.algorithm = *a;
                 }});

    // Sweep
    k.push_back({"sweep", [](const ExperimentConfig& c) { return std::string(to_string(c.sweep.param)); },
                 [](ExperimentConfig& c, const std::string& v) {
                   const auto p = parse_sweep_param(v);
                   if (!p) throw ConfigError("sweep: expected none, density or traffic, got '" + v + "'");
                   c.sweep.param = *p;
                 }});
    k.push_back({"sweep_values",
                 [](const ExperimentConfig& c) {
                   std::string s;
                   for (int v : c.sweep.values) s += (s.empty() ? "" : ",") + std::to_string(v);
                   return s;
                 },
                 [](ExperimentConfig& c, const std::string& v) {
                   c.sweep.values.clear();
                   for (const auto& item : split_list(v)) c.sweep.values.push_back(to_int("sweep_values", item));
                 }});
    k.push_back({"replications", [](const ExperimentConfig& c) { return std::to_string(c.sweep.replications); },
                 [](ExperimentConfig& c, const std::string& v) {
                   const int x = to_int("replications", v);
                   require(x >= 1, "replications", "must be >= 1");
                   c.sweep.replications = x;
                 }});
    k.push_back({"algorithms",
                 [](const ExperimentConfig& c) {
                   std::string s;
                   for (auto a : c.sweep.algorithms) s += (s.empty() ? "" : ",") + std::string(sim::to_string(a));
                   return s;
                 },
                 [](ExperimentConfig& c, const std::string& v) {
                   c.sweep.algorithms.clear();
                   for (const auto& item : split_list(v)) {
                     const auto a = sim::parse_algorithm(item);
                     if (!a) throw ConfigError("algorithms: unknown algorithm '" + item + "'");
                     c.sweep.algorithms.push_back(*a);
                   }
                 }});
    return k;
  }();
  return table;
}

void validate_all(const ExperimentConfig& cfg) {
  const auto& s = cfg.sim;
  if (s.n_cbr_pairs > s.n_vehicles) throw ConfigError("n_cbr_pairs: must be <= n_vehicles");
  if (s.mobility.v_max < s.mobility.v_min) throw ConfigError("v_max_kmh: must be >= v_min_kmh");
  if (s.tx_time() > s.t_m) throw ConfigError("t_m: a packet (packet_size * 8 / data_rate) must fit in one slot");
  cfg.sweep.validate();
  for (int v : cfg.sweep.values) {
    if (cfg.sweep.param == SweepParam::n_vehicles && (v < 2 || s.n_cbr_pairs > v)) {
      throw ConfigError("sweep_values: n_vehicles " + std::to_string(v) + " cannot host n_cbr_pairs");
    }
    if (cfg.sweep.param == SweepParam::n_cbr_pairs && (v < 0 || v > s.n_vehicles)) {
      throw ConfigError("sweep_values: n_cbr_pairs " + std::to_string(v) +  " exceeds n_vehicles");
    }
  }
  try {
    s.validate();
    (void)mobility::RoadGraph::manhattan(s.mobility.width, s.mobility.height, s.mobility.block_size);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

}  // namespace

ExperimentConfig parse_config_text(std::string_view text) {
  ExperimentConfig cfg;
  std::map<std::string, const Key*> by_name;
  for (const auto& k : keys()) by_name.emplace(k.name, &k);

  std::set<std::string> seen;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value', got '" + line + "'");
    }
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": missing key");
    const auto it = by_name.find(key);
    if (it == by_name.end()) throw ConfigError(key + ": unknown key (line " + std::to_string(lineno) + ")");
    if (!seen.insert(key).second) throw ConfigError(key + ": repeated (line " + std::to_string(lineno) + ")");
    it->second->set(cfg, value);
  }
  if (cfg.sweep.param != SweepParam::none && !seen.contains("sweep_values")) {
    cfg.sweep.values = default_sweep_values(cfg.sweep.param);
  }
  validate_all(cfg);
  return cfg;
}

ExperimentConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

std::string serialize(const ExperimentConfig& cfg) {
  std::string out;
  for (const auto& k : keys()) out += k.name + " = " + k.get(cfg) + "\n";
  return out;
}

// ---------------------------------------------------------------------------
// Sweeps

int worker_threads() {
  int n = static_cast<int>(std::thread::hardware_concurrency());
  if (n < 1) n = 1;
  if (const char* env = std::getenv("PRO_SIM_THREADS")) {
    char* end = nullptr;
    const long cap = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && cap >= 1) n = std::min(n, static_cast<int>(cap));
  }
  return n;
}

namespace {

std::string scenario_id(SweepParam param, int value, int replication) {
  if (param == SweepParam::none) return "single-r" + std::to_string(replication);
  return std::string(to_string(param)) + "=" + std::to_string(value) + "-r" + std::to_string(replication);
}

}  // namespace

SweepResult run_sweep(const ExperimentConfig& cfg, const SweepOptions& options) {
  validate_all(cfg);
  const auto& spec = cfg.sweep;
  const std::vector<int> values =
      spec.param == SweepParam::none ? std::vector<int>{cfg.sim.n_vehicles} : spec.values;

  std::vector<SweepRow> jobs;
  for (auto algo : spec.algorithms) {
    for (int v : values) {
      for (int r = 0; r < spec.replications; ++r) jobs.push_back({algo, v, r, {}, std::nullopt});
    }
  }

  std::vector<char> done(jobs.size(), 0);
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::mutex progress_mu;

  const auto work = [&] {
    for (;;) {
      if (failed.load()) return;
      const std::size_t i = next.fetch_add(1);
      if (i >= jobs.size()) return;
      SweepRow& row = jobs[i];
      sim::SimConfig sc = cfg.sim;
      sc.algorithm = row.algorithm;
      sc.seed = cfg.sim.seed + static_cast<std::uint64_t>(row.replication);
      if (spec.param == SweepParam::n_vehicles) sc.n_vehicles = row.value;
      if (spec.param == SweepParam::n_cbr_pairs) sc.n_cbr_pairs = row.value;
      row.metrics.algorithm = std::string(sim::to_string(row.algorithm));
      row.metrics.seed = sc.seed;
      row.metrics.n_vehicles = sc.n_vehicles;
      row.metrics.n_cbr_pairs = sc.n_cbr_pairs;
      try {
        sim::RunOptions run_opts;
        std::ofstream trace;
        if (options.trace_dir) {
          const auto path = *options.trace_dir / ("trace-" + row.metrics.algorithm + "-" +
                                                  scenario_id(spec.param, row.value, row.replication) + ".txt");
          trace.open(path);
          if (!trace) throw std::runtime_error("cannot open trace file " + path.string());
          run_opts.trace = &trace;
        }
        row.metrics = sim::run_simulation(sc, run_opts);
      } catch (const std::exception& e) {
        row.error = e.what();
        failed.store(true);
      }
      row.metrics.scenario_id = scenario_id(spec.param, row.value, row.replication);
      done[i] = 1;
      if (options.progress) {
        const std::lock_guard lock(progress_mu);
        options.progress(row);
      }
    }
  };

  int threads = options.threads > 0 ? options.threads : worker_threads();
  threads = std::max(1, std::min<int>(threads, static_cast<int>(jobs.size())));
  if (threads == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }

  SweepResult result;
  result.ok = !failed.load();
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    if (done[i]) result.rows.push_back(std::move(jobs[i]));
  }
  return result;
}

std::string csv_header() {
  return "scenario_id,algorithm,seed,n_vehicles,n_cbr_pairs,generated,delivered,pdr,avg_delay_s,throughput,"
         "drop_queue,drop_sinr,drop_void,drop_limit";
}

std::string csv_row(const SweepRow& row) {
  const auto& m = row.metrics;
  std::ostringstream out;
  out << m.scenario_id << ',' << m.algorithm << ',' << m.seed << ',' << m.n_vehicles << ',' << m.n_cbr_pairs << ',';
  if (row.error) {
    std::string msg = *row.error;
    std::replace(msg.begin(), msg.end(), ',', ';');
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    out << "NA,NA,ERROR: " << msg << ",NA,NA,NA,NA,NA,NA";
    return out.str();
  }
  const auto drop = [&](sim::DropCause c) { return m.drops[static_cast<std::size_t>(c)]; };
  out << m.generated << ',' << m.delivered << ',' << format_number(m.pdr) << ',' << format_number(m.avg_delay) << ','
      << format_number(m.throughput) << ',' << drop(sim::DropCause::queue_overflow) << ','
      << drop(sim::DropCause::sinr_fail) << ',' << drop(sim::DropCause::void_route) << ','
      << drop(sim::DropCause::hop_limit) + drop(sim::DropCause::ttl);
  return out.str();
}

void write_csv(std::ostream& out, const SweepResult& result) {
  out << csv_header() << '\n';
  for (const auto& row : result.rows) out << csv_row(row) << '\n';
}

Stat summarize_values(std::span<const double> values) {
  Stat s;
  s.n = static_cast<int>(values.size());
  if (values.empty()) return s;
  double sum = 0.0;
  for (double v : values) sum += v;
  const double mean = sum / static_cast<double>(values.size());
  s.mean = mean;
  if (values.size() < 2) return s;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
  const boost::math::students_t dist(static_cast<double>(values.size() - 1));
  s.ci95 = boost::math::quantile(dist, 0.975) * sd / std::sqrt(static_cast<double>(values.size()));
  return s;
}

std::vector<SummaryRow> summarize(const SweepResult& result) {
  std::vector<SummaryRow> out;
  std::size_t i = 0;
  const auto& rows = result.rows;
  while (i < rows.size()) {
    std::size_t j = i;
    std::vector<double> pdr;
    std::vector<double> delay;
    std::vector<double> thr;
    int runs = 0;
    while (j < rows.size() && rows[j].algorithm == rows[i].algorithm && rows[j].value == rows[i].value) {
      if (!rows[j].error) {
        ++runs;
        if (rows[j].metrics.pdr) pdr.push_back(*rows[j].metrics.pdr);
        if (rows[j].metrics.avg_delay) delay.push_back(*rows[j].metrics.avg_delay);
        if (rows[j].metrics.throughput) thr.push_back(*rows[j].metrics.throughput);
      }
      ++j;
    }
    out.push_back({rows[i].algorithm, rows[i].value, runs, summarize_values(pdr), summarize_values(delay),
                   summarize_values(thr)});
    i = j;
  }
  return out;
}

std::string summary_header() {
  return "algorithm,swept,value,runs,pdr_mean,pdr_ci95,avg_delay_s_mean,avg_delay_s_ci95,throughput_mean,"
         "throughput_ci95";
}

void write_summary(std::ostream& out, const ExperimentConfig& cfg, std::span<const SummaryRow> rows) {
  out << summary_header() << '\n';
  for (const auto& r : rows) {
    out << sim::to_string(r.algorithm) << ',' << to_string(cfg.sweep.param) << ',' << r.value << ',' << r.runs << ','
        << format_number(r.pdr.mean) << ',' << format_number(r.pdr.ci95) << ',' << format_number(r.delay.mean) << ','
        << format_number(r.delay.ci95) << ',' << format_number(r.throughput.mean) << ','
        << format_number(r.throughput.ci95) << '\n';
  }
}

}  // namespace pro::experiment

#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <iosfwd>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "pro/mobility.hpp"
#include "pro/routing.hpp"
#include "pro/sinr.hpp"

namespace pro::sim {

using mobility::VehicleId;
using routing::PacketId;

enum class Algorithm { pro, greedy, exor };

std::string_view to_string(Algorithm algo);
std::optional<Algorithm> parse_algorithm(std::string_view text);

struct Packet {
  PacketId id{0};
  int flow{0};
  VehicleId src{0};
  VehicleId dest{0};
  int size_bytes{512};
  double created_at{0.0};
  int hop_count{0};
  std::vector<VehicleId> relays;  // stamped per hop, by priority
};

enum class DropCause { queue_overflow, sinr_fail, void_route, hop_limit, ttl };
inline constexpr std::size_t kDropCauses = 5;
std::string_view to_string(DropCause cause);

enum class EnqueueResult { accepted, dropped };

/// Bounded FIFO. A held entry only becomes eligible for transmission once
/// its ready time has passed and it is no longer waiting on a relay timer.
class DropTailQueue {
 public:
  struct Entry {
    Packet packet;
    double ready_at{0.0};
    bool armed{false};      // waiting for the forwarding timer
    bool void_held{false};  // no next hop last time; retried later
  };

  explicit DropTailQueue(int capacity);

  EnqueueResult push(Entry entry);
  int size() const { return static_cast<int>(entries_.size()); }
  int capacity() const { return capacity_; }
  bool empty() const { return entries_.empty(); }

  /// Index of the first eligible entry at `now`, if any.
  std::optional<std::size_t> first_ready(double now) const;
  Entry& at(std::size_t index) { return entries_.at(index); }
  Entry take(std::size_t index);
  Entry* find(PacketId packet);
  bool erase_packet(PacketId packet);

 private:
  int capacity_;
  std::deque<Entry> entries_;
};

enum class EventKind : std::uint8_t {
  beacon,
  packet_generate,
  transmit_start,
  receive_decide,
  timer_fire,
  mobility_step,
  traffic_light
};
std::string_view to_string(EventKind kind);

struct SimEvent {
  double time{0.0};
  std::uint64_t seq{0};
  EventKind kind{EventKind::beacon};
  int node{-1};
  PacketId packet{-1};
};

struct SimConfig {
  int n_vehicles{100};
  int n_cbr_pairs{20};
  double cbr_rate{1.0};        // packets/s per pair
  double sim_duration{300.0};  // s
  double beacon_interval{1.0};
  double neighbor_timeout{2.5};  // table entries older than this are ignored
  double data_rate{2e6};         // bit/s
  int packet_size{512};          // bytes
  int max_queue{50};             // M
  double t_m{0.01};              // MAC slot, s
  double p0{0.02};
  int hop_limit{64};
  double ttl{30.0};
  double mobility_step{0.1};
  bool carry_on_void{false};    // hold a packet with no next hop instead of dropping it
  double void_retry{1.0};       // s between route attempts for a held packet
  double interferer_activity{1.0};  // scales each interferer's inclusion probability
  double p_cut{0.01};
  int exor_k_max{4};
  std::uint64_t seed{1};
  Algorithm algorithm{Algorithm::pro};
  bool noise_auto{true};  // noise such that a lone sender at range R sits at beta
  mobility::MobilityConfig mobility;
  sinr::SinrConfig sinr{3.0, 4.0, 0.0, 200, 1};
  routing::RoutingConfig routing;

  void validate() const;
  double effective_noise() const;
  double tx_time() const { return packet_size * 8.0 / data_rate; }
  bool operator==(const SimConfig&) const = default;
};

using DropCounts = std::array<std::int64_t, kDropCauses>;

struct RunLog {
  std::int64_t generated{0};
  std::int64_t delivered{0};
  std::int64_t transmissions{0};
  std::int64_t in_flight{0};
  double delay_sum{0.0};
  DropCounts drops{};
};

struct MetricsRecord {
  std::string scenario_id{"single"};
  std::string algorithm;
  std::uint64_t seed{0};
  int n_vehicles{0};
  int n_cbr_pairs{0};
  std::int64_t generated{0};
  std::int64_t delivered{0};
  std::int64_t transmissions{0};
  std::int64_t in_flight{0};
  DropCounts drops{};
  std::optional<double> pdr;        // undefined when nothing was generated
  std::optional<double> avg_delay;  // delivered packets only
  std::optional<double> throughput;
  std::uint64_t trace_hash{0};

  std::int64_t total_drops() const;
  bool conserved() const { return generated == delivered + total_drops() + in_flight; }
};

MetricsRecord collect_metrics(const RunLog& log);

/// Fixed initial conditions, mainly for hand-traced scenarios.
struct ScenarioOverrides {
  std::optional<std::vector<mobility::VehicleState>> vehicles;
  std::optional<std::vector<std::pair<VehicleId, VehicleId>>> flows;
  std::optional<double> flow_start;  // first packet time for every flow
};

struct RunOptions {
  std::ostream* trace{nullptr};
  ScenarioOverrides overrides;
};

/// One deterministic run. Throws std::invalid_argument on a bad config before
/// simulating anything.
MetricsRecord run_simulation(const SimConfig& cfg, const RunOptions& options = {});

struct Transmission {
  int sender{0};  // index into the snapshot
};

/// Per transmission, the snapshot indices that decode it: within range of
/// the sender, not transmitting themselves, and with SINR >= beta against
/// every other concurrent transmission.
std::vector<std::vector<int>> reception_decision(std::span<const Transmission> batch,
                                                 std::span<const mobility::VehicleState> snapshot, double range,
                                                 const sinr::SinrConfig& cfg);

/// Slotted contention: contenders are visited in uniformly random order and
/// each wins unless an earlier winner sits within carrier-sense range, so a
/// neighbourhood of mutually audible contenders has exactly one uniformly
/// chosen transmitter.
std::vector<int> mac_schedule(std::span<const int> contenders, std::span<const mobility::VehicleState> snapshot,
                              double sense_range, std::mt19937_64& rng);

}  // namespace pro::sim

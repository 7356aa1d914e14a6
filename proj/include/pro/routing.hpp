#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "pro/mobility.hpp"

namespace pro::routing {

using mobility::VehicleId;
using PacketId = std::int64_t;

/// What a node knows about a neighbour from its most recent beacon.
struct NeighborInfo {
  mobility::VehicleState state;
  double beacon_time{0.0};
  int queue_len{0};
};

struct LinkForecast {
  VehicleId relay_id{0};
  double p_link{1.0};
  double p_sinr{1.0};
  double p_queue{1.0};
};

struct CandidateEntry {
  VehicleId relay_id{0};
  double utility{0.0};
  int priority{1};
  double p_deliver{1.0};
};

struct RoutingConfig {
  double p_opp_threshold{0.9};  // P*_opp
  double timer_T{0.045};        // s
  double utility_tie_epsilon{1e-12};

  void validate() const;
  bool operator==(const RoutingConfig&) const = default;
};

/// Variances and the ranked candidate list produced by compute_utilities.
struct UtilityResult {
  double v_sinr{0.0};
  double v_queue{0.0};
  bool fallback_mean{false};  // both variances zero: utility is the plain mean
  std::vector<CandidateEntry> entries;  // by priority
};

/// Neighbours strictly closer to the destination than the sender that are
/// not moving away from it (velocity projected on the vehicle->destination
/// axis >= 0). The destination itself always qualifies.
std::vector<VehicleId> build_candidate_set(Vec2 sender_pos, const mobility::VehicleState& dest,
                                           std::span<const NeighborInfo> neighbors);

/// Sample variance (n - 1 divisor); 0 for fewer than two values.
double sample_variance(std::span<const double> values);

/// Variance-weighted utilities U = v_sinr * p_sinr + v_q * p_queue, ranked by
/// descending utility; utilities within the tie epsilon go to the lower id.
/// p_deliver is p_sinr * p_queue.
UtilityResult compute_utilities(std::span<const LinkForecast> forecasts, const RoutingConfig& cfg = {});

struct Resolution {
  double ratio{1.0};
  bool degenerate{false};  // one or both variances are zero
};

/// max(v_sinr, v_q) / min(v_sinr, v_q).
Resolution resolution_ratio(double v_sinr, double v_q);

/// 1 - prod(1 - P_i) over the given prefix.
double opportunistic_delivery(std::span<const CandidateEntry> entries);

/// Shortest priority prefix reaching P*; every entry if none does.
std::vector<CandidateEntry> optimize_candidate_set(std::span<const CandidateEntry> entries, const RoutingConfig& cfg);

/// (i - 1) T
double forwarding_timer(int priority, const RoutingConfig& cfg);

double delivery_probability(const LinkForecast& forecast);

// ---------------------------------------------------------------------------
// Per-node forwarding state machine.

enum class ForwardStatus { armed, forwarded, cancelled, dropped };

struct ForwardingState {
  PacketId packet{0};
  int priority{1};
  double deadline{0.0};
  ForwardStatus status{ForwardStatus::armed};
  std::vector<VehicleId> relay_list;  // relay_list[i - 1] has priority i
};

struct Received {
  PacketId packet;
  std::vector<VehicleId> relay_list;  // by priority
  double now;
};
struct TimerFired {
  PacketId packet;
  double now;
};
struct OverheardForward {
  PacketId packet;
  VehicleId forwarder;
  double now;
};
using PacketEvent = std::variant<Received, TimerFired, OverheardForward>;

enum class ActionKind {
  none,
  arm_timer,  // hold the packet, fire at `at`
  forward,    // transmit now, running selection afresh at this node
  drop,       // not a listed relay
  cancel      // a higher-priority relay forwarded first: purge the packet
};

struct ForwardAction {
  ActionKind kind{ActionKind::none};
  double at{0.0};
};

class ForwardingAgent {
 public:
  ForwardingAgent(VehicleId self, RoutingConfig cfg) : self_(self), cfg_(cfg) {}

  ForwardAction on_packet_event(const PacketEvent& event);

  const ForwardingState* state(PacketId packet) const;
  /// Marks a held packet as lost locally (queue overflow, expiry).
  void mark_dropped(PacketId packet);
  void forget(PacketId packet) { states_.erase(packet); }
  /// Records that this node sent the packet itself (e.g. as its source) so
  /// later copies are treated as duplicates.
  void note_transmitted(PacketId packet);
  VehicleId self() const { return self_; }

 private:
  ForwardAction on(const Received& e);
  ForwardAction on(const TimerFired& e);
  ForwardAction on(const OverheardForward& e);

  VehicleId self_;
  RoutingConfig cfg_;
  std::map<PacketId, ForwardingState> states_;
};

}  // namespace pro::routing

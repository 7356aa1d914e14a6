#include "pro/routing.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace pro::routing {

void RoutingConfig::validate() const {
  if (!(p_opp_threshold > 0.0 && p_opp_threshold <= 1.0)) throw std::invalid_argument("routing: P* must lie in (0, 1]");
  if (!(timer_T > 0.0)) throw std::invalid_argument("routing: timer_T must be > 0");
  if (!(utility_tie_epsilon >= 0.0)) throw std::invalid_argument("routing: tie epsilon must be >= 0");
}

std::vector<VehicleId> build_candidate_set(Vec2 sender_pos, const mobility::VehicleState& dest,
                                           std::span<const NeighborInfo> neighbors) {
  const double own = distance(sender_pos, dest.position);
  std::vector<VehicleId> out;
  for (const auto& n : neighbors) {
    if (n.state.id == dest.id) {
      out.push_back(n.state.id);
      continue;
    }
    const Vec2 to_dest = dest.position - n.state.position;
    const double d = norm(to_dest);
    if (!(d < own)) continue;
    // Rate of decrease of the distance to the destination.
    const double closing = d > 0.0 ? dot(n.state.velocity(), to_dest) / d : 0.0;
    if (closing >= 0.0) out.push_back(n.state.id);
  }
  std::sort(out.begin(), out.end());
  return out;
}

double sample_variance(std::span<const double> values) {
  const std::size_t n = values.size();
  if (n < 2) return 0.0;
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(n);
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return ss / static_cast<double>(n - 1);
}

UtilityResult compute_utilities(std::span<const LinkForecast> forecasts, const RoutingConfig& cfg) {
  if (forecasts.empty()) throw std::invalid_argument("compute_utilities: empty candidate list");
  std::vector<double> sinr;
  std::vector<double> queue;
  for (const auto& f : forecasts) {
    sinr.push_back(f.p_sinr);
    queue.push_back(f.p_queue);
  }
  UtilityResult out;
  out.v_sinr = sample_variance(sinr);
  out.v_queue = sample_variance(queue);
  out.fallback_mean = out.v_sinr == 0.0 && out.v_queue == 0.0;

  std::vector<CandidateEntry> pool;
  for (const auto& f : forecasts) {
    const double u = out.fallback_mean ? 0.5 * (f.p_sinr + f.p_queue) : out.v_sinr * f.p_sinr + out.v_queue * f.p_queue;
    pool.push_back({f.relay_id, u, 0, delivery_probability(f)});
  }
  // Selection by repeated max: near-equal utilities make a sort comparator
  // non-transitive, so ties are resolved explicitly by id.
  while (!pool.empty()) {
    const double best =
        std::max_element(pool.begin(), pool.end(), [](const auto& a, const auto& b) { return a.utility < b.utility; })
            ->utility;
    auto pick = pool.end();
    for (auto it = pool.begin(); it != pool.end(); ++it) {
      if (best - it->utility <= cfg.utility_tie_epsilon && (pick == pool.end() || it->relay_id < pick->relay_id)) {
        pick = it;
      }
    }
    pick->priority = static_cast<int>(out.entries.size()) + 1;
    out.entries.push_back(*pick);
    pool.erase(pick);
  }
  return out;
}

Resolution resolution_ratio(double v_sinr, double v_q) {
  if (v_sinr == v_q) return {1.0, v_sinr == 0.0};
  const double hi = std::max(v_sinr, v_q);
  const double lo = std::min(v_sinr, v_q);
  if (lo <= 0.0) return {HUGE_VAL, true};
  return {hi / lo, false};
}

double opportunistic_delivery(std::span<const CandidateEntry> entries) {
  double miss = 1.0;
  for (const auto& e : entries) miss *= 1.0 - e.p_deliver;
  return 1.0 - miss;
}

std::vector<CandidateEntry> optimize_candidate_set(std::span<const CandidateEntry> entries, const RoutingConfig& cfg) {
  double miss = 1.0;
  for (std::size_t n = 0; n < entries.size(); ++n) {
    miss *= 1.0 - entries[n].p_deliver;
    if (1.0 - miss >= cfg.p_opp_threshold) return {entries.begin(), entries.begin() + static_cast<std::ptrdiff_t>(n + 1)};
  }
  return {entries.begin(), entries.end()};
}

double forwarding_timer(int priority, const RoutingConfig& cfg) {
  if (priority < 1) throw std::invalid_argument("forwarding_timer: priority starts at 1");
  return (priority - 1) * cfg.timer_T;
}

double delivery_probability(const LinkForecast& forecast) { return forecast.p_sinr * forecast.p_queue; }

ForwardAction ForwardingAgent::on_packet_event(const PacketEvent& event) {
  return std::visit([this](const auto& e) { return on(e); }, event);
}

const ForwardingState* ForwardingAgent::state(PacketId packet) const {
  const auto it = states_.find(packet);
  return it == states_.end() ? nullptr : &it->second;
}

void ForwardingAgent::mark_dropped(PacketId packet) {
  const auto it = states_.find(packet);
  if (it != states_.end()) it->second.status = ForwardStatus::dropped;
}

void ForwardingAgent::note_transmitted(PacketId packet) {
  auto& st = states_[packet];
  st.packet = packet;
  st.status = ForwardStatus::forwarded;
}

ForwardAction ForwardingAgent::on(const Received& e) {
  if (states_.contains(e.packet)) return {};  // duplicate: the earliest state stands
  const auto it = std::find(e.relay_list.begin(), e.relay_list.end(), self_);
  if (it == e.relay_list.end()) return {ActionKind::drop, e.now};
  ForwardingState st;
  st.packet = e.packet;
  st.priority = static_cast<int>(it - e.relay_list.begin()) + 1;
  st.deadline = e.now + forwarding_timer(st.priority, cfg_);
  st.relay_list = e.relay_list;
  states_.emplace(e.packet, st);
  return {ActionKind::arm_timer, st.deadline};
}

ForwardAction ForwardingAgent::on(const TimerFired& e) {
  const auto it = states_.find(e.packet);
  if (it == states_.end() || it->second.status != ForwardStatus::armed) return {};
  it->second.status = ForwardStatus::forwarded;
  return {ActionKind::forward, e.now};
}

ForwardAction ForwardingAgent::on(const OverheardForward& e) {
  const auto it = states_.find(e.packet);
  if (it == states_.end()) return {};
  ForwardingState& st = it->second;
  if (st.status != ForwardStatus::armed || !(e.now < st.deadline)) return {};
  const auto& list = st.relay_list;
  const auto pos = std::find(list.begin(), list.end(), e.forwarder);
  if (pos == list.end()) return {};
  const int forwarder_priority = static_cast<int>(pos - list.begin()) + 1;
  if (forwarder_priority >= st.priority) return {};
  st.status = ForwardStatus::cancelled;
  return {ActionKind::cancel, e.now};
}

}  // namespace pro::routing

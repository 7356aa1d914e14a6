#include "pro/sim.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <queue>
#include <stdexcept>

#include "pro/baseline.hpp"
#include "pro/queue_prediction.hpp"

namespace pro::sim {

std::string_view to_string(Algorithm algo) {
  switch (algo) {
    case Algorithm::pro:
      return "pro";
    case Algorithm::greedy:
      return "greedy";
    case Algorithm::exor:
      return "exor";
  }
  return "?";
}

std::optional<Algorithm> parse_algorithm(std::string_view text) {
  if (text == "pro") return Algorithm::pro;
  if (text == "greedy") return Algorithm::greedy;
  if (text == "exor") return Algorithm::exor;
  return std::nullopt;
}

std::string_view to_string(DropCause cause) {
  switch (cause) {
    case DropCause::queue_overflow:
      return "queue_overflow";
    case DropCause::sinr_fail:
      return "sinr_fail";
    case DropCause::void_route:
      return "void";
    case DropCause::hop_limit:
      return "hop_limit";
    case DropCause::ttl:
      return "ttl";
  }
  return "?";
}

std::string_view to_string(EventKind kind) {
  switch (kind) {
    case EventKind::beacon:
      return "beacon";
    case EventKind::packet_generate:
      return "packet_generate";
    case EventKind::transmit_start:
      return "transmit_start";
    case EventKind::receive_decide:
      return "receive_decide";
    case EventKind::timer_fire:
      return "timer_fire";
    case EventKind::mobility_step:
      return "mobility_step";
    case EventKind::traffic_light:
      return "traffic_light";
  }
  return "?";
}

// ---------------------------------------------------------------------------

DropTailQueue::DropTailQueue(int capacity) : capacity_(capacity) {
  if (capacity < 1) throw std::invalid_argument("DropTailQueue: capacity must be >= 1");
}

EnqueueResult DropTailQueue::push(Entry entry) {
  if (size() >= capacity_) return EnqueueResult::dropped;
  entries_.push_back(std::move(entry));
  return EnqueueResult::accepted;
}

std::optional<std::size_t> DropTailQueue::first_ready(double now) const {
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (!entries_[i].armed && entries_[i].ready_at <= now) return i;
  }
  return std::nullopt;
}

DropTailQueue::Entry DropTailQueue::take(std::size_t index) {
  Entry e = std::move(entries_.at(index));
  entries_.erase(entries_.begin() + static_cast<std::ptrdiff_t>(index));
  return e;
}

DropTailQueue::Entry* DropTailQueue::find(PacketId packet) {
  for (auto& e : entries_) {
    if (e.packet.id == packet) return &e;
  }
  return nullptr;
}

bool DropTailQueue::erase_packet(PacketId packet) {
  const auto it = std::find_if(entries_.begin(), entries_.end(), [&](const Entry& e) { return e.packet.id == packet; });
  if (it == entries_.end()) return false;
  entries_.erase(it);
  return true;
}

// ---------------------------------------------------------------------------

void SimConfig::validate() const {
  if (n_vehicles < 2) throw std::invalid_argument("sim: n_vehicles must be >= 2");
  if (n_cbr_pairs < 0 || n_cbr_pairs > n_vehicles) {
    throw std::invalid_argument("sim: n_cbr_pairs must lie in [0, n_vehicles]");
  }
  if (!(cbr_rate > 0.0)) throw std::invalid_argument("sim: cbr_rate must be > 0");
  if (!(sim_duration > 0.0)) throw std::invalid_argument("sim: sim_duration must be > 0");
  if (!(beacon_interval > 0.0)) throw std::invalid_argument("sim: beacon_interval must be > 0");
  if (!(neighbor_timeout > 0.0)) throw std::invalid_argument("sim: neighbor_timeout must be > 0");
  if (!(data_rate > 0.0)) throw std::invalid_argument("sim: data_rate must be > 0");
  if (packet_size < 1) throw std::invalid_argument("sim: packet_size must be >= 1");
  if (max_queue < 1) throw std::invalid_argument("sim: max_queue must be >= 1");
  if (!(t_m > 0.0)) throw std::invalid_argument("sim: t_m must be > 0");
  if (!(tx_time() <= t_m)) throw std::invalid_argument("sim: a packet must fit in one slot (size * 8 / rate <= t_m)");
  if (!(p0 >= 0.0 && p0 <= 1.0)) throw std::invalid_argument("sim: p0 must lie in [0, 1]");
  if (hop_limit < 1) throw std::invalid_argument("sim: hop_limit must be >= 1");
  if (!(ttl > 0.0)) throw std::invalid_argument("sim: ttl must be > 0");
  if (!(mobility_step > 0.0)) throw std::invalid_argument("sim: mobility_step must be > 0");
  if (!(void_retry > 0.0)) throw std::invalid_argument("sim: void_retry must be > 0");
  if (!(interferer_activity >= 0.0 && interferer_activity <= 1.0)) {
    throw std::invalid_argument("sim: interferer_activity must lie in [0, 1]");
  }
  if (!(p_cut >= 0.0 && p_cut <= 1.0)) throw std::invalid_argument("sim: p_cut must lie in [0, 1]");
  if (exor_k_max < 1) throw std::invalid_argument("sim: exor_k_max must be >= 1");
  mobility.validate();
  sinr.validate();
  routing.validate();
}

double SimConfig::effective_noise() const {
  return noise_auto ? sinr::SinrConfig::noise_for_range(mobility.range, sinr.alpha, sinr.beta) : sinr.noise;
}

std::int64_t MetricsRecord::total_drops() const {
  std::int64_t n = 0;
  for (auto d : drops) n += d;
  return n;
}

MetricsRecord collect_metrics(const RunLog& log) {
  MetricsRecord m;
  m.generated = log.generated;
  m.delivered = log.delivered;
  m.transmissions = log.transmissions;
  m.in_flight = log.in_flight;
  m.drops = log.drops;
  if (log.generated > 0) m.pdr = static_cast<double>(log.delivered) / static_cast<double>(log.generated);
  if (log.delivered > 0) m.avg_delay = log.delay_sum / static_cast<double>(log.delivered);
  if (log.transmissions > 0) m.throughput = static_cast<double>(log.delivered) / static_cast<double>(log.transmissions);
  return m;
}

// ---------------------------------------------------------------------------

std::vector<std::vector<int>> reception_decision(std::span<const Transmission> batch,
                                                 std::span<const mobility::VehicleState> snapshot, double range,
                                                 const sinr::SinrConfig& cfg) {
  std::vector<char> transmitting(snapshot.size(), 0);
  for (const auto& t : batch) transmitting.at(static_cast<std::size_t>(t.sender)) = 1;

  std::vector<std::vector<int>> out(batch.size());
  std::vector<double> interferers;
  for (std::size_t t = 0; t < batch.size(); ++t) {
    const Vec2 tx = snapshot[static_cast<std::size_t>(batch[t].sender)].position;
    for (std::size_t l = 0; l < snapshot.size(); ++l) {
      if (transmitting[l]) continue;  // half duplex
      const Vec2 rx = snapshot[l].position;
      const double d = distance(tx, rx);
      if (d > range) continue;
      interferers.clear();
      for (std::size_t o = 0; o < batch.size(); ++o) {
        if (o == t) continue;
        const double di = distance(snapshot[static_cast<std::size_t>(batch[o].sender)].position, rx);
        interferers.push_back(std::max(di, kDistanceFloor));
      }
      if (sinr::instantaneous_sinr(std::max(d, kDistanceFloor), interferers, cfg) >= cfg.beta) {
        out[t].push_back(static_cast<int>(l));
      }
    }
  }
  return out;
}

std::vector<int> mac_schedule(std::span<const int> contenders, std::span<const mobility::VehicleState> snapshot,
                              double sense_range, std::mt19937_64& rng) {
  std::vector<int> order(contenders.begin(), contenders.end());
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<int> winners;
  const double r2 = sense_range * sense_range;
  for (int c : order) {
    const Vec2 p = snapshot[static_cast<std::size_t>(c)].position;
    const bool blocked = std::any_of(winners.begin(), winners.end(), [&](int w) {
      return distance_sq(p, snapshot[static_cast<std::size_t>(w)].position) <= r2;
    });
    if (!blocked) winners.push_back(c);
  }
  std::sort(winners.begin(), winners.end());
  return winners;
}

// ---------------------------------------------------------------------------

namespace {

constexpr std::uint64_t kFnvOffset = 14695981039346656037ull;
constexpr std::uint64_t kFnvPrime = 1099511628211ull;
constexpr int kCountSamples = 8;  // horizons averaged for the expected neighbour count

struct Later {
  bool operator()(const SimEvent& a, const SimEvent& b) const {
    return a.time != b.time ? a.time > b.time : a.seq > b.seq;
  }
};

// Copies of one packet live in queues or on the air. The packet is lost once
// the last copy goes without a delivery; the cause is the last loss seen.
struct PacketRecord {
  double created_at{0.0};
  int live{0};
  bool delivered{false};
  bool finalized{false};
  DropCause last_cause{DropCause::sinr_fail};
};

struct Node {
  DropTailQueue queue;
  std::vector<routing::NeighborInfo> table;  // sorted by id
  routing::ForwardingAgent agent;
};

struct Flow {
  VehicleId src;
  VehicleId dest;
};

struct OnAir {
  int sender;
  Packet packet;
};

class Simulator {
 public:
  Simulator(const SimConfig& cfg, const RunOptions& options);
  MetricsRecord run();

 private:
  void schedule(double t, EventKind kind, int node = -1, PacketId packet = -1);
  void record(const SimEvent& e);
  void dispatch(const SimEvent& e);

  void on_beacon(int node);
  void on_generate(int flow);
  void on_slot();
  void on_decide();
  void on_timer(int node, PacketId packet);

  std::optional<std::size_t> contender_entry(int node);
  std::vector<VehicleId> select_relays(int node, const Packet& packet);
  std::vector<VehicleId> select_pro(int node, const Packet& packet);
  bool enqueue(int node, DropTailQueue::Entry entry);
  void release(PacketId packet, std::optional<DropCause> cause);
  void prune(Node& n);

  SimConfig cfg_;
  sinr::SinrConfig sinr_;
  std::mt19937_64 rng_;
  mobility::World world_;
  std::vector<Node> nodes_;
  std::vector<Flow> flows_;
  std::vector<PacketRecord> packets_;
  std::priority_queue<SimEvent, std::vector<SimEvent>, Later> events_;
  std::uint64_t seq_{0};
  double now_{0.0};
  std::int64_t slot_{0};
  std::int64_t mobility_ticks_{0};
  std::int64_t light_ticks_{0};
  RunLog log_;
  std::vector<OnAir> air_;
  std::ostream* trace_;
  std::uint64_t hash_{kFnvOffset};
};

Simulator::Simulator(const SimConfig& cfg, const RunOptions& options) : cfg_(cfg), rng_(cfg.seed), trace_(options.trace) {
  const auto& ov = options.overrides;
  if (ov.vehicles) cfg_.n_vehicles = static_cast<int>(ov.vehicles->size());
  if (ov.flows) cfg_.n_cbr_pairs = static_cast<int>(ov.flows->size());
  cfg_.validate();
  sinr_ = cfg_.sinr;
  sinr_.noise = cfg_.effective_noise();

  const auto& mob = cfg_.mobility;
  world_.roads = mobility::RoadGraph::manhattan(mob.width, mob.height, mob.block_size);
  world_.roads.redraw_unblocked(rng_);
  if (ov.vehicles) {
    world_.vehicles = *ov.vehicles;
    for (std::size_t i = 0; i < world_.vehicles.size(); ++i) {
      if (world_.vehicles[i].id != static_cast<VehicleId>(i)) {
        throw std::invalid_argument("sim: override vehicles must have ids 0..n-1 in order");
      }
    }
  } else {
    world_.vehicles = mobility::place_uniform(world_.roads, cfg_.n_vehicles, mob, rng_);
  }
  nodes_.reserve(world_.vehicles.size());
  for (const auto& v : world_.vehicles) nodes_.push_back({DropTailQueue(cfg_.max_queue), {}, {v.id, cfg_.routing}});

  if (ov.flows) {
    for (const auto& [s, d] : *ov.flows) {
      if (s == d || s < 0 || d < 0 || s >= cfg_.n_vehicles || d >= cfg_.n_vehicles) {
        throw std::invalid_argument("sim: override flow endpoints must be distinct vehicle ids");
      }
      flows_.push_back({s, d});
    }
  } else {
    std::vector<VehicleId> perm(world_.vehicles.size());
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = static_cast<VehicleId>(i);
    std::shuffle(perm.begin(), perm.end(), rng_);
    // Distinct sources. Endpoints are disjoint while 2k <= n; beyond that a
    // vehicle may be the source of one flow and the sink of others.
    const int n = cfg_.n_vehicles;
    const int k = cfg_.n_cbr_pairs;
    const int offset = 2 * k <= n ? k : n / 2;
    for (int i = 0; i < k; ++i) {
      flows_.push_back({perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>((i + offset) % n)]});
    }
  }

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    schedule(unit(rng_) * cfg_.beacon_interval, EventKind::beacon, static_cast<int>(i));
  }
  for (std::size_t f = 0; f < flows_.size(); ++f) {
    // Flows start after one beacon round so tables are populated.
    const double start = ov.flow_start ? *ov.flow_start : cfg_.beacon_interval + unit(rng_) / cfg_.cbr_rate;
    schedule(start, EventKind::packet_generate, static_cast<int>(f));
  }
  schedule(cfg_.mobility_step, EventKind::mobility_step);
  schedule(mob.light_period, EventKind::traffic_light);
  schedule(0.0, EventKind::transmit_start);
}

void Simulator::schedule(double t, EventKind kind, int node, PacketId packet) {
  if (t > cfg_.sim_duration) return;
  events_.push({t, seq_++, kind, node, packet});
}

void Simulator::record(const SimEvent& e) {
  const auto mix = [this](std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      hash_ ^= (v >> (8 * i)) & 0xffu;
      hash_ *= kFnvPrime;
    }
  };
  mix(std::bit_cast<std::uint64_t>(e.time));
  mix(e.seq);
  mix(static_cast<std::uint64_t>(e.kind));
  mix(static_cast<std::uint64_t>(static_cast<std::int64_t>(e.node)));
  mix(static_cast<std::uint64_t>(e.packet));
  if (trace_ != nullptr) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g %llu ", e.time, static_cast<unsigned long long>(e.seq));
    *trace_ << buf << to_string(e.kind) << ' ' << e.node << ' ' << e.packet << '\n';
  }
}

MetricsRecord Simulator::run() {
  while (!events_.empty()) {
    const SimEvent e = events_.top();
    events_.pop();
    now_ = e.time;
    record(e);
    dispatch(e);
  }
  for (const auto& p : packets_) {
    if (!p.delivered && !p.finalized) ++log_.in_flight;
  }
  MetricsRecord m = collect_metrics(log_);
  m.algorithm = std::string(to_string(cfg_.algorithm));
  m.seed = cfg_.seed;
  m.n_vehicles = cfg_.n_vehicles;
  m.n_cbr_pairs = cfg_.n_cbr_pairs;
  m.trace_hash = hash_;
  return m;
}

void Simulator::dispatch(const SimEvent& e) {
  switch (e.kind) {
    case EventKind::beacon:
      on_beacon(e.node);
      break;
    case EventKind::packet_generate:
      on_generate(e.node);
      break;
    case EventKind::transmit_start:
      on_slot();
      break;
    case EventKind::receive_decide:
      on_decide();
      break;
    case EventKind::timer_fire:
      on_timer(e.node, e.packet);
      break;
    case EventKind::mobility_step:
      mobility::step_vehicles(world_, cfg_.mobility_step, cfg_.mobility, rng_);
      // Periodic times are index multiples so they tie exactly with slots.
      schedule(static_cast<double>(++mobility_ticks_ + 1) * cfg_.mobility_step, EventKind::mobility_step);
      break;
    case EventKind::traffic_light:
      world_.roads.redraw_unblocked(rng_);
      schedule(static_cast<double>(++light_ticks_ + 1) * cfg_.mobility.light_period, EventKind::traffic_light);
      break;
  }
}

void Simulator::on_beacon(int node) {
  const auto& me = world_.vehicles[static_cast<std::size_t>(node)];
  const routing::NeighborInfo info{me, now_, nodes_[static_cast<std::size_t>(node)].queue.size()};
  const double r2 = cfg_.mobility.range * cfg_.mobility.range;
  for (std::size_t j = 0; j < nodes_.size(); ++j) {
    if (static_cast<int>(j) == node || distance_sq(world_.vehicles[j].position, me.position) > r2) continue;
    auto& table = nodes_[j].table;
    auto it = std::lower_bound(table.begin(), table.end(), me.id,
                               [](const routing::NeighborInfo& n, VehicleId id) { return n.state.id < id; });
    if (it != table.end() && it->state.id == me.id) {
      *it = info;
    } else {
      table.insert(it, info);
    }
  }
  schedule(now_ + cfg_.beacon_interval, EventKind::beacon, node);
}

void Simulator::on_generate(int flow) {
  const Flow& f = flows_[static_cast<std::size_t>(flow)];
  Packet p;
  p.id = static_cast<PacketId>(packets_.size());
  p.flow = flow;
  p.src = f.src;
  p.dest = f.dest;
  p.size_bytes = cfg_.packet_size;
  p.created_at = now_;
  packets_.push_back({now_, 0, false, false, DropCause::queue_overflow});
  ++log_.generated;
  nodes_[static_cast<std::size_t>(f.src)].agent.note_transmitted(p.id);
  enqueue(f.src, {std::move(p), now_, false, false});
  schedule(now_ + 1.0 / cfg_.cbr_rate, EventKind::packet_generate, flow);
}

bool Simulator::enqueue(int node, DropTailQueue::Entry entry) {
  const PacketId id = entry.packet.id;
  auto& rec = packets_[static_cast<std::size_t>(id)];
  if (nodes_[static_cast<std::size_t>(node)].queue.push(std::move(entry)) == EnqueueResult::accepted) {
    ++rec.live;
    return true;
  }
  rec.last_cause = DropCause::queue_overflow;
  if (rec.live == 0 && !rec.delivered && !rec.finalized) {
    rec.finalized = true;
    ++log_.drops[static_cast<std::size_t>(DropCause::queue_overflow)];
  }
  return false;
}

void Simulator::release(PacketId packet, std::optional<DropCause> cause) {
  auto& rec = packets_[static_cast<std::size_t>(packet)];
  --rec.live;
  if (cause) rec.last_cause = *cause;
  if (rec.live == 0 && !rec.delivered && !rec.finalized) {
    rec.finalized = true;
    ++log_.drops[static_cast<std::size_t>(rec.last_cause)];
  }
}

void Simulator::prune(Node& n) {
  std::erase_if(n.table, [&](const routing::NeighborInfo& i) { return now_ - i.beacon_time > cfg_.neighbor_timeout; });
}

std::optional<std::size_t> Simulator::contender_entry(int node) {
  auto& n = nodes_[static_cast<std::size_t>(node)];
  while (auto idx = n.queue.first_ready(now_)) {
    const auto& e = n.queue.at(*idx);
    if (now_ - e.packet.created_at < cfg_.ttl) return idx;
    const bool held = e.void_held;
    const PacketId id = e.packet.id;
    n.queue.take(*idx);
    n.agent.mark_dropped(id);
    release(id, held ? DropCause::void_route : DropCause::ttl);
  }
  return std::nullopt;
}

void Simulator::on_slot() {
  std::vector<int> contenders;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (!nodes_[i].queue.empty() && contender_entry(static_cast<int>(i))) contenders.push_back(static_cast<int>(i));
  }
  if (!contenders.empty()) {
    const auto winners = mac_schedule(contenders, world_.vehicles, cfg_.mobility.range, rng_);
    for (int w : winners) {
      auto& n = nodes_[static_cast<std::size_t>(w)];
      const std::size_t idx = *n.queue.first_ready(now_);
      auto& entry = n.queue.at(idx);
      if (entry.packet.hop_count >= cfg_.hop_limit) {
        const PacketId id = entry.packet.id;
        n.queue.take(idx);
        n.agent.mark_dropped(id);
        release(id, DropCause::hop_limit);
        continue;
      }
      auto relays = select_relays(w, entry.packet);
      if (relays.empty()) {
        if (!cfg_.carry_on_void) {
          const PacketId id = entry.packet.id;
          n.queue.take(idx);
          n.agent.mark_dropped(id);
          release(id, DropCause::void_route);
          continue;
        }
        entry.void_held = true;
        entry.ready_at = now_ + cfg_.void_retry;
        continue;
      }
      Packet p = n.queue.take(idx).packet;
      ++p.hop_count;
      p.relays = std::move(relays);
      n.agent.note_transmitted(p.id);
      ++log_.transmissions;
      air_.push_back({w, std::move(p)});
    }
    if (!air_.empty()) schedule(now_ + cfg_.tx_time(), EventKind::receive_decide);
  }
  ++slot_;
  schedule(static_cast<double>(slot_) * cfg_.t_m, EventKind::transmit_start);
}

void Simulator::on_decide() {
  std::vector<Transmission> batch;
  batch.reserve(air_.size());
  for (const auto& a : air_) batch.push_back({a.sender});
  const auto decoded = reception_decision(batch, world_.vehicles, cfg_.mobility.range, sinr_);

  for (std::size_t t = 0; t < air_.size(); ++t) {
    const OnAir& a = air_[t];
    const Packet& p = a.packet;
    auto& rec = packets_[static_cast<std::size_t>(p.id)];
    bool kept = false;
    bool overflow = false;
    for (int l : decoded[t]) {
      if (l == p.dest) {
        if (!rec.delivered) {
          rec.delivered = true;
          ++log_.delivered;
          log_.delay_sum += now_ - rec.created_at;
        }
        kept = true;
        continue;
      }
      auto& n = nodes_[static_cast<std::size_t>(l)];
      const auto heard = n.agent.on_packet_event(routing::OverheardForward{p.id, a.sender, now_});
      if (heard.kind == routing::ActionKind::cancel && n.queue.erase_packet(p.id)) release(p.id, std::nullopt);

      if (std::find(p.relays.begin(), p.relays.end(), l) == p.relays.end()) continue;
      const auto act = n.agent.on_packet_event(routing::Received{p.id, p.relays, now_});
      if (act.kind != routing::ActionKind::arm_timer) continue;
      if (enqueue(l, {p, act.at, true, false})) {
        schedule(act.at, EventKind::timer_fire, l, p.id);
        kept = true;
      } else {
        n.agent.mark_dropped(p.id);
        overflow = true;
      }
    }
    release(p.id, kept ? std::nullopt : std::optional(overflow ? DropCause::queue_overflow : DropCause::sinr_fail));
  }
  air_.clear();
}

void Simulator::on_timer(int node, PacketId packet) {
  auto& n = nodes_[static_cast<std::size_t>(node)];
  const auto act = n.agent.on_packet_event(routing::TimerFired{packet, now_});
  if (act.kind != routing::ActionKind::forward) return;
  if (auto* e = n.queue.find(packet)) {
    e->armed = false;
    e->ready_at = now_;
  }
}

std::vector<VehicleId> Simulator::select_relays(int node, const Packet& packet) {
  auto& n = nodes_[static_cast<std::size_t>(node)];
  prune(n);
  if (n.table.empty()) return {};
  const auto& me = world_.vehicles[static_cast<std::size_t>(node)];
  const auto& dest = world_.vehicles[static_cast<std::size_t>(packet.dest)];
  switch (cfg_.algorithm) {
    case Algorithm::greedy: {
      const auto next = baseline::greedy_next_hop(me.position, dest.position, n.table);
      if (!next) return {};
      return {*next};
    }
    case Algorithm::exor: {
      std::vector<VehicleId> out;
      for (const auto& c : baseline::exor_candidates(me.position, dest.position, n.table, cfg_.exor_k_max)) {
        out.push_back(c.relay_id);
      }
      return out;
    }
    case Algorithm::pro:
      return select_pro(node, packet);
  }
  return {};
}

std::vector<VehicleId> Simulator::select_pro(int node, const Packet& packet) {
  auto& n = nodes_[static_cast<std::size_t>(node)];
  const auto& me = world_.vehicles[static_cast<std::size_t>(node)];
  const auto& dest = world_.vehicles[static_cast<std::size_t>(packet.dest)];
  const auto candidates = routing::build_candidate_set(me.position, dest, n.table);
  if (candidates.empty()) return {};

  std::vector<mobility::VehicleState> known;
  known.reserve(n.table.size() + 1);
  for (const auto& i : n.table) known.push_back(i.state);
  known.push_back(me);

  const double range = cfg_.mobility.range;
  const double k = static_cast<double>(candidates.size());
  std::vector<routing::LinkForecast> forecasts;
  for (VehicleId id : candidates) {
    const auto it = std::lower_bound(n.table.begin(), n.table.end(), id,
                                     [](const routing::NeighborInfo& x, VehicleId v) { return x.state.id < v; });
    const routing::NeighborInfo& info = *it;
    // Horizon: age of the neighbour's state plus the worst-case timer wait.
    const double dt = std::max(now_ - info.beacon_time + (k - 1.0) * cfg_.routing.timer_T, cfg_.t_m);

    routing::LinkForecast f;
    f.relay_id = id;
    f.p_link = mobility::link_probability(me, info.state, dt, range);
    const auto scene = sinr::effective_interference_scene(info.state, known, me, dt, cfg_.mobility, cfg_.p_cut,
                                                          cfg_.interferer_activity);
    std::mt19937_64 local(rng_());
    f.p_sinr = sinr::predict_sinr_probability_mc(scene, sinr_, local).probability;

    double count = 0.0;
    for (int s = 0; s < kCountSamples; ++s) {
      const double h = (s + 0.5) / kCountSamples * dt;
      for (const auto& v : known) {
        if (v.id != id) count += mobility::link_probability(v, info.state, h, range);
      }
    }
    pql::QueueConfig qc{cfg_.p0, cfg_.t_m, cfg_.max_queue, dt};
    pql::QueueForecastInput in{std::min(info.queue_len, cfg_.max_queue), {count / kCountSamples}};
    f.p_queue = pql::predict_queue_probability(in, qc);
    forecasts.push_back(f);
  }
  const auto ranked = routing::compute_utilities(forecasts, cfg_.routing);
  std::vector<VehicleId> out;
  for (const auto& e : routing::optimize_candidate_set(ranked.entries, cfg_.routing)) out.push_back(e.relay_id);
  return out;
}

}  // namespace

MetricsRecord run_simulation(const SimConfig& cfg, const RunOptions& options) {
  Simulator sim(cfg, options);
  return sim.run();
}

}  // namespace pro::sim

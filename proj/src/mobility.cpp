#include "pro/mobility.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <stdexcept>
#include <string>

namespace pro::mobility {

void MobilityConfig::validate() const {
  if (!(v_min >= 0.0) || !(v_max >= v_min)) throw std::invalid_argument("mobility: require 0 <= v_min <= v_max");
  if (!(range > 0.0)) throw std::invalid_argument("mobility: range must be > 0");
  if (!(default_sigma >= 0.0)) throw std::invalid_argument("mobility: sigma must be >= 0");
  if (!(width > 0.0) || !(height > 0.0)) throw std::invalid_argument("mobility: area must be positive");
  if (!(block_size > 0.0)) throw std::invalid_argument("mobility: block_size must be > 0");
  if (!(light_period > 0.0)) throw std::invalid_argument("mobility: light_period must be > 0");
}

RoadGraph RoadGraph::manhattan(double width, double height, double block_size) {
  const auto blocks = [&](double extent, const char* name) {
    const double n = std::round(extent / block_size);
    if (n < 1.0 || std::abs(n * block_size - extent) > 1e-6 * extent) {
      throw std::invalid_argument(std::string("road grid: ") + name + " is not a multiple of block_size");
    }
    return static_cast<int>(n);
  };
  const int nx = blocks(width, "width");
  const int ny = blocks(height, "height");

  RoadGraph g;
  g.width_ = width;
  g.height_ = height;
  const auto node = [&](int i, int j) { return j * (nx + 1) + i; };
  for (int j = 0; j <= ny; ++j) {
    for (int i = 0; i <= nx; ++i) {
      g.intersections_.push_back({Vec2{i * block_size, j * block_size}, {}});
    }
  }
  const auto add = [&](int from, int to) {
    const int id = static_cast<int>(g.segments_.size());
    g.segments_.push_back({from, to, g.intersections_[from].position, g.intersections_[to].position});
    g.intersections_[from].segments.push_back(id);
    g.intersections_[to].segments.push_back(id);
  };
  for (int j = 0; j <= ny; ++j) {
    for (int i = 0; i < nx; ++i) add(node(i, j), node(i + 1, j));
  }
  for (int i = 0; i <= nx; ++i) {
    for (int j = 0; j < ny; ++j) add(node(i, j), node(i, j + 1));
  }
  g.unblocked_.resize(g.intersections_.size());
  for (std::size_t k = 0; k < g.intersections_.size(); ++k) g.unblocked_[k] = g.intersections_[k].segments.front();
  return g;
}

void RoadGraph::set_unblocked(int intersection, int segment) {
  const auto& inc = intersections_.at(intersection).segments;
  if (std::find(inc.begin(), inc.end(), segment) == inc.end()) {
    throw std::invalid_argument("road grid: unblocked road must be incident to its intersection");
  }
  unblocked_[intersection] = segment;
}

void RoadGraph::redraw_unblocked(std::mt19937_64& rng) {
  for (std::size_t k = 0; k < intersections_.size(); ++k) {
    const auto& inc = intersections_[k].segments;
    std::uniform_int_distribution<std::size_t> pick(0, inc.size() - 1);
    unblocked_[k] = inc[pick(rng)];
  }
}

double RoadGraph::total_length() const {
  double total = 0.0;
  for (const auto& s : segments_) total += s.length();
  return total;
}

bool RoadGraph::connected() const {
  if (intersections_.empty()) return true;
  std::vector<char> seen(intersections_.size(), 0);
  std::queue<int> frontier;
  frontier.push(0);
  seen[0] = 1;
  std::size_t count = 1;
  while (!frontier.empty()) {
    const int n = frontier.front();
    frontier.pop();
    for (int s : intersections_[n].segments) {
      const int other = segments_[s].from == n ? segments_[s].to : segments_[s].from;
      if (!seen[other]) {
        seen[other] = 1;
        ++count;
        frontier.push(other);
      }
    }
  }
  return count == intersections_.size();
}

namespace {

void refresh_kinematics(const RoadGraph& roads, VehicleState& v) {
  const Segment& seg = roads.segments()[v.segment_id];
  const double len = seg.length();
  const Vec2 dir = (seg.b - seg.a) * (1.0 / len);
  v.position = seg.a + dir * v.offset;
  v.heading = v.toward_b ? dir : dir * -1.0;
}

int choose_exit(const RoadGraph& roads, int node, int incoming, std::mt19937_64& rng) {
  const int open = roads.unblocked(node);
  if (open != incoming) return open;
  const auto& inc = roads.intersections()[node].segments;
  std::vector<int> others;
  others.reserve(inc.size());
  for (int s : inc) {
    if (s != incoming) others.push_back(s);
  }
  if (others.empty()) return incoming;
  std::uniform_int_distribution<std::size_t> pick(0, others.size() - 1);
  return others[pick(rng)];
}

}  // namespace

void place_on_segment(const RoadGraph& roads, VehicleState& v, int segment, double offset, bool toward_b) {
  const Segment& seg = roads.segments().at(segment);
  v.segment_id = segment;
  v.offset = std::clamp(offset, 0.0, seg.length());
  v.toward_b = toward_b;
  refresh_kinematics(roads, v);
}

std::vector<VehicleState> place_uniform(const RoadGraph& roads, int count, const MobilityConfig& cfg,
                                        std::mt19937_64& rng) {
  std::vector<double> cumulative;
  double total = 0.0;
  for (const auto& s : roads.segments()) {
    total += s.length();
    cumulative.push_back(total);
  }
  std::uniform_real_distribution<double> along(0.0, total);
  std::uniform_real_distribution<double> speed(cfg.v_min, cfg.v_max);
  std::bernoulli_distribution coin(0.5);
  std::vector<VehicleState> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) {
    const double u = along(rng);
    const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    const int seg = static_cast<int>(std::min<std::ptrdiff_t>(it - cumulative.begin(), cumulative.size() - 1));
    const double start = seg == 0 ? 0.0 : cumulative[seg - 1];
    VehicleState v;
    v.id = k;
    v.sigma = cfg.default_sigma;
    v.speed = speed(rng);
    place_on_segment(roads, v, seg, u - start, coin(rng));
    out.push_back(v);
  }
  return out;
}

void step_vehicles(World& world, double dt, const MobilityConfig& cfg, std::mt19937_64& rng) {
  if (!(dt > 0.0)) throw std::invalid_argument("step_vehicles: dt must be > 0");
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double root_dt = std::sqrt(dt);
  const auto& segs = world.roads.segments();
  for (auto& v : world.vehicles) {
    const double g = gauss(rng);
    v.speed = std::clamp(v.speed + v.sigma * root_dt * g, cfg.v_min, cfg.v_max);
    double remaining = v.speed * dt;
    // Bounded: one iteration per intersection crossed.
    for (int hops = 0; remaining > 0.0 && hops < 1000; ++hops) {
      const Segment& seg = segs[v.segment_id];
      const double len = seg.length();
      const double to_end = v.toward_b ? len - v.offset : v.offset;
      if (remaining < to_end) {
        v.offset += v.toward_b ? remaining : -remaining;
        remaining = 0.0;
        break;
      }
      remaining -= to_end;
      const int node = v.toward_b ? seg.to : seg.from;
      const int next = choose_exit(world.roads, node, v.segment_id, rng);
      const Segment& ns = segs[next];
      v.segment_id = next;
      v.toward_b = ns.from == node;
      v.offset = v.toward_b ? 0.0 : ns.length();
    }
    refresh_kinematics(world.roads, v);
  }
}

DistanceChange distance_change_distribution(const VehicleState& vi, const VehicleState& vj, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("distance_change_distribution: dt must be > 0");
  const Vec2 rel = vi.position - vj.position;
  const Vec2 rel_v = vi.velocity() - vj.velocity();
  const double d = norm(rel);
  DistanceChange out;
  double radial = 0.0;
  if (d < 1e-9) {
    radial = norm(rel_v);
    out.degenerate_geometry = true;
  } else {
    radial = dot(rel_v, rel) / d;
  }
  out.law.mean = radial * dt;
  out.law.variance = (vi.sigma * vi.sigma + vj.sigma * vj.sigma) * dt * dt * dt;
  return out;
}

double link_probability(const VehicleState& vi, const VehicleState& vj, double dt, double range) {
  if (!(range > 0.0)) throw std::invalid_argument("link_probability: range must be > 0");
  const auto change = distance_change_distribution(vi, vj, dt);
  const double slack = range - distance(vi.position, vj.position);
  if (change.law.variance <= 0.0) return change.law.mean < slack ? 1.0 : 0.0;
  return normal_cdf((slack - change.law.mean) / std::sqrt(change.law.variance));
}

double expected_neighbor_count(const VehicleState& v, std::span<const VehicleState> world, double dt,
                               double range) {
  double total = 0.0;
  for (const auto& other : world) {
    if (other.id != v.id) total += link_probability(other, v, dt, range);
  }
  return total;
}

std::vector<VehicleId> neighbors_at(const VehicleState& v, std::span<const VehicleState> world, double range) {
  NeighborIndex index(world, range);
  std::vector<int> hits;
  index.query(v.position, hits);
  std::vector<VehicleId> ids;
  for (int k : hits) {
    if (world[k].id != v.id) ids.push_back(world[k].id);
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

NeighborIndex::NeighborIndex(std::span<const VehicleState> world, double range)
    : world_(world), range_(range), cell_(range) {
  if (!(range > 0.0)) throw std::invalid_argument("NeighborIndex: range must be > 0");
  if (world.empty()) return;
  double max_x = world.front().position.x;
  double max_y = world.front().position.y;
  min_x_ = max_x;
  min_y_ = max_y;
  for (const auto& v : world) {
    min_x_ = std::min(min_x_, v.position.x);
    min_y_ = std::min(min_y_, v.position.y);
    max_x = std::max(max_x, v.position.x);
    max_y = std::max(max_y, v.position.y);
  }
  nx_ = static_cast<int>((max_x - min_x_) / cell_) + 1;
  ny_ = static_cast<int>((max_y - min_y_) / cell_) + 1;
  cells_.assign(static_cast<std::size_t>(nx_) * ny_, {});
  for (int k = 0; k < static_cast<int>(world.size()); ++k) {
    const int cx = static_cast<int>((world[k].position.x - min_x_) / cell_);
    const int cy = static_cast<int>((world[k].position.y - min_y_) / cell_);
    cells_[static_cast<std::size_t>(cy) * nx_ + cx].push_back(k);
  }
}

void NeighborIndex::query(Vec2 point, std::vector<int>& out) const {
  out.clear();
  if (world_.empty()) return;
  const double r2 = range_ * range_;
  const int cx = static_cast<int>(std::floor((point.x - min_x_) / cell_));
  const int cy = static_cast<int>(std::floor((point.y - min_y_) / cell_));
  for (int y = std::max(cy - 1, 0); y <= std::min(cy + 1, ny_ - 1); ++y) {
    for (int x = std::max(cx - 1, 0); x <= std::min(cx + 1, nx_ - 1); ++x) {
      for (int k : cells_[static_cast<std::size_t>(y) * nx_ + x]) {
        if (distance_sq(world_[k].position, point) <= r2) out.push_back(k);
      }
    }
  }
  std::sort(out.begin(), out.end());
}

}  // namespace pro::mobility

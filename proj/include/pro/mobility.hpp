#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "pro/gaussian.hpp"
#include "pro/geometry.hpp"

namespace pro::mobility {

using VehicleId = std::int32_t;

inline constexpr double kmh_to_ms(double kmh) { return kmh / 3.6; }

struct MobilityConfig {
  double v_min{kmh_to_ms(30.0)};
  double v_max{kmh_to_ms(60.0)};
  double default_sigma{1.0};  // m s^-3/2
  double range{250.0};
  double width{2000.0};
  double height{2000.0};
  double block_size{500.0};
  double light_period{30.0};  // unblocked-road redraw period, s

  void validate() const;
  bool operator==(const MobilityConfig&) const = default;
};

struct Segment {
  int from{0};  // intersection index at offset 0
  int to{0};    // intersection index at offset length
  Vec2 a;
  Vec2 b;
  double length() const { return distance(a, b); }
};

struct Intersection {
  Vec2 position;
  std::vector<int> segments;  // incident segment ids
};

/// Manhattan street grid. Every intersection designates exactly one incident
/// road as unblocked; vehicles leave an intersection through it.
class RoadGraph {
 public:
  static RoadGraph manhattan(double width, double height, double block_size);

  const std::vector<Segment>& segments() const { return segments_; }
  const std::vector<Intersection>& intersections() const { return intersections_; }
  int unblocked(int intersection) const { return unblocked_.at(intersection); }
  void set_unblocked(int intersection, int segment);
  void redraw_unblocked(std::mt19937_64& rng);

  double width() const { return width_; }
  double height() const { return height_; }
  double total_length() const;
  bool connected() const;

 private:
  double width_{0.0};
  double height_{0.0};
  std::vector<Segment> segments_;
  std::vector<Intersection> intersections_;
  std::vector<int> unblocked_;
};

struct VehicleState {
  VehicleId id{0};
  Vec2 position;
  int segment_id{0};
  double offset{0.0};  // distance from segment.a
  bool toward_b{true};
  Vec2 heading{1.0, 0.0};
  double speed{0.0};
  double sigma{1.0};

  Vec2 velocity() const { return heading * speed; }
};

struct World {
  RoadGraph roads;
  std::vector<VehicleState> vehicles;
};

/// Places a vehicle on the graph at the given offset and refreshes its cached
/// position/heading.
void place_on_segment(const RoadGraph& roads, VehicleState& v, int segment, double offset, bool toward_b);

/// Uniform placement over total road length, speeds uniform in [v_min, v_max].
std::vector<VehicleState> place_uniform(const RoadGraph& roads, int count, const MobilityConfig& cfg,
                                        std::mt19937_64& rng);

/// Wiener-process speed update, clamp to [v_min, v_max], then advance along
/// the roads. At an intersection a vehicle takes the unblocked road; if that
/// road is the one it arrived on, it picks uniformly among the other incident
/// roads instead (U-turns only when nothing else exists).
void step_vehicles(World& world, double dt, const MobilityConfig& cfg, std::mt19937_64& rng);

struct DistanceChange {
  GaussianSpec law;
  bool degenerate_geometry{false};  // coincident positions; raw relative speed used
};

/// Law of the change in separation over dt: mean is the radial relative speed
/// times dt (positive = separating), variance (sigma_i^2 + sigma_j^2) dt^3.
DistanceChange distance_change_distribution(const VehicleState& vi, const VehicleState& vj, double dt);

/// Probability that the pair is still within range after dt.
double link_probability(const VehicleState& vi, const VehicleState& vj, double dt, double range);

/// Expected number of vehicles in range of v after dt (v itself excluded by id).
double expected_neighbor_count(const VehicleState& v, std::span<const VehicleState> world, double dt,
                               double range);

/// Ids of vehicles within range (inclusive) of v at the current instant.
std::vector<VehicleId> neighbors_at(const VehicleState& v, std::span<const VehicleState> world, double range);

/// Uniform-grid spatial index for repeated neighbor queries on one snapshot.
class NeighborIndex {
 public:
  NeighborIndex(std::span<const VehicleState> world, double range);
  /// Indices (into the snapshot) within range of point, sorted ascending.
  void query(Vec2 point, std::vector<int>& out) const;

 private:
  std::span<const VehicleState> world_;
  double range_;
  double cell_;
  double min_x_{0.0};
  double min_y_{0.0};
  int nx_{1};
  int ny_{1};
  std::vector<std::vector<int>> cells_;
};

}  // namespace pro::mobility

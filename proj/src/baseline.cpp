#include "pro/baseline.hpp"

#include <algorithm>
#include <stdexcept>

namespace pro::baseline {

namespace {

struct Closer {
  double dist;
  routing::VehicleId id;
};

std::vector<Closer> strictly_closer(Vec2 sender_pos, Vec2 dest_pos,
                                    std::span<const routing::NeighborInfo> neighbors) {
  const double own = distance(sender_pos, dest_pos);
  std::vector<Closer> out;
  for (const auto& n : neighbors) {
    const double d = distance(n.state.position, dest_pos);
    if (d < own) out.push_back({d, n.state.id});
  }
  std::sort(out.begin(), out.end(), [](const Closer& a, const Closer& b) {
    return a.dist != b.dist ? a.dist < b.dist : a.id < b.id;
  });
  return out;
}

}  // namespace

std::string_view to_string(BaselineKind kind) {
  switch (kind) {
    case BaselineKind::greedy_geographic:
      return "greedy_geographic";
    case BaselineKind::exor_like:
      return "exor_like";
  }
  return "?";
}

std::optional<routing::VehicleId> greedy_next_hop(Vec2 sender_pos, Vec2 dest_pos,
                                                  std::span<const routing::NeighborInfo> neighbors) {
  const auto closer = strictly_closer(sender_pos, dest_pos, neighbors);
  if (closer.empty()) return std::nullopt;
  return closer.front().id;
}

std::vector<routing::CandidateEntry> exor_candidates(Vec2 sender_pos, Vec2 dest_pos,
                                                     std::span<const routing::NeighborInfo> neighbors, int k_max) {
  if (k_max < 1) throw std::invalid_argument("exor_candidates: k_max must be >= 1");
  auto closer = strictly_closer(sender_pos, dest_pos, neighbors);
  if (static_cast<int>(closer.size()) > k_max) closer.resize(static_cast<std::size_t>(k_max));
  std::vector<routing::CandidateEntry> out;
  for (const auto& c : closer) {
    const int priority = static_cast<int>(out.size()) + 1;
    out.push_back({c.id, -c.dist, priority, 1.0});
  }
  return out;
}

}  // namespace pro::baseline

#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "pro/routing.hpp"

namespace pro::baseline {

enum class BaselineKind { greedy_geographic, exor_like };

std::string_view to_string(BaselineKind kind);

/// Greedy geographic forwarding (GPSR greedy mode): the strictly-closer
/// neighbour nearest the destination, lower id on ties. nullopt is a void.
std::optional<routing::VehicleId> greedy_next_hop(Vec2 sender_pos, Vec2 dest_pos,
                                                  std::span<const routing::NeighborInfo> neighbors);

/// Non-predictive opportunistic stand-in: every strictly-closer neighbour,
/// ranked by ascending distance to the destination (ties by id), capped at
/// k_max.
std::vector<routing::CandidateEntry> exor_candidates(Vec2 sender_pos, Vec2 dest_pos,
                                                     std::span<const routing::NeighborInfo> neighbors, int k_max = 4);

}  // namespace pro::baseline

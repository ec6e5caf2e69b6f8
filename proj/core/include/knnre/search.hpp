#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "knnre/data_model.hpp"
#include "knnre/memory.hpp"

namespace knnre {

enum class DistanceKind { l2, sq_l2 };

std::string_view to_string(DistanceKind kind);
DistanceKind parse_distance(std::string_view name);  // "l2" | "sq_l2"

struct Neighbor {
  std::size_t memory_row = 0;
  std::string record_id;
  double distance = 0.0;
  LabelId label = 0;

  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

// Sorted ascending by (distance, memory_row).
using NeighborList = std::vector<Neighbor>;

// Exact top-k retrieval. Returns min(k, usable rows) neighbors; rows whose
// record id is in `exclude` are skipped. Distances are computed in double
// precision as |q|^2 - 2 q.m + |m|^2 (clamped at zero), with l2 taking the
// square root of the selected entries.
NeighborList search(const MemoryStore& memory, std::span<const double> query, int k,
                    DistanceKind distance = DistanceKind::sq_l2,
                    const std::unordered_set<std::string>& exclude = {});

// Per-query results are identical to search() with exclude = {query id} when
// exclude_self is set, for any worker count.
std::vector<NeighborList> batch_search(const MemoryStore& memory, const EmbeddingSet& queries, int k,
                                       DistanceKind distance = DistanceKind::sq_l2, bool exclude_self = false,
                                       std::size_t workers = 1);

}  // namespace knnre

#pragma once

#include <cstddef>
#include <cstdint>

#include "tawrmac/event_store.hpp"

namespace tawrmac {

struct SyntheticOptions {
  std::size_t users = 20;
  std::size_t items = 20;
  std::size_t group_size = 4;  // users per group; each group shares group_size items
  std::size_t events = 10000;
  // Share of events replaced by first-time pairs with items trending inside
  // the user's group.
  double novel_fraction = 0.0;
  std::uint64_t seed = 0;
};

// Periodic bipartite stream. Users fire in a fixed round-robin (one event per
// time unit, period = users), each alternating between its two items of the
// group pool. With novel_fraction > 0, a share of those events instead goes to
// a fresh item that the user's group members visit one after another, so
// every such pair is new but its destination was just touched by the group.
EventLog make_synthetic_stream(const SyntheticOptions& opts);

}  // namespace tawrmac

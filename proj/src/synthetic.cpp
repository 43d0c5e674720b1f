#include "tawrmac/synthetic.hpp"

#include <set>
#include <vector>

#include "tawrmac/errors.hpp"

namespace tawrmac {

EventLog make_synthetic_stream(const SyntheticOptions& o) {
  if (o.users == 0 || o.group_size == 0 || o.users % o.group_size != 0 ||
      o.items != o.users) {
    throw ConfigError("synthetic stream needs users == items and users divisible by group_size");
  }
  const auto groups = o.users / o.group_size;
  const auto first_item = static_cast<NodeId>(o.users);
  EventLog log;
  log.bipartite = true;
  log.first_dst_id = first_item;
  log.edge_feat_dim = 0;
  log.events.reserve(o.events);

  Rng rng({o.seed, 0x5e7ULL});
  std::vector<std::size_t> visits(o.users, 0);
  // Current trending item per group and the members who already visited it.
  std::vector<NodeId> trend(groups, kNullNode);
  std::vector<std::set<std::size_t>> visited(groups);
  NodeId next_fresh = first_item + static_cast<NodeId>(o.items);

  for (std::size_t i = 0; i < o.events; ++i) {
    const auto user = i % o.users;
    const auto group = user / o.group_size;
    const auto local = user % o.group_size;
    Event e;
    e.src = static_cast<NodeId>(user);
    e.t = static_cast<double>(i + 1);
    if (o.novel_fraction > 0.0 && rng.uniform() < o.novel_fraction) {
      if (trend[group] == kNullNode || visited[group].contains(local)) {
        trend[group] = next_fresh++;
        visited[group].clear();
      }
      visited[group].insert(local);
      e.dst = trend[group];
    } else {
      const auto pool = group * o.group_size;
      const auto pick = (local + (visits[user] % 2)) % o.group_size;
      e.dst = first_item + static_cast<NodeId>(pool + pick);
      ++visits[user];
    }
    log.events.push_back(std::move(e));
  }
  return log;
}

}  // namespace tawrmac

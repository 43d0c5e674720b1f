#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "json.hpp"
#include "tawrmac/rng.hpp"

namespace tawrmac {

using NodeId = std::uint32_t;
inline constexpr NodeId kNullNode = std::numeric_limits<NodeId>::max();

struct Event {
  NodeId src = 0;
  NodeId dst = 0;
  double t = 0.0;
  std::vector<double> edge_feat;
  std::optional<int> state_label;
};

// Loader output. `first_dst_id` is the id offset applied to destination
// columns of bipartite files; 0 for unipartite streams.
struct EventLog {
  std::vector<Event> events;
  std::size_t edge_feat_dim = 0;
  bool bipartite = true;
  NodeId first_dst_id = 0;
};

struct LoadOptions {
  // Offset item ids past the user id range. Unipartite datasets (UCI, Enron)
  // share one id space and must load with bipartite = false.
  bool bipartite = true;
};

// Reads the JODIE/DyGLib layout: one header line, then
// `user,item,timestamp,state_label,f1,...,fd`. Rows are stably sorted by t.
EventLog load_jodie_csv(const std::string& path, const LoadOptions& opts = {});
EventLog parse_jodie_csv(const std::string& text, const LoadOptions& opts = {});

struct AdjEntry {
  NodeId neighbor = 0;
  double t = 0.0;
  std::uint32_t event = 0;

  bool operator==(const AdjEntry&) const = default;
};

// Immutable temporal graph with a CSR adjacency index. Each event appears in
// the adjacency of both endpoints, in ascending time order.
class TemporalGraph {
 public:
  TemporalGraph() = default;
  TemporalGraph(std::vector<Event> events, std::size_t node_feat_dim,
                std::size_t min_num_nodes = 0);

  std::size_t num_nodes() const { return offsets_.empty() ? 0 : offsets_.size() - 1; }
  std::size_t num_events() const { return events_.size(); }
  std::size_t edge_feat_dim() const { return edge_feat_dim_; }
  std::size_t node_feat_dim() const { return node_feat_dim_; }

  const std::vector<Event>& events() const { return events_; }
  const Event& event(std::size_t i) const { return events_[i]; }

  std::span<const AdjEntry> adjacency(NodeId u) const;
  // Entries of adj[u] with timestamp strictly below t.
  std::span<const AdjEntry> history(NodeId u, double t) const;
  std::size_t degree_before(NodeId u, double t) const { return history(u, t).size(); }

  std::span<const double> edge_features(std::size_t event) const;
  // Node feature rows; all benchmark streams are featureless, so these are
  // zeros unless set explicitly.
  std::span<const double> node_features(NodeId u) const;
  void set_node_features(std::vector<double> table);

 private:
  std::vector<Event> events_;
  std::vector<std::size_t> offsets_;
  std::vector<AdjEntry> entries_;
  std::vector<double> edge_feat_;
  std::vector<double> node_feat_;
  std::size_t edge_feat_dim_ = 0;
  std::size_t node_feat_dim_ = 0;
};

TemporalGraph build_graph(std::vector<Event> events, std::size_t node_feat_dim = 0,
                          std::size_t min_num_nodes = 0);

enum class NeighborStrategy { kRecent, kUniform };

NeighborStrategy parse_neighbor_strategy(const std::string& name);
std::string to_string(NeighborStrategy s);

struct NeighborSample {
  std::vector<AdjEntry> neighbors;  // ascending by t
  std::size_t k = 0;

  std::size_t padding() const { return k - neighbors.size(); }
};

NeighborSample neighbors_before(const TemporalGraph& g, NodeId u, double t,
                                std::size_t k, NeighborStrategy strategy,
                                Rng& rng);

struct IndexRange {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t size() const { return end - begin; }
};

struct SplitSpec {
  IndexRange train, val, test;
  double train_end_t = 0.0;  // timestamp of the last training event
  double val_end_t = 0.0;    // timestamp of the last validation event
};

struct SplitRatios {
  double train = 0.70;
  double val = 0.15;
  double test = 0.15;
};

// Index-based chronological split. The training prefix takes ceil(train*n)
// events, the test suffix ceil(test*n), validation the remainder.
SplitSpec chrono_split(std::span<const Event> events, SplitRatios ratios = {});

struct InductiveMask {
  std::vector<NodeId> masked;                 // sorted
  std::vector<std::size_t> kept_train_events;  // indices into the event list
  std::unordered_set<NodeId> masked_set;

  bool is_masked(NodeId u) const { return masked_set.contains(u); }
  bool is_inductive_edge(const Event& e) const {
    return is_masked(e.src) || is_masked(e.dst);
  }
};

InductiveMask mark_inductive_nodes(std::span<const Event> events,
                                   const SplitSpec& split, double fraction,
                                   std::uint64_t seed);

nlohmann::json split_to_json(const SplitSpec& split);
nlohmann::json mask_to_json(const InductiveMask& mask);

}  // namespace tawrmac

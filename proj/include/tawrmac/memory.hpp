#pragma once

#include <cstddef>
#include <limits>
#include <map>
#include <span>
#include <utility>
#include <vector>

#include "tawrmac/event_store.hpp"
#include "tawrmac/kernels.hpp"

namespace tawrmac {

inline constexpr double kNeverUpdated = -std::numeric_limits<double>::infinity();

// Message components; the learnable time encoding is applied when the
// message is turned into a GRU input, so gradients reach phi_1.
struct RawMessage {
  NodeId node = 0;
  double t = 0.0;
  double dt = 0.0;  // t - last_update[node], clamped at 0 for fresh nodes
  std::vector<double> self_memory;
  std::vector<double> other_memory;  // empty for node-feature updates
  std::vector<double> features;      // edge features, or node features for updates
  bool interaction = true;
};

class MemoryStore {
 public:
  MemoryStore() = default;
  MemoryStore(std::size_t num_nodes, std::size_t dim);

  std::size_t num_nodes() const { return last_update_.size(); }
  std::size_t dim() const { return dim_; }

  std::span<const double> row(NodeId u) const {
    return {memory_.data() + static_cast<std::size_t>(u) * dim_, dim_};
  }
  double last_update(NodeId u) const { return last_update_[u]; }
  void write(NodeId u, std::span<const double> values, double t);

  struct Read {
    std::vector<double> memory;
    double dt = 0.0;
  };
  // m_u(t^-) together with max(0, t - last_update); never mutates.
  Read read(NodeId u, double t) const;
  double delta(NodeId u, double t) const;

  // Stash keeps one message per node: the latest by timestamp (ties go to the
  // later stash call).
  void stash(RawMessage msg);
  std::vector<RawMessage> take_pending();
  const std::map<NodeId, RawMessage>& pending() const { return pending_; }

  void reset();

  const std::vector<double>& table() const { return memory_; }
  const std::vector<double>& last_updates() const { return last_update_; }
  void load(std::vector<double> table, std::vector<double> last_updates);

 private:
  std::size_t dim_ = 0;
  std::vector<double> memory_;
  std::vector<double> last_update_;
  std::map<NodeId, RawMessage> pending_;
};

std::pair<RawMessage, RawMessage> compute_interaction_messages(
    const MemoryStore& store, NodeId src, NodeId dst, double t,
    std::span<const double> edge_feat);

RawMessage compute_update_message(const MemoryStore& store, NodeId u, double t,
                                  std::span<const double> node_feat);

struct MemoryUpdater {
  GruCell interaction_rnn;
  GruCell update_rnn;  // only present when node features exist
  LearnableTimeEncoder time_encoder;
  std::size_t feature_dim = 0;  // edge feature width used in messages

  static std::size_t message_dim(std::size_t memory_dim, std::size_t time_dim,
                                 std::size_t feature_dim) {
    return 2 * memory_dim + time_dim + feature_dim;
  }
};

// Result of applying messages on a tape: `rows` holds the new memory of
// `nodes` (one row each) and is differentiable w.r.t. GRU and phi_1.
struct MemoryFlush {
  std::vector<NodeId> nodes;
  Var rows;
};

// Keeps the latest message per node, applies the GRU, and writes the new
// rows back into the store. Throws CausalityError on out-of-order messages.
MemoryFlush flush_messages(Tape& tape, MemoryStore& store, std::vector<RawMessage> messages,
                           const MemoryUpdater& updater);

// Non-differentiable convenience wrapper.
void apply_messages(MemoryStore& store, std::vector<RawMessage> messages,
                    const MemoryUpdater& updater);

}  // namespace tawrmac

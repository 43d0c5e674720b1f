#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "tawrmac/event_store.hpp"

namespace tawrmac {

enum class NegStrategy { kRandom, kHistorical, kInductive };

NegStrategy parse_neg_strategy(const std::string& name);
std::string to_string(NegStrategy s);

struct Negatives {
  std::vector<NodeId> src;
  std::vector<NodeId> dst;
  std::size_t fallbacks = 0;  // negatives drawn randomly because the pool was empty
};

// One negative per positive of a batch.
//  random:     keep the source, draw the destination from the dataset's
//              destination ids.
//  historical: a pair observed anywhere before the batch.
//  inductive:  a pair observed in the evaluated split before the batch.
// Pool draws exclude the batch's own positives; empty pools fall back to
// random. Batches must be requested in stream order.
class NegativeSampler {
 public:
  NegativeSampler(NegStrategy strategy, std::span<const Event> events, IndexRange eval_split);

  NegStrategy strategy() const { return strategy_; }
  const std::vector<NodeId>& destinations() const { return dst_space_; }

  Negatives sample(IndexRange batch, Rng& rng);

  // The current candidate pool (pairs not in the batch's positives are
  // filtered at draw time).
  const std::vector<std::pair<NodeId, NodeId>>& pool() const { return pool_; }
  // Advances the pool to cover events before `batch_begin`.
  void advance(std::size_t batch_begin);

 private:
  NodeId random_dst(NodeId src, const std::unordered_set<std::uint64_t>& positives, Rng& rng) const;

  NegStrategy strategy_;
  std::span<const Event> events_;
  IndexRange split_;
  std::vector<NodeId> dst_space_;
  std::vector<std::pair<NodeId, NodeId>> pool_;
  std::unordered_set<std::uint64_t> pool_set_;
  std::size_t cursor_ = 0;
};

inline std::uint64_t pair_key(NodeId u, NodeId v) {
  return (static_cast<std::uint64_t>(u) << 32) | v;
}

}  // namespace tawrmac

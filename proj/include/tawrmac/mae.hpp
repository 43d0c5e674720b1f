#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "tawrmac/event_store.hpp"
#include "tawrmac/kernels.hpp"
#include "tawrmac/memory.hpp"

namespace tawrmac {

// One embedding request. Neighbourhoods are read strictly before `horizon`
// (<= t); time encodings use t itself. `key` seeds any sampling done for it.
struct Query {
  NodeId node = 0;
  double t = 0.0;
  double horizon = 0.0;
  std::uint64_t key = 0;
};

// Width of edge features inside the model: featureless streams get one zero
// column so every tensor keeps a fixed shape.
inline std::size_t model_edge_dim(const TemporalGraph& g) {
  return g.edge_feat_dim() == 0 ? 1 : g.edge_feat_dim();
}

// Fills `out` (model_edge_dim wide) with the features of event `e`.
void edge_feature_row(const TemporalGraph& g, std::size_t e, std::span<double> out);

// Memory rows as seen by the current tape: nodes refreshed by this batch's
// flush carry gradient, everything else is a constant read of the store.
struct MemoryView {
  const MemoryStore* store = nullptr;
  const MemoryFlush* flush = nullptr;
};

// [nodes.size(), d_m]; kNullNode rows are zero.
Var gather_memory(Tape& tape, const MemoryView& view, std::span<const NodeId> nodes);

struct MaeConfig {
  std::size_t layers = 1;
  std::size_t k = 10;
  std::size_t heads = 2;
  std::size_t d_m = 172;
  std::size_t d_phi1 = 100;
  std::size_t d_phi2 = 20;
  std::size_t edge_dim = 1;
  NeighborStrategy strategy = NeighborStrategy::kRecent;
  double dropout = 0.1;
};

class Mae {
 public:
  Mae() = default;
  // `phi1` is shared with the memory updater and the walk encoder.
  Mae(ParameterStore& store, const MaeConfig& cfg, const LearnableTimeEncoder& phi1, Rng& rng);

  const MaeConfig& config() const { return cfg_; }
  std::size_t out_dim() const { return cfg_.d_m; }

  // h_u(t) for each query, [queries.size(), d_m]. With `dropout_rng` set the
  // merge MLPs apply dropout (training mode).
  Var embed(Tape& tape, const TemporalGraph& g, const MemoryView& memory,
            std::span<const Query> queries, std::uint64_t seed,
            Rng* dropout_rng = nullptr) const;

 private:
  Var layer(std::size_t l, Tape& tape, const TemporalGraph& g, const MemoryView& memory,
            std::span<const Query> queries, std::uint64_t seed, Rng* dropout_rng) const;

  MaeConfig cfg_;
  LearnableTimeEncoder phi1_;
  FixedTimeEncoder phi2_;
  std::vector<MultiHeadAttention> attention_;
  std::vector<Mlp> merge_;
};

}  // namespace tawrmac

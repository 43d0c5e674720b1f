#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tawrmac/event_store.hpp"
#include "tawrmac/kernels.hpp"
#include "tawrmac/mae.hpp"
#include "tawrmac/memory.hpp"
#include "tawrmac/metrics.hpp"
#include "tawrmac/nce.hpp"
#include "tawrmac/tawr.hpp"

namespace tawrmac {

enum class RestartMode { kLearnable, kFixed, kDegree };

struct RestartSetting {
  RestartMode mode = RestartMode::kLearnable;
  double fixed = 0.0;
};

// "learnable", "degree" or "fixed:<value>" with value in [0, 1].
RestartSetting parse_restart_mode(const std::string& text);
std::string to_string(const RestartSetting& s);

struct Ablation {
  bool no_mae = false;
  bool no_nce = false;
  bool no_tawr = false;
  bool no_restart = false;
};

struct ModelConfig {
  // memory + attention
  std::size_t d_m = 172;
  std::size_t d_phi1 = 100;
  std::size_t d_phi2 = 20;
  std::size_t layers = 1;
  std::size_t k = 10;
  std::size_t heads = 2;
  NeighborStrategy strategy = NeighborStrategy::kRecent;
  // co-occurrence
  std::size_t r = 32;
  std::size_t d_ce = 10;
  // walks
  std::size_t M = 10;
  std::size_t w = 4;
  std::size_t d_v = 100;
  std::size_t d_w = 172;
  std::size_t walk_heads = 4;
  double alpha = 1e-6;
  RestartSense sense = RestartSense::kLiteral;
  WalkQuery walk_query = WalkQuery::kMean;
  RestartSetting restart;

  Ablation ablation;
  double dropout = 0.1;
  std::size_t threads = 1;
  // Filled from the data.
  std::size_t edge_dim = 1;
  std::size_t node_feat_dim = 0;
};

// One (u, v) pair to embed. Nodes sharing a key share their per-node work
// (attention embedding, restart probability and walks), so a key must always
// name the same (node, t, horizon).
struct PairQuery {
  NodeId u = 0;
  NodeId v = 0;
  double t = 0.0;
  double horizon = 0.0;
  std::uint64_t key_u = 0;
  std::uint64_t key_v = 0;
};

struct PairEmbedding {
  Var u;  // [P, emb_dim]
  Var v;
  std::vector<Walk> walks_u;  // M per pair (empty when walks are disabled)
  std::vector<Walk> walks_v;
  std::vector<double> pr_u;  // restart probability used for sampling
};

struct ForwardContext {
  const TemporalGraph* graph = nullptr;
  MemoryView memory;
  const DegreeIndex* degrees = nullptr;  // needed for the degree restart mode
  std::uint64_t seed = 0;
  Rng* dropout_rng = nullptr;  // set in training mode
};

class Tawrmac {
 public:
  Tawrmac(const ModelConfig& cfg, std::uint64_t seed);
  Tawrmac(const Tawrmac&) = delete;
  Tawrmac& operator=(const Tawrmac&) = delete;

  const ModelConfig& config() const { return cfg_; }
  ParameterStore& parameters() { return params_; }
  const ParameterStore& parameters() const { return params_; }
  const MemoryUpdater& memory_updater() const { return updater_; }
  bool uses_memory() const { return !cfg_.ablation.no_mae; }
  bool uses_walks() const { return !cfg_.ablation.no_tawr; }

  // d_h + r * d_ce + d_w + 1
  std::size_t embedding_dim() const;

  // h_u(t) for each query; zeros when MAE is ablated.
  Var node_states(Tape& tape, const ForwardContext& ctx, std::span<const Query> queries) const;
  // Restart probabilities of the rows of `h` as a [B, 1] block.
  Var restart_block(Tape& tape, const ForwardContext& ctx, Var h,
                    std::span<const Query> queries) const;

  // [h, co-occurrence, walk encoding, restart prob] for both ends of every pair.
  PairEmbedding embed_pairs(Tape& tape, const ForwardContext& ctx,
                            std::span<const PairQuery> pairs) const;

  // sigmoid(MLP([emb_u || emb_v])) as a [P, 1] column.
  Var link_probability(Var emb_u, Var emb_v, Rng* dropout_rng = nullptr) const;

 private:
  ModelConfig cfg_;
  ParameterStore params_;
  LearnableTimeEncoder phi1_;
  MemoryUpdater updater_;
  Mae mae_;
  CoocEncoder cooc_;
  RestartHead restart_;
  WalkEncoder walks_;
  Mlp link_head_;
};

// Node label head: softmax(MLP(emb)).
struct NodeClassifier {
  ParameterStore params;
  Mlp mlp;
  std::size_t classes = 2;

  NodeClassifier(std::size_t emb_dim, std::size_t hidden, std::size_t classes, std::uint64_t seed);
  Var operator()(Var emb) const;  // [B, classes]
};

}  // namespace tawrmac

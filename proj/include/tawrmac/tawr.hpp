#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tawrmac/event_store.hpp"
#include "tawrmac/kernels.hpp"

namespace tawrmac {

enum class RestartSense { kLiteral, kInverted };

RestartSense parse_restart_sense(const std::string& name);
std::string to_string(RestartSense s);

// Literal: restart when p > pr. Inverted: restart when p < pr.
bool restart_drawn(double p, double pr, RestartSense sense);

struct WalkStep {
  NodeId node = kNullNode;
  double t = 0.0;
};

// w + 1 node slots; slot 0 is the root at the query time. A restart slot holds
// the root again, stamped with the previous slot's time.
struct Walk {
  std::vector<WalkStep> steps;
  bool restart_used = false;
  std::optional<std::size_t> restart_index;

  NodeId root() const { return steps.front().node; }
  std::size_t length() const { return steps.size() - 1; }
};

struct WalkConfig {
  std::size_t w = 4;
  double alpha = 1e-6;
  RestartSense sense = RestartSense::kLiteral;
  bool allow_restart = true;
};

// Backward time-biased walk from u. Candidates at each step are the prior
// edges of the current node strictly before the running bound (initially
// `horizon`), drawn with weight exp(alpha * (t_candidate - t_latest)).
Walk sample_twr(const TemporalGraph& g, NodeId u, double t, double horizon,
                const WalkConfig& cfg, double pr, Rng& rng);

struct WalkRoot {
  NodeId node = 0;
  double t = 0.0;
  double horizon = 0.0;
  double pr = 1.0;
  std::uint64_t key = 0;
};

// M walks per root, root-major. Walk m of root i draws from the stream keyed
// by (seed, root.key, m), so the output does not depend on `threads`.
std::vector<Walk> sample_walks(const TemporalGraph& g, std::span<const WalkRoot> roots,
                               std::size_t M, const WalkConfig& cfg, std::uint64_t seed,
                               std::size_t threads = 1);

// `root t [node@t ...] restart_index`, with `-` for padding slots and for
// walks without a restart.
std::string walk_dump_line(const Walk& walk);

using PositionalFrequency = std::vector<double>;

// node -> occurrences per slot over the given walks; padding is skipped.
std::map<NodeId, PositionalFrequency> positional_frequencies(std::span<const Walk> walks);

// pr = sigmoid(MLP(h)).
struct RestartHead {
  Mlp mlp;

  static RestartHead create(ParameterStore& store, const std::string& name, std::size_t d_h,
                            Rng& rng);
  Var operator()(Var h) const;  // [B, 1]
};

// E_z = MLP(v_z(u)) + MLP(v_z(v)).
struct IdentityEncoder {
  Mlp mlp;
  std::size_t slots = 0;  // w + 1
  std::size_t d_v = 0;

  static IdentityEncoder create(ParameterStore& store, const std::string& name,
                                std::size_t w, std::size_t d_v, Rng& rng);
  // Rows of `fu` and `fv` are paired frequency vectors.
  Var operator()(Var fu, Var fv) const;
};

// Walks of a batch of (u, v) pairs with every slot replaced by a row index
// into the pair-conditioned identity table.
struct AnonymizedBatch {
  std::size_t pairs = 0;
  std::size_t M = 0;
  std::size_t slots = 0;
  Tensor freq_u, freq_v;           // identity table inputs, one row per (pair, z)
  std::vector<std::int64_t> slot;  // [(2 * pairs * M) * slots], -1 for padding
  std::vector<double> dt;          // matching inter-step gaps
  std::vector<std::uint8_t> valid;
};

// walks_u / walks_v hold M walks per pair, pair-major. Row order of the
// output is u-roots for every pair, then v-roots.
AnonymizedBatch anonymize(std::span<const Walk> walks_u, std::span<const Walk> walks_v,
                          std::size_t M);

enum class WalkQuery { kMean, kPerWalk };

WalkQuery parse_walk_query(const std::string& name);
std::string to_string(WalkQuery q);

struct WalkEncoder {
  IdentityEncoder identity;
  GruCell gru;
  MultiHeadAttention attention;
  LearnableTimeEncoder phi1;
  WalkQuery query = WalkQuery::kMean;

  static WalkEncoder create(ParameterStore& store, const std::string& name, std::size_t w,
                            std::size_t d_v, std::size_t d_w, std::size_t heads,
                            const LearnableTimeEncoder& phi1, WalkQuery query, Rng& rng);
  std::size_t out_dim() const { return gru.hidden_dim(); }

  // One d_w row per root, in AnonymizedBatch row order: [2 * pairs, d_w].
  Var operator()(Tape& tape, const AnonymizedBatch& batch) const;
};

}  // namespace tawrmac

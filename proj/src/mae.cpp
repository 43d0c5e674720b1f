#include "tawrmac/mae.hpp"

#include <algorithm>
#include <array>
#include <string>
#include <unordered_map>

#include "tawrmac/errors.hpp"

namespace tawrmac {

void edge_feature_row(const TemporalGraph& g, std::size_t e, std::span<double> out) {
  std::fill(out.begin(), out.end(), 0.0);
  if (g.edge_feat_dim() == 0) return;
  const auto f = g.edge_features(e);
  std::copy(f.begin(), f.end(), out.begin());
}

Var gather_memory(Tape& tape, const MemoryView& view, std::span<const NodeId> nodes) {
  const auto& store = *view.store;
  const auto dim = store.dim();
  std::unordered_map<NodeId, std::int64_t> fresh;
  std::size_t fresh_rows = 0;
  if (view.flush != nullptr && view.flush->rows.valid()) {
    fresh_rows = view.flush->nodes.size();
    for (std::size_t i = 0; i < fresh_rows; ++i) {
      fresh.emplace(view.flush->nodes[i], static_cast<std::int64_t>(i));
    }
  }
  std::vector<std::int64_t> idx(nodes.size(), -1);
  std::vector<NodeId> stale;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i] == kNullNode) continue;
    if (auto it = fresh.find(nodes[i]); it != fresh.end()) {
      idx[i] = it->second;
    } else {
      idx[i] = static_cast<std::int64_t>(fresh_rows + stale.size());
      stale.push_back(nodes[i]);
    }
  }
  if (fresh_rows == 0) {
    Tensor rows(nodes.size(), dim);
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      if (nodes[i] == kNullNode) continue;
      const auto r = store.row(nodes[i]);
      std::copy(r.begin(), r.end(), rows.row(i).begin());
    }
    return tape.constant(std::move(rows));
  }
  if (stale.empty()) return ad::gather_rows(view.flush->rows, idx);
  Tensor rows(stale.size(), dim);
  for (std::size_t i = 0; i < stale.size(); ++i) {
    const auto r = store.row(stale[i]);
    std::copy(r.begin(), r.end(), rows.row(i).begin());
  }
  const std::array<Var, 2> parts{view.flush->rows, tape.constant(std::move(rows))};
  return ad::gather_rows(ad::concat_rows(parts), idx);
}

Mae::Mae(ParameterStore& store, const MaeConfig& cfg, const LearnableTimeEncoder& phi1,
         Rng& rng)
    : cfg_(cfg), phi1_(phi1) {
  if (cfg.layers < 1 || cfg.k < 1) throw ConfigError("mae: layers and k must be >= 1");
  phi2_ = FixedTimeEncoder::create(store, "mae.phi2", cfg.d_phi2);
  const auto q_dim = cfg.d_m + cfg.d_phi1 + cfg.d_phi2;
  const auto k_dim = cfg.d_m + cfg.edge_dim + cfg.d_phi1 + cfg.d_phi2;
  for (std::size_t l = 0; l < cfg.layers; ++l) {
    const auto name = "mae.layer" + std::to_string(l);
    attention_.push_back(
        MultiHeadAttention::create(store, name + ".attn", q_dim, k_dim, k_dim, cfg.heads, rng));
    merge_.push_back(
        Mlp::create(store, name + ".merge", cfg.d_m + q_dim, cfg.d_m, cfg.d_m, rng, cfg.dropout));
  }
}

Var Mae::embed(Tape& tape, const TemporalGraph& g, const MemoryView& memory,
               std::span<const Query> queries, std::uint64_t seed, Rng* dropout_rng) const {
  return layer(cfg_.layers, tape, g, memory, queries, seed, dropout_rng);
}

Var Mae::layer(std::size_t l, Tape& tape, const TemporalGraph& g, const MemoryView& memory,
               std::span<const Query> queries, std::uint64_t seed, Rng* dropout_rng) const {
  const auto b = queries.size();
  if (l == 0) {
    std::vector<NodeId> nodes(b);
    for (std::size_t i = 0; i < b; ++i) nodes[i] = queries[i].node;
    auto h = gather_memory(tape, memory, nodes);
    if (g.node_feat_dim() > 0) {
      if (g.node_feat_dim() != cfg_.d_m) {
        throw DimensionError("node feature width must equal the memory width");
      }
      Tensor x(b, cfg_.d_m);
      for (std::size_t i = 0; i < b; ++i) {
        const auto f = g.node_features(queries[i].node);
        std::copy(f.begin(), f.end(), x.row(i).begin());
      }
      h = ad::add(h, tape.constant(std::move(x)));
    }
    return h;
  }

  const auto k = cfg_.k;
  const auto de = cfg_.edge_dim;
  std::vector<Query> inner(queries.begin(), queries.end());
  std::vector<std::int64_t> nbr_idx(b * k, -1);
  std::vector<std::uint8_t> valid(b * k, 0);
  std::vector<double> dts(b * k, 0.0);
  Tensor edge(b * k, de);
  for (std::size_t i = 0; i < b; ++i) {
    const auto& q = queries[i];
    Rng rng({seed, q.key, 0x3ae0ULL + l});
    const auto sample = neighbors_before(g, q.node, q.horizon, k, cfg_.strategy, rng);
    // Right-align so the most recent neighbour always occupies the last slot.
    const auto offset = k - sample.neighbors.size();
    for (std::size_t j = 0; j < sample.neighbors.size(); ++j) {
      const auto& nb = sample.neighbors[j];
      const auto slot = i * k + offset + j;
      nbr_idx[slot] = static_cast<std::int64_t>(inner.size());
      valid[slot] = 1;
      dts[slot] = q.t - nb.t;
      edge_feature_row(g, nb.event, edge.row(slot));
      inner.push_back({nb.neighbor, q.t, q.horizon, derive_seed({q.key, l, j})});
    }
  }
  const auto h_all = layer(l - 1, tape, g, memory, inner, seed, dropout_rng);
  std::vector<std::int64_t> self_idx(b);
  for (std::size_t i = 0; i < b; ++i) self_idx[i] = static_cast<std::int64_t>(i);
  const auto h_self = ad::gather_rows(h_all, self_idx);
  const auto h_nbr = ad::gather_rows(h_all, nbr_idx);

  const std::vector<double> zeros(b, 0.0);
  const std::array<Var, 3> q_parts{h_self, phi1_(tape, zeros), phi2_(tape, zeros)};
  const std::array<Var, 4> k_parts{h_nbr, tape.constant(std::move(edge)), phi1_(tape, dts),
                                   phi2_(tape, dts)};
  const auto keys = ad::concat_cols(k_parts);
  const auto attended = attention_[l - 1](ad::concat_cols(q_parts), keys, keys, valid, k);
  const std::array<Var, 2> merged{h_self, attended};
  return merge_[l - 1](ad::concat_cols(merged), dropout_rng);
}

}  // namespace tawrmac

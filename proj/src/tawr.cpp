#include "tawrmac/tawr.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>
#include <unordered_map>

#include "tawrmac/errors.hpp"
#include "tawrmac/parallel.hpp"

namespace tawrmac {

RestartSense parse_restart_sense(const std::string& name) {
  if (name == "literal") return RestartSense::kLiteral;
  if (name == "inverted") return RestartSense::kInverted;
  throw ConfigError("unknown restart_sense '" + name + "' (literal|inverted)");
}

std::string to_string(RestartSense s) {
  return s == RestartSense::kLiteral ? "literal" : "inverted";
}

bool restart_drawn(double p, double pr, RestartSense sense) {
  return sense == RestartSense::kLiteral ? p > pr : p < pr;
}

namespace {

std::size_t pick(std::span<const AdjEntry> cands, double alpha, Rng& rng) {
  const auto n = cands.size();
  if (alpha == 0.0 || n == 1) return rng.below(n);
  const double t_max = cands.back().t;
  double total = 0.0;
  for (const auto& c : cands) total += std::exp(alpha * (c.t - t_max));
  double x = rng.uniform() * total;
  for (std::size_t j = 0; j < n; ++j) {
    x -= std::exp(alpha * (cands[j].t - t_max));
    if (x < 0.0) return j;
  }
  return n - 1;
}

}  // namespace

Walk sample_twr(const TemporalGraph& g, NodeId u, double t, double horizon,
                const WalkConfig& cfg, double pr, Rng& rng) {
  if (cfg.w < 1) throw ConfigError("walk length w must be >= 1");
  if (cfg.alpha < 0.0) throw ConfigError("alpha must be >= 0");
  Walk walk;
  walk.steps.assign(cfg.w + 1, WalkStep{});
  walk.steps[0] = {u, t};

  const double p = rng.uniform();
  std::size_t restart_at = 0;
  if (cfg.allow_restart && cfg.w >= 2 && restart_drawn(p, pr, cfg.sense)) {
    restart_at = 1 + rng.below(cfg.w - 1);
    walk.restart_used = true;
    walk.restart_index = restart_at;
  }

  NodeId cur = u < g.num_nodes() ? u : kNullNode;
  double bound = horizon;
  for (std::size_t i = 1; i <= cfg.w; ++i) {
    const double prev_t = walk.steps[i - 1].t;
    if (i == restart_at) {
      walk.steps[i] = {u, prev_t};
      cur = u < g.num_nodes() ? u : kNullNode;
      continue;
    }
    if (cur == kNullNode) {
      walk.steps[i] = {kNullNode, prev_t};
      continue;
    }
    const auto cands = g.history(cur, bound);
    if (cands.empty()) {
      walk.steps[i] = {kNullNode, prev_t};
      cur = kNullNode;
      continue;
    }
    const auto& e = cands[pick(cands, cfg.alpha, rng)];
    walk.steps[i] = {e.neighbor, e.t};
    cur = e.neighbor;
    bound = e.t;
  }
  return walk;
}

std::vector<Walk> sample_walks(const TemporalGraph& g, std::span<const WalkRoot> roots,
                               std::size_t M, const WalkConfig& cfg, std::uint64_t seed,
                               std::size_t threads) {
  if (M == 0) throw ConfigError("number of walks M must be >= 1");
  std::vector<Walk> out(roots.size() * M);
  parallel_for(out.size(), threads, [&](std::size_t i) {
    const auto& root = roots[i / M];
    Rng rng({seed, root.key, i % M});
    out[i] = sample_twr(g, root.node, root.t, root.horizon, cfg, root.pr, rng);
  });
  return out;
}

std::string walk_dump_line(const Walk& walk) {
  std::ostringstream os;
  os.precision(17);
  os << walk.root() << ' ' << walk.steps.front().t << " [";
  for (std::size_t i = 0; i < walk.steps.size(); ++i) {
    if (i > 0) os << ' ';
    const auto& s = walk.steps[i];
    if (s.node == kNullNode) {
      os << '-';
    } else {
      os << s.node;
    }
    os << '@' << s.t;
  }
  os << "] ";
  if (walk.restart_index) {
    os << *walk.restart_index;
  } else {
    os << '-';
  }
  return os.str();
}

std::map<NodeId, PositionalFrequency> positional_frequencies(std::span<const Walk> walks) {
  std::map<NodeId, PositionalFrequency> out;
  if (walks.empty()) return out;
  const auto slots = walks.front().steps.size();
  for (const auto& walk : walks) {
    if (walk.steps.size() != slots) throw DimensionError("walks of unequal length");
    for (std::size_t p = 0; p < slots; ++p) {
      const auto z = walk.steps[p].node;
      if (z == kNullNode) continue;
      auto& v = out[z];
      if (v.empty()) v.assign(slots, 0.0);
      v[p] += 1.0;
    }
  }
  return out;
}

RestartHead RestartHead::create(ParameterStore& store, const std::string& name,
                                std::size_t d_h, Rng& rng) {
  return {Mlp::create(store, name, d_h, d_h, 1, rng)};
}

Var RestartHead::operator()(Var h) const { return ad::sigmoid(mlp(h)); }

IdentityEncoder IdentityEncoder::create(ParameterStore& store, const std::string& name,
                                        std::size_t w, std::size_t d_v, Rng& rng) {
  IdentityEncoder e;
  e.mlp = Mlp::create(store, name, w + 1, d_v, d_v, rng);
  e.slots = w + 1;
  e.d_v = d_v;
  return e;
}

Var IdentityEncoder::operator()(Var fu, Var fv) const { return ad::add(mlp(fu), mlp(fv)); }

AnonymizedBatch anonymize(std::span<const Walk> walks_u, std::span<const Walk> walks_v,
                          std::size_t M) {
  if (M == 0 || walks_u.size() != walks_v.size() || walks_u.size() % M != 0) {
    throw DimensionError("anonymize: expected M walks per root for both roots");
  }
  AnonymizedBatch b;
  b.pairs = walks_u.size() / M;
  b.M = M;
  b.slots = walks_u.empty() ? 0 : walks_u.front().steps.size();
  const auto slots = b.slots;
  const auto n_walks = 2 * walks_u.size();
  b.slot.assign(n_walks * slots, -1);
  b.dt.assign(n_walks * slots, 0.0);
  b.valid.assign(n_walks * slots, 0);

  std::vector<double> fu_rows, fv_rows;
  std::size_t table_rows = 0;
  const std::vector<double> zeros(slots, 0.0);
  for (std::size_t p = 0; p < b.pairs; ++p) {
    const auto wu = walks_u.subspan(p * M, M);
    const auto wv = walks_v.subspan(p * M, M);
    const auto fu = positional_frequencies(wu);
    const auto fv = positional_frequencies(wv);
    std::unordered_map<NodeId, std::int64_t> row_of;
    const auto add_node = [&](NodeId z) {
      if (row_of.contains(z)) return;
      row_of.emplace(z, static_cast<std::int64_t>(table_rows++));
      const auto iu = fu.find(z);
      const auto iv = fv.find(z);
      const auto& a = iu == fu.end() ? zeros : iu->second;
      const auto& c = iv == fv.end() ? zeros : iv->second;
      fu_rows.insert(fu_rows.end(), a.begin(), a.end());
      fv_rows.insert(fv_rows.end(), c.begin(), c.end());
    };
    for (const auto& [z, v] : fu) add_node(z);
    for (const auto& [z, v] : fv) add_node(z);

    for (int side = 0; side < 2; ++side) {
      const auto walks = side == 0 ? wu : wv;
      for (std::size_t m = 0; m < M; ++m) {
        const auto& walk = walks[m];
        if (walk.steps.size() != slots) throw DimensionError("walks of unequal length");
        const auto row = static_cast<std::size_t>(side) * b.pairs * M + p * M + m;
        for (std::size_t s = 0; s < slots; ++s) {
          const auto& st = walk.steps[s];
          if (st.node == kNullNode) continue;
          const auto at = row * slots + s;
          b.slot[at] = row_of.at(st.node);
          b.valid[at] = 1;
          b.dt[at] = s == 0 ? 0.0 : walk.steps[s - 1].t - st.t;
        }
      }
    }
  }
  b.freq_u = Tensor(table_rows, slots, std::move(fu_rows));
  b.freq_v = Tensor(table_rows, slots, std::move(fv_rows));
  return b;
}

WalkQuery parse_walk_query(const std::string& name) {
  if (name == "mean") return WalkQuery::kMean;
  if (name == "per_walk") return WalkQuery::kPerWalk;
  throw ConfigError("unknown walk_query '" + name + "' (mean|per_walk)");
}

std::string to_string(WalkQuery q) { return q == WalkQuery::kMean ? "mean" : "per_walk"; }

WalkEncoder WalkEncoder::create(ParameterStore& store, const std::string& name, std::size_t w,
                                std::size_t d_v, std::size_t d_w, std::size_t heads,
                                const LearnableTimeEncoder& phi1, WalkQuery query, Rng& rng) {
  WalkEncoder e;
  e.identity = IdentityEncoder::create(store, name + ".identity", w, d_v, rng);
  e.gru = GruCell::create(store, name + ".gru", d_v + phi1.dim(), d_w, rng);
  e.attention = MultiHeadAttention::create(store, name + ".attn", d_w, d_w, d_w, heads, rng);
  e.phi1 = phi1;
  e.query = query;
  return e;
}

Var WalkEncoder::operator()(Tape& tape, const AnonymizedBatch& batch) const {
  const auto M = batch.M;
  const auto slots = batch.slots;
  const auto roots = 2 * batch.pairs;
  const auto n = roots * M;
  const auto d_w = out_dim();
  if (n == 0) return tape.constant(0, d_w);
  if (slots != identity.slots) throw DimensionError("walk length differs from the encoder's");

  const auto table = identity(tape.constant(batch.freq_u), tape.constant(batch.freq_v));
  auto h = tape.constant(n, d_w);
  std::vector<std::int64_t> idx(n);
  std::vector<double> dt(n);
  for (std::size_t s = 0; s < slots; ++s) {
    Tensor mask(n, 1);
    bool all_valid = true;
    for (std::size_t i = 0; i < n; ++i) {
      idx[i] = batch.slot[i * slots + s];
      dt[i] = batch.dt[i * slots + s];
      mask.data[i] = batch.valid[i * slots + s];
      all_valid = all_valid && batch.valid[i * slots + s];
    }
    const std::array<Var, 2> x{ad::gather_rows(table, idx), phi1(tape, dt)};
    const auto next = gru(ad::concat_cols(x), h);
    // Padding slots leave the hidden state untouched.
    h = all_valid ? next : ad::add(h, ad::mul_col(ad::sub(next, h), tape.constant(std::move(mask))));
  }

  const std::vector<std::uint8_t> live(n * (query == WalkQuery::kMean ? 1 : M), 1);
  if (query == WalkQuery::kMean) {
    return attention(ad::group_mean_rows(h, M), h, h, live, M);
  }
  // Every walk queries the M walks of its own root; outputs are averaged.
  std::vector<std::int64_t> keys(n * M);
  for (std::size_t i = 0; i < n; ++i) {
    const auto root = i / M;
    for (std::size_t m = 0; m < M; ++m) keys[i * M + m] = static_cast<std::int64_t>(root * M + m);
  }
  const auto kv = ad::gather_rows(h, keys);
  return ad::group_mean_rows(attention(h, kv, kv, live, M), M);
}

}  // namespace tawrmac

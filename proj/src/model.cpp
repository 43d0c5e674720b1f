#include "tawrmac/model.hpp"

#include <array>
#include <charconv>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "tawrmac/errors.hpp"

namespace tawrmac {

RestartSetting parse_restart_mode(const std::string& text) {
  if (text == "learnable") return {RestartMode::kLearnable, 0.0};
  if (text == "degree") return {RestartMode::kDegree, 0.0};
  if (text.rfind("fixed:", 0) == 0) {
    const auto value = text.substr(6);
    double v = 0.0;
    const auto* end = value.data() + value.size();
    const auto [ptr, ec] = std::from_chars(value.data(), end, v);
    if (ec != std::errc() || ptr != end || !(v >= 0.0 && v <= 1.0)) {
      throw ConfigError("restart_mode fixed value must be a number in [0, 1], got '" + value + "'");
    }
    return {RestartMode::kFixed, v};
  }
  throw ConfigError("unknown restart_mode '" + text + "' (learnable|degree|fixed:<v>)");
}

std::string to_string(const RestartSetting& s) {
  switch (s.mode) {
    case RestartMode::kLearnable:
      return "learnable";
    case RestartMode::kDegree:
      return "degree";
    case RestartMode::kFixed: {
      std::ostringstream os;
      os << "fixed:" << s.fixed;
      return os.str();
    }
  }
  return "learnable";
}

Tawrmac::Tawrmac(const ModelConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
  Rng rng({seed, 0x1417ULL});
  phi1_ = LearnableTimeEncoder::create(params_, "phi1", cfg.d_phi1);

  updater_.time_encoder = phi1_;
  updater_.feature_dim = cfg.edge_dim;
  updater_.interaction_rnn = GruCell::create(
      params_, "memory.interaction_rnn",
      MemoryUpdater::message_dim(cfg.d_m, cfg.d_phi1, cfg.edge_dim), cfg.d_m, rng);
  if (cfg.node_feat_dim > 0) {
    updater_.update_rnn = GruCell::create(params_, "memory.update_rnn",
                                          cfg.d_m + cfg.d_phi1 + cfg.node_feat_dim, cfg.d_m, rng);
  }

  MaeConfig mc;
  mc.layers = cfg.layers;
  mc.k = cfg.k;
  mc.heads = cfg.heads;
  mc.d_m = cfg.d_m;
  mc.d_phi1 = cfg.d_phi1;
  mc.d_phi2 = cfg.d_phi2;
  mc.edge_dim = cfg.edge_dim;
  mc.strategy = cfg.strategy;
  mc.dropout = cfg.dropout;
  mae_ = Mae(params_, mc, phi1_, rng);

  cooc_ = CoocEncoder::create(params_, "nce", cfg.r, cfg.d_ce, rng);
  restart_ = RestartHead::create(params_, "restart", cfg.d_m, rng);
  if (cfg.w < 1) throw ConfigError("w must be >= 1");
  if (cfg.M < 1) throw ConfigError("M must be >= 1");
  walks_ = WalkEncoder::create(params_, "tawr", cfg.w, cfg.d_v, cfg.d_w, cfg.walk_heads, phi1_,
                               cfg.walk_query, rng);
  link_head_ = Mlp::create(params_, "link", 2 * embedding_dim(), cfg.d_m, 1, rng, cfg.dropout);
}

std::size_t Tawrmac::embedding_dim() const {
  return cfg_.d_m + cfg_.r * cfg_.d_ce + cfg_.d_w + 1;
}

Var Tawrmac::node_states(Tape& tape, const ForwardContext& ctx,
                         std::span<const Query> queries) const {
  if (cfg_.ablation.no_mae) return tape.constant(queries.size(), cfg_.d_m);
  return mae_.embed(tape, *ctx.graph, ctx.memory, queries, ctx.seed, ctx.dropout_rng);
}

Var Tawrmac::restart_block(Tape& tape, const ForwardContext& ctx, Var h,
                           std::span<const Query> queries) const {
  switch (cfg_.restart.mode) {
    case RestartMode::kLearnable:
      return restart_(h);
    case RestartMode::kFixed:
      return tape.constant(queries.size(), 1, cfg_.restart.fixed);
    case RestartMode::kDegree: {
      if (ctx.degrees == nullptr) throw std::logic_error("degree restart mode needs a DegreeIndex");
      Tensor pr(queries.size(), 1);
      for (std::size_t i = 0; i < queries.size(); ++i) {
        pr.data[i] = ctx.degrees->pr(queries[i].node, queries[i].horizon);
      }
      return tape.constant(std::move(pr));
    }
  }
  return restart_(h);
}

PairEmbedding Tawrmac::embed_pairs(Tape& tape, const ForwardContext& ctx,
                                   std::span<const PairQuery> pairs) const {
  const auto& g = *ctx.graph;
  const auto P = pairs.size();
  std::vector<Query> roots;
  std::unordered_map<std::uint64_t, std::int64_t> slot_of;
  const auto add_root = [&](NodeId n, std::uint64_t key, double t, double horizon) {
    const auto [it, inserted] = slot_of.emplace(key, static_cast<std::int64_t>(roots.size()));
    if (inserted) {
      roots.push_back({n, t, horizon, key});
    } else if (roots[static_cast<std::size_t>(it->second)].node != n) {
      throw std::logic_error("pair query key reused for a different node");
    }
    return it->second;
  };
  std::vector<std::int64_t> iu(P), iv(P);
  for (std::size_t p = 0; p < P; ++p) {
    iu[p] = add_root(pairs[p].u, pairs[p].key_u, pairs[p].t, pairs[p].horizon);
    iv[p] = add_root(pairs[p].v, pairs[p].key_v, pairs[p].t, pairs[p].horizon);
  }

  PairEmbedding out;
  const auto h = node_states(tape, ctx, roots);
  const auto pr = restart_block(tape, ctx, h, roots);

  Var ce_u, ce_v;
  if (cfg_.ablation.no_nce) {
    ce_u = tape.constant(P, cooc_.out_dim());
    ce_v = tape.constant(P, cooc_.out_dim());
  } else {
    std::vector<CoocMatrix> mu, mv;
    mu.reserve(P);
    mv.reserve(P);
    for (const auto& q : pairs) {
      auto [a, b] = build_cooccurrence(g, q.u, q.v, q.horizon, cfg_.r);
      mu.push_back(std::move(a));
      mv.push_back(std::move(b));
    }
    ce_u = cooc_(tape, mu);
    ce_v = cooc_(tape, mv);
  }

  Var enc_u, enc_v, pr_u, pr_v;
  if (cfg_.ablation.no_tawr) {
    enc_u = enc_v = tape.constant(P, cfg_.d_w);
    pr_u = pr_v = tape.constant(P, 1);
  } else {
    const auto& prv = pr.value();
    std::vector<WalkRoot> wr(roots.size());
    for (std::size_t i = 0; i < roots.size(); ++i) {
      wr[i] = {roots[i].node, roots[i].t, roots[i].horizon, prv.data[i], roots[i].key};
    }
    WalkConfig wc{cfg_.w, cfg_.alpha, cfg_.sense, !cfg_.ablation.no_restart};
    const auto walks = sample_walks(g, wr, cfg_.M, wc, ctx.seed, cfg_.threads);
    const auto M = cfg_.M;
    out.walks_u.reserve(P * M);
    out.walks_v.reserve(P * M);
    out.pr_u.resize(P);
    for (std::size_t p = 0; p < P; ++p) {
      const auto a = static_cast<std::size_t>(iu[p]);
      const auto b = static_cast<std::size_t>(iv[p]);
      out.walks_u.insert(out.walks_u.end(), walks.begin() + a * M, walks.begin() + (a + 1) * M);
      out.walks_v.insert(out.walks_v.end(), walks.begin() + b * M, walks.begin() + (b + 1) * M);
      out.pr_u[p] = prv.data[a];
    }
    const auto enc = walks_(tape, anonymize(out.walks_u, out.walks_v, M));
    std::vector<std::int64_t> first(P), second(P);
    for (std::size_t p = 0; p < P; ++p) {
      first[p] = static_cast<std::int64_t>(p);
      second[p] = static_cast<std::int64_t>(P + p);
    }
    enc_u = ad::gather_rows(enc, first);
    enc_v = ad::gather_rows(enc, second);
    if (cfg_.ablation.no_restart) {
      pr_u = pr_v = tape.constant(P, 1);
    } else {
      pr_u = ad::gather_rows(pr, iu);
      pr_v = ad::gather_rows(pr, iv);
    }
  }

  const std::array<Var, 4> bu{ad::gather_rows(h, iu), ce_u, enc_u, pr_u};
  const std::array<Var, 4> bv{ad::gather_rows(h, iv), ce_v, enc_v, pr_v};
  out.u = ad::concat_cols(bu);
  out.v = ad::concat_cols(bv);
  return out;
}

Var Tawrmac::link_probability(Var emb_u, Var emb_v, Rng* dropout_rng) const {
  if (emb_u.cols() != embedding_dim() || emb_v.cols() != embedding_dim()) {
    throw DimensionError("link head: embedding width mismatch");
  }
  const std::array<Var, 2> parts{emb_u, emb_v};
  return ad::sigmoid(link_head_(ad::concat_cols(parts), dropout_rng));
}

NodeClassifier::NodeClassifier(std::size_t emb_dim, std::size_t hidden, std::size_t classes_,
                               std::uint64_t seed)
    : classes(classes_) {
  if (classes_ < 2) throw ConfigError("node classification needs at least 2 classes");
  Rng rng({seed, 0x7c1aULL});
  mlp = Mlp::create(params, "node_head", emb_dim, hidden, classes_, rng);
}

Var NodeClassifier::operator()(Var emb) const { return ad::softmax_rows(mlp(emb)); }

}  // namespace tawrmac

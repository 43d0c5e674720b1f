#include "tawrmac/trainer.hpp"

#include <cmath>
#include <sstream>

#include "tawrmac/errors.hpp"

namespace tawrmac {

NeighborCutoff parse_neighbor_cutoff(const std::string& name) {
  if (name == "batch_start") return NeighborCutoff::kBatchStart;
  if (name == "event") return NeighborCutoff::kEvent;
  throw ConfigError("unknown neighbor_cutoff '" + name + "' (batch_start|event)");
}

std::string to_string(NeighborCutoff c) {
  return c == NeighborCutoff::kBatchStart ? "batch_start" : "event";
}

std::vector<IndexRange> make_batches(IndexRange split, std::size_t batch_size) {
  if (batch_size == 0) throw ConfigError("batch_size must be >= 1");
  std::vector<IndexRange> out;
  for (auto b = split.begin; b < split.end; b += batch_size) {
    out.push_back({b, std::min(split.end, b + batch_size)});
  }
  return out;
}

Streamer::Streamer(const Tawrmac& model, const TemporalGraph& graph, const DegreeIndex& degrees,
                   MemoryStore& memory, StreamConfig cfg)
    : model_(model), graph_(graph), degrees_(degrees), memory_(memory), cfg_(cfg) {}

BatchOutput Streamer::step(IndexRange batch, const Negatives& negatives, std::uint64_t pass_key,
                           Adam* opt, Rng* dropout_rng) {
  const auto n = batch.size();
  if (negatives.src.size() != n || negatives.dst.size() != n) {
    throw std::invalid_argument("one negative per positive is required");
  }
  Tape tape(opt != nullptr);
  MemoryFlush flush;
  if (model_.uses_memory()) {
    flush = flush_messages(tape, memory_, memory_.take_pending(), model_.memory_updater());
  }

  const auto& events = graph_.events();
  const double batch_start = events[batch.begin].t;
  std::vector<PairQuery> pairs(2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto e = batch.begin + i;
    const auto& ev = events[e];
    const double horizon = cfg_.cutoff == NeighborCutoff::kBatchStart ? batch_start : ev.t;
    const auto src_key = derive_seed({e, 0});
    pairs[i] = {ev.src, ev.dst, ev.t, horizon, src_key, derive_seed({e, 1})};
    const auto neg_src = negatives.src[i];
    pairs[n + i] = {neg_src, negatives.dst[i], ev.t, horizon,
                    neg_src == ev.src ? src_key : derive_seed({e, 2}), derive_seed({e, 3})};
  }

  ForwardContext ctx;
  ctx.graph = &graph_;
  ctx.memory = {&memory_, &flush};
  ctx.degrees = &degrees_;
  ctx.seed = derive_seed({cfg_.seed, pass_key});
  ctx.dropout_rng = dropout_rng;
  const auto emb = model_.embed_pairs(tape, ctx, pairs);
  const auto probs = model_.link_probability(emb.u, emb.v, dropout_rng);

  std::vector<double> labels(2 * n, 0.0);
  std::fill(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(n), 1.0);
  const auto loss = bce_loss(probs, labels);

  BatchOutput out;
  out.loss = loss.value().data[0];
  if (!std::isfinite(out.loss)) {
    std::ostringstream os;
    os << "non-finite loss " << out.loss << " on events [" << batch.begin << ", " << batch.end
       << ")";
    throw NumericError(os.str());
  }
  const auto& p = probs.value().data;
  out.pos.assign(p.begin(), p.begin() + static_cast<std::ptrdiff_t>(n));
  out.neg.assign(p.begin() + static_cast<std::ptrdiff_t>(n), p.end());
  if (cfg_.keep_embeddings) {
    const auto& u = emb.u.value();
    const auto& v = emb.v.value();
    out.emb_src = Tensor(n, u.cols, std::vector<double>(u.data.begin(), u.data.begin() + static_cast<std::ptrdiff_t>(n * u.cols)));
    out.emb_dst = Tensor(n, v.cols, std::vector<double>(v.data.begin(), v.data.begin() + static_cast<std::ptrdiff_t>(n * v.cols)));
  }
  if (cfg_.keep_restart && !emb.pr_u.empty()) {
    out.pr_src.assign(emb.pr_u.begin(), emb.pr_u.begin() + static_cast<std::ptrdiff_t>(n));
  }

  if (opt != nullptr) {
    tape.backward(loss);
    opt->step();
  }

  if (model_.uses_memory()) {
    std::vector<double> feat(model_.config().edge_dim);
    for (std::size_t e = batch.begin; e < batch.end; ++e) {
      const auto& ev = events[e];
      edge_feature_row(graph_, e, feat);
      auto [a, b] = compute_interaction_messages(memory_, ev.src, ev.dst, ev.t, feat);
      memory_.stash(std::move(a));
      memory_.stash(std::move(b));
    }
  }
  return out;
}

SplitResult Streamer::run(IndexRange split, NegativeSampler& sampler, std::uint64_t pass_key,
                          Adam* opt, const ScoreFilter& filter,
                          const std::function<void(IndexRange, const BatchOutput&)>& on_batch) {
  SplitResult res;
  const auto& events = graph_.events();
  std::size_t b = 0;
  for (const auto& batch : make_batches(split, cfg_.batch_size)) {
    Rng neg_rng({cfg_.seed, pass_key, b, 0x4e47ULL});
    Rng drop_rng({cfg_.seed, pass_key, b, 0xd7ULL});
    const auto negs = sampler.sample(batch, neg_rng);
    res.fallbacks += negs.fallbacks;
    const auto out = step(batch, negs, pass_key, opt, opt != nullptr ? &drop_rng : nullptr);
    res.loss += out.loss;
    res.batch_losses.push_back(out.loss);
    ++res.batches;

    std::vector<double> scores;
    std::vector<int> labels;
    for (std::size_t i = 0; i < batch.size(); ++i) {
      if (filter && !filter(events[batch.begin + i])) continue;
      scores.push_back(out.pos[i]);
      labels.push_back(1);
    }
    const auto kept = scores.size();
    for (std::size_t i = 0; i < batch.size(); ++i) {
      if (filter && !filter(events[batch.begin + i])) continue;
      scores.push_back(out.neg[i]);
      labels.push_back(0);
    }
    if (kept > 0) {
      res.ap += average_precision(scores, labels);
      res.auc += auc_roc(scores, labels);
      ++res.scored_batches;
    }
    if (on_batch) on_batch(batch, out);
    ++b;
  }
  if (res.batches > 0) res.loss /= static_cast<double>(res.batches);
  if (res.scored_batches > 0) {
    res.ap /= static_cast<double>(res.scored_batches);
    res.auc /= static_cast<double>(res.scored_batches);
  } else {
    res.ap = res.auc = std::nan("");
  }
  return res;
}

}  // namespace tawrmac

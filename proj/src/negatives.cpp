#include "tawrmac/negatives.hpp"

#include <algorithm>

#include "tawrmac/errors.hpp"

namespace tawrmac {

NegStrategy parse_neg_strategy(const std::string& name) {
  if (name == "random") return NegStrategy::kRandom;
  if (name == "historical") return NegStrategy::kHistorical;
  if (name == "inductive") return NegStrategy::kInductive;
  throw ConfigError("unknown negative sampling strategy '" + name + "'");
}

std::string to_string(NegStrategy s) {
  switch (s) {
    case NegStrategy::kRandom:
      return "random";
    case NegStrategy::kHistorical:
      return "historical";
    case NegStrategy::kInductive:
      return "inductive";
  }
  return "random";
}

NegativeSampler::NegativeSampler(NegStrategy strategy, std::span<const Event> events,
                                 IndexRange eval_split)
    : strategy_(strategy), events_(events), split_(eval_split) {
  dst_space_.reserve(events.size());
  for (const auto& e : events) dst_space_.push_back(e.dst);
  std::sort(dst_space_.begin(), dst_space_.end());
  dst_space_.erase(std::unique(dst_space_.begin(), dst_space_.end()), dst_space_.end());
  cursor_ = strategy == NegStrategy::kInductive ? eval_split.begin : 0;
}

void NegativeSampler::advance(std::size_t batch_begin) {
  if (strategy_ == NegStrategy::kRandom) return;
  for (; cursor_ < batch_begin && cursor_ < events_.size(); ++cursor_) {
    const auto& e = events_[cursor_];
    if (pool_set_.insert(pair_key(e.src, e.dst)).second) pool_.emplace_back(e.src, e.dst);
  }
}

NodeId NegativeSampler::random_dst(NodeId src, const std::unordered_set<std::uint64_t>& positives,
                                   Rng& rng) const {
  NodeId v = dst_space_[rng.below(dst_space_.size())];
  for (int tries = 0; tries < 16 && positives.contains(pair_key(src, v)); ++tries) {
    v = dst_space_[rng.below(dst_space_.size())];
  }
  if (!positives.contains(pair_key(src, v))) return v;
  for (auto d : dst_space_) {
    if (!positives.contains(pair_key(src, d))) return d;
  }
  return v;
}

Negatives NegativeSampler::sample(IndexRange batch, Rng& rng) {
  if (dst_space_.empty()) throw std::logic_error("negative sampler over an empty stream");
  advance(batch.begin);
  std::unordered_set<std::uint64_t> positives;
  for (std::size_t i = batch.begin; i < batch.end; ++i) {
    positives.insert(pair_key(events_[i].src, events_[i].dst));
  }
  Negatives out;
  out.src.reserve(batch.size());
  out.dst.reserve(batch.size());

  // Pool members that are not current positives, in pool order.
  std::vector<std::size_t> usable;
  if (strategy_ != NegStrategy::kRandom) {
    usable.reserve(pool_.size());
    for (std::size_t j = 0; j < pool_.size(); ++j) {
      if (!positives.contains(pair_key(pool_[j].first, pool_[j].second))) usable.push_back(j);
    }
  }
  for (std::size_t i = batch.begin; i < batch.end; ++i) {
    const auto src = events_[i].src;
    if (strategy_ == NegStrategy::kRandom || usable.empty()) {
      if (strategy_ != NegStrategy::kRandom) ++out.fallbacks;
      out.src.push_back(src);
      out.dst.push_back(random_dst(src, positives, rng));
    } else {
      const auto& pr = pool_[usable[rng.below(usable.size())]];
      out.src.push_back(pr.first);
      out.dst.push_back(pr.second);
    }
  }
  return out;
}

}  // namespace tawrmac

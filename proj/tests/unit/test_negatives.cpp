#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "tawrmac/errors.hpp"
#include "tawrmac/negatives.hpp"
#include "tawrmac/synthetic.hpp"
#include "tawrmac/trainer.hpp"

using namespace tawrmac;

namespace {

Event ev(NodeId s, NodeId d, double t) {
  Event e;
  e.src = s;
  e.dst = d;
  e.t = t;
  return e;
}

std::vector<Event> random_stream(Rng& rng, std::size_t n, NodeId users, NodeId items) {
  std::vector<Event> out;
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back(ev(static_cast<NodeId>(rng.below(users)), users + static_cast<NodeId>(rng.below(items)),
                     static_cast<double>(i)));
  }
  return out;
}

std::set<std::pair<NodeId, NodeId>> pairs_in(std::span<const Event> events, std::size_t lo, std::size_t hi) {
  std::set<std::pair<NodeId, NodeId>> out;
  for (std::size_t i = lo; i < hi; ++i) out.emplace(events[i].src, events[i].dst);
  return out;
}

}  // namespace

TEST(Negatives, ParseNames) {
  EXPECT_EQ(parse_neg_strategy("historical"), NegStrategy::kHistorical);
  EXPECT_EQ(to_string(NegStrategy::kInductive), "inductive");
  EXPECT_THROW(parse_neg_strategy("adversarial"), ConfigError);
}

TEST(Negatives, NeverEqualBatchPositives) {
  Rng data(1);
  const auto events = random_stream(data, 600, 5, 8);  // small id space forces collisions
  const IndexRange test{400, 600};
  for (auto strategy : {NegStrategy::kRandom, NegStrategy::kHistorical, NegStrategy::kInductive}) {
    NegativeSampler sampler(strategy, events, test);
    Rng rng(2);
    for (const auto& b : make_batches(test, 20)) {
      const auto pos = pairs_in(events, b.begin, b.end);
      const auto neg = sampler.sample(b, rng);
      ASSERT_EQ(neg.src.size(), b.size());
      for (std::size_t i = 0; i < neg.src.size(); ++i) {
        EXPECT_FALSE(pos.contains({neg.src[i], neg.dst[i]})) << to_string(strategy);
      }
    }
  }
}

TEST(Negatives, RandomKeepsSourceAndUsesDestinationSpace) {
  const auto log = make_synthetic_stream({.users = 6, .items = 6, .group_size = 3, .events = 300});
  ASSERT_TRUE(log.bipartite);
  const auto& events = log.events;
  NegativeSampler sampler(NegStrategy::kRandom, events, {200, 300});
  std::set<NodeId> dst_ids;
  for (const auto& e : events) dst_ids.insert(e.dst);
  EXPECT_EQ(std::set<NodeId>(sampler.destinations().begin(), sampler.destinations().end()), dst_ids);
  for (NodeId v : sampler.destinations()) EXPECT_GE(v, log.first_dst_id);
  Rng rng(3);
  for (const auto& b : make_batches({200, 300}, 25)) {
    const auto neg = sampler.sample(b, rng);
    for (std::size_t i = 0; i < b.size(); ++i) {
      EXPECT_EQ(neg.src[i], events[b.begin + i].src);
      EXPECT_TRUE(dst_ids.contains(neg.dst[i]));
    }
  }
}

TEST(Negatives, HistoricalFirstBatchFallsBack) {
  Rng data(4);
  const auto events = random_stream(data, 100, 6, 6);
  NegativeSampler sampler(NegStrategy::kHistorical, events, {0, 100});
  Rng rng(5);
  const auto first = sampler.sample({0, 10}, rng);
  EXPECT_EQ(first.fallbacks, 10u);
  const auto second = sampler.sample({10, 20}, rng);
  EXPECT_LT(second.fallbacks, 10u);
}

TEST(Negatives, PoolsMatchBruteForce) {
  Rng data(6);
  const auto events = random_stream(data, 500, 8, 8);
  const IndexRange test{350, 500};
  for (auto strategy : {NegStrategy::kHistorical, NegStrategy::kInductive}) {
    NegativeSampler sampler(strategy, events, test);
    Rng rng(7);
    for (const auto& b : make_batches(test, 30)) {
      const auto neg = sampler.sample(b, rng);
      const std::size_t lo = strategy == NegStrategy::kInductive ? test.begin : 0;
      const auto expected = pairs_in(events, lo, b.begin);
      const std::set<std::pair<NodeId, NodeId>> pool(sampler.pool().begin(), sampler.pool().end());
      EXPECT_EQ(pool, expected);
      EXPECT_EQ(sampler.pool().size(), expected.size());  // no duplicates
      const auto pos = pairs_in(events, b.begin, b.end);
      for (std::size_t i = 0; i < neg.src.size(); ++i) {
        if (neg.fallbacks > 0) continue;
        EXPECT_TRUE(expected.contains({neg.src[i], neg.dst[i]}));
        EXPECT_FALSE(pos.contains({neg.src[i], neg.dst[i]}));
      }
    }
  }
}

TEST(Negatives, SameRngSameDraws) {
  Rng data(8);
  const auto events = random_stream(data, 300, 10, 10);
  const auto draw = [&](NegStrategy s) {
    NegativeSampler sampler(s, events, {200, 300});
    Rng rng(9);
    std::vector<NodeId> out;
    for (const auto& b : make_batches({200, 300}, 20)) {
      const auto n = sampler.sample(b, rng);
      out.insert(out.end(), n.src.begin(), n.src.end());
      out.insert(out.end(), n.dst.begin(), n.dst.end());
    }
    return out;
  };
  for (auto s : {NegStrategy::kRandom, NegStrategy::kHistorical, NegStrategy::kInductive}) {
    EXPECT_EQ(draw(s), draw(s));
  }
}

#include <gtest/gtest.h>

#include <cmath>

#include "tawrmac/errors.hpp"
#include "tawrmac/memory.hpp"

using namespace tawrmac;

namespace {

MemoryUpdater make_updater(ParameterStore& store, std::size_t d_m, std::size_t d_t,
                           std::size_t feat, Rng& rng) {
  MemoryUpdater u;
  u.time_encoder = LearnableTimeEncoder::create(store, "phi1", d_t);
  u.feature_dim = feat;
  u.interaction_rnn =
      GruCell::create(store, "rnn", MemoryUpdater::message_dim(d_m, d_t, feat), d_m, rng);
  return u;
}

void zero_all(ParameterStore& store) {
  for (auto* p : store.all()) std::fill(p->value.data.begin(), p->value.data.end(), 0.0);
}

}  // namespace

TEST(Messages, FreshNodes) {
  MemoryStore store(4, 3);
  const std::vector<double> feat{0.5};
  const auto [a, b] = compute_interaction_messages(store, 0, 2, 7.0, feat);
  EXPECT_EQ(a.node, 0u);
  EXPECT_EQ(b.node, 2u);
  EXPECT_EQ(a.dt, 0.0);
  EXPECT_EQ(a.self_memory, std::vector<double>(3, 0.0));
  EXPECT_EQ(a.other_memory, std::vector<double>(3, 0.0));
  EXPECT_EQ(a.features, feat);
  EXPECT_DOUBLE_EQ(a.t, 7.0);
}

TEST(Messages, SymmetricRoleSwap) {
  MemoryStore store(3, 2);
  store.write(0, std::vector<double>{1.0, 0.0}, 1.0);
  store.write(1, std::vector<double>{0.0, 1.0}, 1.0);
  const std::vector<double> feat{};
  const auto [a, b] = compute_interaction_messages(store, 0, 1, 1.0, feat);
  // d_m = 2, memories [1,0] and [0,1], dt = 0 -> msg_u = [1,0 | 0,1 | phi(0)]
  EXPECT_EQ(a.self_memory, (std::vector<double>{1.0, 0.0}));
  EXPECT_EQ(a.other_memory, (std::vector<double>{0.0, 1.0}));
  EXPECT_EQ(a.dt, 0.0);
  EXPECT_EQ(b.self_memory, a.other_memory);
  EXPECT_EQ(b.other_memory, a.self_memory);
  EXPECT_EQ(a.features, b.features);
}

TEST(Apply, ZeroGruHalvesTouchedRows) {
  ParameterStore params;
  Rng rng(1);
  const auto up = make_updater(params, 3, 2, 1, rng);
  zero_all(params);
  MemoryStore store(4, 3);
  store.write(0, std::vector<double>{2.0, -4.0, 1.0}, 1.0);
  store.write(1, std::vector<double>{6.0, 0.0, 8.0}, 1.0);
  store.write(3, std::vector<double>{1.0, 1.0, 1.0}, 1.0);
  const std::vector<double> feat{0.0};
  auto [a, b] = compute_interaction_messages(store, 0, 1, 2.0, feat);
  apply_messages(store, {a, b}, up);
  EXPECT_EQ(std::vector<double>(store.row(0).begin(), store.row(0).end()), (std::vector<double>{1.0, -2.0, 0.5}));
  EXPECT_EQ(std::vector<double>(store.row(1).begin(), store.row(1).end()), (std::vector<double>{3.0, 0.0, 4.0}));
  EXPECT_EQ(std::vector<double>(store.row(3).begin(), store.row(3).end()), (std::vector<double>{1.0, 1.0, 1.0}));
  EXPECT_DOUBLE_EQ(store.last_update(0), 2.0);
  EXPECT_DOUBLE_EQ(store.last_update(3), 1.0);
}

TEST(Apply, EmptyListIsIdentity) {
  ParameterStore params;
  Rng rng(2);
  const auto up = make_updater(params, 2, 2, 1, rng);
  MemoryStore store(2, 2);
  store.write(1, std::vector<double>{0.3, 0.4}, 3.0);
  const auto before = store.table();
  apply_messages(store, {}, up);
  EXPECT_EQ(store.table(), before);
}

TEST(Apply, KeepsLatestMessagePerNode) {
  ParameterStore params;
  Rng rng(3);
  const auto up = make_updater(params, 3, 2, 1, rng);
  MemoryStore base(3, 3);
  const std::vector<double> f1{0.1}, f2{0.9};
  auto [a1, b1] = compute_interaction_messages(base, 0, 1, 1.0, f1);
  auto [a2, b2] = compute_interaction_messages(base, 0, 2, 2.0, f2);

  MemoryStore both = base, only_latest = base;
  apply_messages(both, {a1, a2}, up);
  apply_messages(only_latest, {a2}, up);
  EXPECT_EQ(std::vector<double>(both.row(0).begin(), both.row(0).end()),
            std::vector<double>(only_latest.row(0).begin(), only_latest.row(0).end()));
  EXPECT_DOUBLE_EQ(both.last_update(0), 2.0);
}

TEST(Apply, StaleMessageIsCausalityError) {
  ParameterStore params;
  Rng rng(4);
  const auto up = make_updater(params, 2, 2, 1, rng);
  MemoryStore store(2, 2);
  store.write(0, std::vector<double>{0.0, 0.0}, 5.0);
  RawMessage m;
  m.node = 0;
  m.t = 4.0;
  m.self_memory = {0.0, 0.0};
  m.other_memory = {0.0, 0.0};
  m.features = {0.0};
  EXPECT_THROW(apply_messages(store, {m}, up), CausalityError);
}

TEST(Read, Contract) {
  MemoryStore store(3, 2);
  auto r = store.read(2, 10.0);
  EXPECT_EQ(r.memory, (std::vector<double>{0.0, 0.0}));
  EXPECT_EQ(r.dt, 0.0);
  store.write(2, std::vector<double>{1.0, 2.0}, 5.0);
  r = store.read(2, 7.0);
  EXPECT_DOUBLE_EQ(r.dt, 2.0);
  const auto again = store.read(2, 7.0);
  EXPECT_EQ(r.memory, again.memory);
  EXPECT_EQ(r.dt, again.dt);
  EXPECT_EQ(store.last_update(0), kNeverUpdated);
}

TEST(Stash, KeepsLatestByTimestamp) {
  MemoryStore store(2, 1);
  RawMessage m;
  m.node = 1;
  m.t = 3.0;
  m.features = {1.0};
  store.stash(m);
  m.t = 2.0;
  m.features = {2.0};
  store.stash(m);
  m.t = 3.0;
  m.features = {3.0};
  store.stash(m);  // tie: later call wins
  const auto pending = store.take_pending();
  ASSERT_EQ(pending.size(), 1u);
  EXPECT_EQ(pending[0].features, std::vector<double>{3.0});
  EXPECT_TRUE(store.take_pending().empty());
}

TEST(Flush, GradientReachesGruAndTimeEncoder) {
  ParameterStore params;
  Rng rng(5);
  const auto up = make_updater(params, 3, 2, 1, rng);
  MemoryStore base(4, 3);
  for (NodeId u = 0; u < 4; ++u) base.write(u, std::vector<double>{0.1 * u, -0.2, 0.3}, 1.0);
  const std::vector<double> feat{0.5};
  auto [a, b] = compute_interaction_messages(base, 0, 3, 4.0, feat);
  const std::vector<RawMessage> msgs{a, b};
  const auto all = params.trainable();
  const double err = grad_check(
      [&](Tape& t) {
        MemoryStore m = base;
        const auto flush = flush_messages(t, m, msgs, up);
        return ad::sum_all(ad::mul(flush.rows, flush.rows));
      },
      all);
  EXPECT_LE(err, 1e-4);
}

TEST(Replay, Deterministic) {
  ParameterStore params;
  Rng rng(6);
  const auto up = make_updater(params, 4, 3, 1, rng);
  const auto replay = [&] {
    MemoryStore store(10, 4);
    Rng events(42);
    for (int b = 0; b < 20; ++b) {
      apply_messages(store, store.take_pending(), up);
      for (int i = 0; i < 5; ++i) {
        const auto s = static_cast<NodeId>(events.below(10));
        const auto d = static_cast<NodeId>(events.below(10));
        const std::vector<double> feat{events.uniform()};
        auto [x, y] = compute_interaction_messages(store, s, d, b * 10.0 + i, feat);
        store.stash(std::move(x));
        store.stash(std::move(y));
      }
    }
    return store.table();
  };
  EXPECT_EQ(replay(), replay());
}

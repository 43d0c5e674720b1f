#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "tawrmac/metrics.hpp"
#include "oracles.hpp"

using namespace tawrmac;

namespace {

void random_instance(Rng& rng, std::vector<double>& s, std::vector<int>& y) {
  const std::size_t n = 2 + rng.below(40);
  s.resize(n);
  y.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    s[i] = static_cast<double>(rng.below(8)) / 8.0;  // coarse grid: plenty of ties
    y[i] = static_cast<int>(rng.below(2));
  }
  y[0] = 1;
  y[1] = 0;
}

}  // namespace

TEST(AveragePrecision, HandExample) {
  const std::vector<double> s{0.9, 0.8, 0.7};
  const std::vector<int> y{1, 0, 1};
  EXPECT_NEAR(average_precision(s, y, TieMode::kStable), (1.0 + 2.0 / 3.0) / 2.0, 1e-15);
  EXPECT_NEAR(average_precision(s, y, TieMode::kGrouped), (1.0 + 2.0 / 3.0) / 2.0, 1e-15);
}

TEST(AveragePrecision, PerfectRankingAndErrors) {
  const std::vector<double> s{0.9, 0.8, 0.2, 0.1};
  const std::vector<int> y{1, 1, 0, 0};
  EXPECT_DOUBLE_EQ(average_precision(s, y), 1.0);
  const std::vector<int> none{0, 0, 0, 0};
  EXPECT_THROW(average_precision(s, none), std::invalid_argument);
}

TEST(AveragePrecision, TieModesDiffer) {
  const std::vector<double> s{0.5, 0.5};
  const std::vector<int> y{0, 1};
  EXPECT_DOUBLE_EQ(average_precision(s, y, TieMode::kStable), 0.5);
  EXPECT_DOUBLE_EQ(average_precision(s, y, TieMode::kGrouped), 0.5);
  const std::vector<double> s3{0.5, 0.5, 0.1};
  const std::vector<int> y3{0, 1, 1};
  const std::vector<int> y4{1, 0, 1};
  EXPECT_NEAR(average_precision(s3, y4, TieMode::kStable), (1.0 + 2.0 / 3.0) / 2.0, 1e-15);
  EXPECT_NEAR(average_precision(s3, y4, TieMode::kGrouped), (0.5 + 2.0 / 3.0) / 2.0, 1e-15);
  EXPECT_NEAR(average_precision(s3, y3, TieMode::kStable), (0.5 + 2.0 / 3.0) / 2.0, 1e-15);
}

TEST(AveragePrecision, MatchesOracle) {
  Rng rng(1);
  std::vector<double> s;
  std::vector<int> y;
  for (int rep = 0; rep < 1000; ++rep) {
    random_instance(rng, s, y);
    ASSERT_NEAR(average_precision(s, y, TieMode::kStable), oracle::average_precision(s, y, false), 1e-12);
    ASSERT_NEAR(average_precision(s, y, TieMode::kGrouped), oracle::average_precision(s, y, true), 1e-12);
  }
}

TEST(Auc, HandExampleAndOracle) {
  const std::vector<double> s{0.9, 0.8, 0.7};
  const std::vector<int> y{1, 0, 1};
  EXPECT_DOUBLE_EQ(auc_roc(s, y), 0.5);
  const std::vector<int> sep{1, 1, 0};
  EXPECT_DOUBLE_EQ(auc_roc(s, sep), 1.0);
  const std::vector<int> one{1, 1, 1};
  EXPECT_THROW(auc_roc(s, one), std::invalid_argument);

  Rng rng(2);
  std::vector<double> rs;
  std::vector<int> ry;
  for (int rep = 0; rep < 1000; ++rep) {
    random_instance(rng, rs, ry);
    ASSERT_NEAR(auc_roc(rs, ry), oracle::auc(rs, ry), 1e-12);
  }
}

TEST(MacroAuc, AveragesClasses) {
  // two classes, column 1 perfectly separates, column 0 is its mirror
  const std::vector<double> probs{0.9, 0.1, 0.2, 0.8, 0.7, 0.3, 0.4, 0.6};
  const std::vector<int> labels{0, 1, 0, 1};
  EXPECT_DOUBLE_EQ(macro_auc(probs, 2, labels), 1.0);
}

TEST(Spearman, MonotoneAndOracle) {
  const std::vector<double> x{1, 2, 3, 4, 5};
  const std::vector<double> neg{-1, -2, -3, -4, -5};
  EXPECT_NEAR(spearman_rho(x, x).rho, 1.0, 1e-15);
  EXPECT_NEAR(spearman_rho(x, neg).rho, -1.0, 1e-15);
  EXPECT_LT(spearman_rho(x, x).p_value, 1e-6);
  const std::vector<double> shorter{1, 2};
  EXPECT_THROW(spearman_rho(x, shorter), std::invalid_argument);

  Rng rng(3);
  for (int rep = 0; rep < 1000; ++rep) {
    const std::size_t n = 3 + rng.below(30);
    std::vector<double> a(n), b(n);
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = static_cast<double>(rng.below(10));
      b[i] = rng.uniform();
    }
    if (std::all_of(a.begin(), a.end(), [&](double v) { return v == a[0]; })) a[0] += 1.0;
    ASSERT_EQ(average_ranks(a), oracle::ranks(a));
    ASSERT_NEAR(spearman_rho(a, b).rho, oracle::spearman(a, b), 1e-12);
  }
}

TEST(EdgeBank, Membership) {
  EdgeBank bank;
  bank.observe(1, 2);
  EXPECT_EQ(bank.predict(1, 2), 1.0);
  EXPECT_EQ(bank.predict(2, 1), 0.0);
  EXPECT_EQ(bank.predict(3, 4), 0.0);
  bank.observe(1, 2);
  EXPECT_EQ(bank.size(), 1u);
}

namespace {
Event ev(NodeId s, NodeId d, double t) {
  Event e;
  e.src = s;
  e.dst = d;
  e.t = t;
  return e;
}
}  // namespace

TEST(DegreePr, HandExample) {
  // node degrees 1, 2, 4: star around node 2 plus an edge 1-5
  const auto g = build_graph({ev(2, 0, 1), ev(2, 1, 2), ev(2, 3, 3), ev(2, 4, 4), ev(1, 5, 5)});
  EXPECT_DOUBLE_EQ(degree_based_pr(g, 0), 0.75);
  EXPECT_DOUBLE_EQ(degree_based_pr(g, 1), 0.5);
  EXPECT_DOUBLE_EQ(degree_based_pr(g, 2), 0.0);
  EXPECT_DOUBLE_EQ(degree_based_pr(build_graph({}, 0, 3), 1), 1.0);
  const auto g2 = build_graph({ev(0, 1, 1)}, 0, 3);
  EXPECT_DOUBLE_EQ(degree_based_pr(g2, 2), 1.0);
}

TEST(DegreePr, CausalIndexMatchesTruncatedGraph) {
  Rng rng(4);
  std::vector<Event> events;
  for (int i = 0; i < 100; ++i) {
    events.push_back(ev(static_cast<NodeId>(rng.below(10)), static_cast<NodeId>(rng.below(10)), i / 3));
  }
  const auto g = build_graph(events, 0, 10);
  const DegreeIndex index(g);
  for (double h : {0.0, 1.0, 5.0, 17.0, 33.0, 40.0}) {
    std::vector<Event> prefix;
    for (const auto& e : events)
      if (e.t < h) prefix.push_back(e);
    const auto truncated = build_graph(prefix, 0, 10);
    for (NodeId u = 0; u < 10; ++u) EXPECT_DOUBLE_EQ(index.pr(u, h), degree_based_pr(truncated, u)) << h;
  }
}

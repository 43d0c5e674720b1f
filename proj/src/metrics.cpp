#include "tawrmac/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <boost/math/distributions/students_t.hpp>

namespace tawrmac {
namespace {

void check_binary(std::span<const double> scores, std::span<const int> labels,
                  std::size_t& pos, std::size_t& neg) {
  if (scores.size() != labels.size()) throw std::invalid_argument("scores/labels length mismatch");
  pos = neg = 0;
  for (int y : labels) {
    if (y == 1) {
      ++pos;
    } else if (y == 0) {
      ++neg;
    } else {
      throw std::invalid_argument("labels must be 0 or 1");
    }
  }
}

std::vector<std::size_t> order_desc(std::span<const double> scores) {
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return idx;
}

}  // namespace

double average_precision(std::span<const double> scores, std::span<const int> labels,
                         TieMode ties) {
  std::size_t pos = 0, neg = 0;
  check_binary(scores, labels, pos, neg);
  if (pos == 0) throw std::invalid_argument("average precision needs at least one positive");
  const auto idx = order_desc(scores);
  double ap = 0.0;
  std::size_t tp = 0, seen = 0;
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i + 1;
    if (ties == TieMode::kGrouped) {
      while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) ++j;
    }
    std::size_t gained = 0;
    for (std::size_t q = i; q < j; ++q) gained += labels[idx[q]] == 1;
    tp += gained;
    seen += j - i;
    if (gained > 0) {
      ap += (static_cast<double>(tp) / static_cast<double>(seen)) *
            (static_cast<double>(gained) / static_cast<double>(pos));
    }
    i = j;
  }
  return ap;
}

double auc_roc(std::span<const double> scores, std::span<const int> labels) {
  std::size_t pos = 0, neg = 0;
  check_binary(scores, labels, pos, neg);
  if (pos == 0 || neg == 0) throw std::invalid_argument("AUC needs both classes");
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double wins = 0.0;
  std::size_t neg_below = 0;
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    std::size_t gp = 0, gn = 0;
    while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) {
      (labels[idx[j]] == 1 ? gp : gn) += 1;
      ++j;
    }
    wins += static_cast<double>(gp) * (static_cast<double>(neg_below) + 0.5 * static_cast<double>(gn));
    neg_below += gn;
    i = j;
  }
  return wins / (static_cast<double>(pos) * static_cast<double>(neg));
}

double macro_auc(std::span<const double> probs, std::size_t classes,
                 std::span<const int> labels) {
  if (probs.size() != labels.size() * classes) throw std::invalid_argument("macro_auc: shape");
  if (classes == 2) {
    std::vector<double> s(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) s[i] = probs[i * 2 + 1];
    return auc_roc(s, labels);
  }
  double total = 0.0;
  std::size_t used = 0;
  std::vector<double> s(labels.size());
  std::vector<int> y(labels.size());
  for (std::size_t c = 0; c < classes; ++c) {
    std::size_t p = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      s[i] = probs[i * classes + c];
      y[i] = labels[i] == static_cast<int>(c);
      p += y[i];
    }
    if (p == 0 || p == labels.size()) continue;
    total += auc_roc(s, y);
    ++used;
  }
  if (used == 0) throw std::invalid_argument("macro_auc: no class has both outcomes");
  return total / static_cast<double>(used);
}

std::vector<double> average_ranks(std::span<const double> x) {
  std::vector<std::size_t> idx(x.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(x.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j < idx.size() && x[idx[j]] == x[idx[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t q = i; q < j; ++q) ranks[idx[q]] = r;
    i = j;
  }
  return ranks;
}

Correlation spearman_rho(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("spearman: length mismatch");
  const auto n = x.size();
  if (n < 3) throw std::invalid_argument("spearman: need at least 3 observations");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  const double mean = 0.5 * static_cast<double>(n + 1);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double a = rx[i] - mean, b = ry[i] - mean;
    sxy += a * b;
    sxx += a * a;
    syy += b * b;
  }
  Correlation c;
  if (sxx == 0.0 || syy == 0.0) {
    c.rho = std::numeric_limits<double>::quiet_NaN();
    c.p_value = std::numeric_limits<double>::quiet_NaN();
    return c;
  }
  c.rho = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
  const double df = static_cast<double>(n - 2);
  if (std::abs(c.rho) >= 1.0) {
    c.p_value = 0.0;
    return c;
  }
  const double t = c.rho * std::sqrt(df / (1.0 - c.rho * c.rho));
  boost::math::students_t dist(df);
  c.p_value = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
  return c;
}

double degree_based_pr(const TemporalGraph& g, NodeId u) {
  std::size_t max_deg = 0;
  for (NodeId v = 0; v < g.num_nodes(); ++v) max_deg = std::max(max_deg, g.adjacency(v).size());
  if (max_deg == 0) return 1.0;
  const auto deg = u < g.num_nodes() ? g.adjacency(u).size() : 0;
  return 1.0 - static_cast<double>(deg) / static_cast<double>(max_deg);
}

DegreeIndex::DegreeIndex(const TemporalGraph& g) : graph_(&g) {
  const auto& events = g.events();
  times_.reserve(events.size());
  prefix_max_.assign(events.size() + 1, 0);
  std::vector<std::size_t> deg(g.num_nodes(), 0);
  std::size_t best = 0;
  for (std::size_t i = 0; i < events.size(); ++i) {
    times_.push_back(events[i].t);
    best = std::max(best, ++deg[events[i].src]);
    best = std::max(best, ++deg[events[i].dst]);
    prefix_max_[i + 1] = best;
  }
}

double DegreeIndex::pr(NodeId u, double horizon) const {
  const auto n = static_cast<std::size_t>(
      std::lower_bound(times_.begin(), times_.end(), horizon) - times_.begin());
  const auto max_deg = prefix_max_[n];
  if (max_deg == 0) return 1.0;
  const auto deg = u < graph_->num_nodes() ? graph_->degree_before(u, horizon) : 0;
  return 1.0 - static_cast<double>(deg) / static_cast<double>(max_deg);
}

}  // namespace tawrmac

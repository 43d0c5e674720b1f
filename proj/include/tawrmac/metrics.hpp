#pragma once

#include <cstddef>
#include <span>
#include <unordered_set>
#include <utility>
#include <vector>

#include "tawrmac/event_store.hpp"

namespace tawrmac {

// kGrouped treats equal scores as one threshold (the usual step-wise AP);
// kStable ranks equal scores by input order.
enum class TieMode { kGrouped, kStable };

// Sum over ranks of precision@k times the recall gained at k.
double average_precision(std::span<const double> scores, std::span<const int> labels,
                         TieMode ties = TieMode::kGrouped);

// Mann-Whitney: (#{pos > neg} + 0.5 #{pos = neg}) / (P N).
double auc_roc(std::span<const double> scores, std::span<const int> labels);

// Macro one-vs-rest AUC over the columns of a row-major [n, c] probability
// table; classes absent from `labels` (or present everywhere) are skipped.
double macro_auc(std::span<const double> probs, std::size_t classes,
                 std::span<const int> labels);

// Average ranks (1-based) with ties sharing the mean rank.
std::vector<double> average_ranks(std::span<const double> x);

struct Correlation {
  double rho = 0.0;
  double p_value = 1.0;
};

// Spearman's rho with a two-sided p-value from the t approximation.
Correlation spearman_rho(std::span<const double> x, std::span<const double> y);

// Unlimited-memory EdgeBank: a pair scores 1 iff it has been observed.
class EdgeBank {
 public:
  void observe(NodeId u, NodeId v) { seen_.insert(key(u, v)); }
  double predict(NodeId u, NodeId v) const { return seen_.contains(key(u, v)) ? 1.0 : 0.0; }
  std::size_t size() const { return seen_.size(); }

 private:
  static std::uint64_t key(NodeId u, NodeId v) {
    return (static_cast<std::uint64_t>(u) << 32) | v;
  }
  std::unordered_set<std::uint64_t> seen_;
};

// 1 - deg(u) / max_v deg(v) over the whole graph; 1 when the graph is empty.
double degree_based_pr(const TemporalGraph& g, NodeId u);

// Causal variant: degrees and their maximum counted over events strictly
// before `horizon`.
class DegreeIndex {
 public:
  DegreeIndex() = default;
  explicit DegreeIndex(const TemporalGraph& g);
  double pr(NodeId u, double horizon) const;

 private:
  const TemporalGraph* graph_ = nullptr;
  std::vector<double> times_;
  std::vector<std::size_t> prefix_max_;  // max degree after the first i events
};

}  // namespace tawrmac

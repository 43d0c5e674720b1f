#pragma once

// Brute-force reference implementations shared by the unit and acceptance
// suites.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace oracle {

// Step-wise AP from the definition; with `grouped`, a block of equal scores is
// one threshold, otherwise ranks follow input order.
inline double average_precision(const std::vector<double>& s, const std::vector<int>& y, bool grouped) {
  const std::size_t n = s.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return s[a] > s[b]; });
  const double P = static_cast<double>(std::count(y.begin(), y.end(), 1));
  double ap = 0.0, prev_recall = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    if (grouped && k + 1 < n && s[idx[k + 1]] == s[idx[k]]) continue;
    double tp = 0.0;
    for (std::size_t j = 0; j <= k; ++j) tp += y[idx[j]];
    const double recall = tp / P;
    ap += (tp / static_cast<double>(k + 1)) * (recall - prev_recall);
    prev_recall = recall;
  }
  return ap;
}

// O(P N) pair counting.
inline double auc(const std::vector<double>& s, const std::vector<int>& y) {
  double num = 0.0, P = 0.0, N = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    P += y[i];
    N += 1 - y[i];
    if (y[i] != 1) continue;
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (y[j] != 0) continue;
      num += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
    }
  }
  return num / (P * N);
}

// 1-based ranks, ties share the mean rank.
inline std::vector<double> ranks(const std::vector<double>& x) {
  std::vector<double> r(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    double less = 0.0, equal = 0.0;
    for (double v : x) {
      less += v < x[i];
      equal += v == x[i];
    }
    r[i] = less + (equal + 1.0) / 2.0;
  }
  return r;
}

inline double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

inline double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  return pearson(ranks(a), ranks(b));
}

}  // namespace oracle

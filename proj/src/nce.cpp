#include "tawrmac/nce.hpp"

#include <algorithm>
#include <unordered_map>

#include "tawrmac/errors.hpp"

namespace tawrmac {

std::vector<NodeId> recent_neighbors(const TemporalGraph& g, NodeId u, double horizon,
                                     std::size_t r) {
  if (u == kNullNode || u >= g.num_nodes()) return {};
  const auto hist = g.history(u, horizon);
  const auto n = std::min(r, hist.size());
  std::vector<NodeId> out;
  out.reserve(n);
  for (std::size_t i = hist.size() - n; i < hist.size(); ++i) out.push_back(hist[i].neighbor);
  return out;
}

CoocMatrix cooccurrence_from_lists(std::span<const NodeId> own,
                                   std::span<const NodeId> partner, std::size_t r) {
  if (r == 0) throw ConfigError("co-occurrence: r must be >= 1");
  std::unordered_map<NodeId, double> own_count, partner_count;
  for (auto z : own) own_count[z] += 1.0;
  for (auto z : partner) partner_count[z] += 1.0;
  CoocMatrix m{r, std::vector<double>(2 * r, 0.0)};
  for (std::size_t i = 0; i < std::min(r, own.size()); ++i) {
    m.counts[2 * i] = own_count[own[i]];
    if (auto it = partner_count.find(own[i]); it != partner_count.end()) {
      m.counts[2 * i + 1] = it->second;
    }
  }
  return m;
}

std::pair<CoocMatrix, CoocMatrix> build_cooccurrence(const TemporalGraph& g, NodeId u,
                                                     NodeId v, double horizon,
                                                     std::size_t r) {
  const auto nu = recent_neighbors(g, u, horizon, r);
  const auto nv = recent_neighbors(g, v, horizon, r);
  return {cooccurrence_from_lists(nu, nv, r), cooccurrence_from_lists(nv, nu, r)};
}

CoocEncoder CoocEncoder::create(ParameterStore& store, const std::string& name, std::size_t r,
                                std::size_t d_ce, Rng& rng) {
  CoocEncoder e;
  e.mlp = Mlp::create(store, name, 1, d_ce, d_ce, rng);
  e.r = r;
  e.d_ce = d_ce;
  return e;
}

Var CoocEncoder::operator()(Tape& tape, std::span<const CoocMatrix> mats) const {
  const auto n = mats.size();
  Tensor own(n * r, 1), partner(n * r, 1);
  for (std::size_t b = 0; b < n; ++b) {
    if (mats[b].r != r) throw DimensionError("co-occurrence matrix has the wrong row count");
    for (std::size_t i = 0; i < r; ++i) {
      own.data[b * r + i] = mats[b].own(i);
      partner.data[b * r + i] = mats[b].partner(i);
    }
  }
  const auto rows = ad::add(mlp(tape.constant(std::move(own))),
                            mlp(tape.constant(std::move(partner))));
  return ad::reshape(rows, n, r * d_ce);
}

}  // namespace tawrmac

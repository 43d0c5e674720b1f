#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "tawrmac/event_store.hpp"
#include "tawrmac/kernels.hpp"

namespace tawrmac {

// r x 2 counts, row-major. Row i belongs to the i-th of the r most recent
// neighbour occurrences of the owner: (count among owner's list, count among
// partner's list). Missing rows are (0, 0).
struct CoocMatrix {
  std::size_t r = 0;
  std::vector<double> counts;

  double own(std::size_t i) const { return counts[2 * i]; }
  double partner(std::size_t i) const { return counts[2 * i + 1]; }
};

// The r most recent neighbour occurrences of u strictly before `horizon`,
// oldest first, with multiplicity.
std::vector<NodeId> recent_neighbors(const TemporalGraph& g, NodeId u, double horizon,
                                     std::size_t r);

CoocMatrix cooccurrence_from_lists(std::span<const NodeId> own,
                                   std::span<const NodeId> partner, std::size_t r);

// (nc_u, nc_v) for the pair at `horizon`.
std::pair<CoocMatrix, CoocMatrix> build_cooccurrence(const TemporalGraph& g, NodeId u,
                                                     NodeId v, double horizon,
                                                     std::size_t r);

// ce = MLP(nc[:,0]) + MLP(nc[:,1]) with one scalar -> d_ce MLP shared by both
// columns and every row; rows flattened to r * d_ce.
struct CoocEncoder {
  Mlp mlp;
  std::size_t r = 0;
  std::size_t d_ce = 0;

  static CoocEncoder create(ParameterStore& store, const std::string& name, std::size_t r,
                            std::size_t d_ce, Rng& rng);
  std::size_t out_dim() const { return r * d_ce; }
  // [mats.size(), r * d_ce]
  Var operator()(Tape& tape, std::span<const CoocMatrix> mats) const;
};

}  // namespace tawrmac

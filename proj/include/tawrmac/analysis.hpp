#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "tawrmac/config.hpp"
#include "tawrmac/metrics.hpp"
#include "tawrmac/model.hpp"

namespace tawrmac {

// Per-event restart probability of the source with the two quantities it is
// compared against: degree before the event and time since the source's
// previous interaction (NaN for a first interaction).
struct RestartSample {
  NodeId node = 0;
  double t = 0.0;
  double pr = 0.0;
  double degree = 0.0;
  double inter_event = 0.0;
};

struct RestartAnalysis {
  std::vector<RestartSample> samples;
  Correlation vs_degree;
  Correlation vs_inter_event;
  std::size_t n_degree = 0;
  std::size_t n_inter_event = 0;
};

// Streams every event of `data` through `model` (fresh memory, no training)
// and correlates the sources' restart probabilities.
RestartAnalysis analyze_restart(const Tawrmac& model, const TemporalGraph& graph,
                                std::size_t batch_size, std::uint64_t seed);

// quantity,rho,p_value,n
std::string restart_table_csv(const std::string& dataset, const RestartAnalysis& a);

}  // namespace tawrmac

#include "tawrmac/analysis.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "tawrmac/trainer.hpp"

namespace tawrmac {

RestartAnalysis analyze_restart(const Tawrmac& model, const TemporalGraph& graph,
                                std::size_t batch_size, std::uint64_t seed) {
  RestartAnalysis res;
  const auto& events = graph.events();
  const DegreeIndex degrees(graph);
  MemoryStore memory(graph.num_nodes(), model.config().d_m);
  StreamConfig scfg;
  scfg.batch_size = batch_size;
  scfg.seed = seed;
  scfg.keep_restart = true;
  Streamer streamer(model, graph, degrees, memory, scfg);
  NegativeSampler sampler(NegStrategy::kRandom, events, {0, events.size()});

  std::vector<double> last(graph.num_nodes(), std::nan(""));
  streamer.run({0, events.size()}, sampler, derive_seed({seed, 0xa7a1ULL}), nullptr, {},
               [&](IndexRange batch, const BatchOutput& out) {
                 if (out.pr_src.size() != batch.size()) return;
                 for (std::size_t i = 0; i < batch.size(); ++i) {
                   const auto& e = events[batch.begin + i];
                   res.samples.push_back({e.src, e.t, out.pr_src[i],
                                          static_cast<double>(graph.degree_before(e.src, e.t)),
                                          e.t - last[e.src]});
                 }
                 for (auto j = batch.begin; j < batch.end; ++j) {
                   last[events[j].src] = events[j].t;
                   last[events[j].dst] = events[j].t;
                 }
               });

  std::vector<double> pr, deg, pr_ie, ie;
  for (const auto& s : res.samples) {
    pr.push_back(s.pr);
    deg.push_back(s.degree);
    if (std::isfinite(s.inter_event)) {
      pr_ie.push_back(s.pr);
      ie.push_back(s.inter_event);
    }
  }
  res.n_degree = pr.size();
  res.n_inter_event = pr_ie.size();
  const Correlation undefined{std::nan(""), std::nan("")};
  res.vs_degree = pr.size() >= 3 ? spearman_rho(pr, deg) : undefined;
  res.vs_inter_event = pr_ie.size() >= 3 ? spearman_rho(pr_ie, ie) : undefined;
  return res;
}

std::string restart_table_csv(const std::string& dataset, const RestartAnalysis& a) {
  std::ostringstream os;
  os << "dataset,quantity,rho,p_value,n\n";
  char buf[128];
  std::snprintf(buf, sizeof buf, "%s,degree,%.17g,%.17g,%zu\n", dataset.c_str(),
                a.vs_degree.rho, a.vs_degree.p_value, a.n_degree);
  os << buf;
  std::snprintf(buf, sizeof buf, "%s,inter_event_time,%.17g,%.17g,%zu\n", dataset.c_str(),
                a.vs_inter_event.rho, a.vs_inter_event.p_value, a.n_inter_event);
  os << buf;
  return os.str();
}

}  // namespace tawrmac

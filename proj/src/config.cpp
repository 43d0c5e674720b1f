#include "tawrmac/config.hpp"

#include <fstream>
#include <set>

#include "tawrmac/errors.hpp"
#include "tawrmac/parallel.hpp"

namespace tawrmac {

using nlohmann::json;

#define TAWRMAC_CONFIG_FIELDS(X)                                                      \
  X(dataset) X(data_path) X(bipartite) X(task) X(setting) X(nss) X(seed) X(model)     \
  X(M) X(r) X(w) X(alpha) X(k) X(L) X(d_m) X(d_phi1) X(d_phi2) X(d_ce) X(d_v) X(d_w)  \
  X(heads) X(walk_heads) X(dropout) X(lr) X(batch_size) X(epochs) X(patience)         \
  X(no_mae) X(no_nce) X(no_tawr) X(no_restart) X(restart_mode) X(restart_sense)       \
  X(neighbor_strategy) X(walk_query) X(memory_update) X(neighbor_cutoff)              \
  X(inductive_fraction) X(threads) X(output_dir) X(synthetic_events)                  \
  X(synthetic_novel_fraction) X(node_epochs) X(node_lr)

json to_json(const RunConfig& c) {
  json j;
#define X(name) j[#name] = c.name;
  TAWRMAC_CONFIG_FIELDS(X)
#undef X
  return j;
}

RunConfig config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  RunConfig c;
  std::set<std::string> known;
#define X(name) known.insert(#name);
  TAWRMAC_CONFIG_FIELDS(X)
#undef X
  for (const auto& [key, value] : j.items()) {
    if (!known.contains(key)) throw ConfigError("unknown config key '" + key + "'");
  }
  json in = j;
  // A single strategy name is accepted in place of a list; "all" expands.
  if (in.contains("nss") && in["nss"].is_string()) {
    const auto s = in["nss"].get<std::string>();
    in["nss"] = s == "all" ? json::array({"random", "historical", "inductive"}) : json::array({s});
  }
  try {
#define X(name) \
  if (in.contains(#name)) in.at(#name).get_to(c.name);
    TAWRMAC_CONFIG_FIELDS(X)
#undef X
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad config value: ") + e.what());
  }
  validate(c);
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config " + path + " is not valid JSON: " + e.what());
  }
  return config_from_json(j);
}

void validate(const RunConfig& c) {
  const auto need = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError(what);
  };
  need(c.task == "link_pred" || c.task == "node_class", "task must be link_pred or node_class");
  need(c.setting == "transductive" || c.setting == "inductive",
       "setting must be transductive or inductive");
  need(c.model == "tawrmac" || c.model == "edgebank", "model must be tawrmac or edgebank");
  need(!c.nss.empty(), "nss must list at least one strategy");
  for (const auto& s : c.nss) parse_neg_strategy(s);
  need(c.M >= 1 && c.r >= 1 && c.w >= 1 && c.k >= 1 && c.L >= 1, "M, r, w, k, L must be >= 1");
  need(c.d_m >= 1 && c.d_phi1 >= 1 && c.d_phi2 >= 1 && c.d_ce >= 1 && c.d_v >= 1 && c.d_w >= 1,
       "all widths must be >= 1");
  need(c.heads >= 1 && (c.d_m + c.d_phi1 + c.d_phi2) % c.heads == 0,
       "heads must divide d_m + d_phi1 + d_phi2");
  need(c.walk_heads >= 1 && c.d_w % c.walk_heads == 0, "walk_heads must divide d_w");
  need(c.alpha >= 0.0, "alpha must be >= 0");
  need(c.dropout >= 0.0 && c.dropout < 1.0, "dropout must be in [0, 1)");
  need(c.lr >= 0.0, "lr must be >= 0");
  need(c.batch_size >= 1, "batch_size must be >= 1");
  need(c.inductive_fraction >= 0.0 && c.inductive_fraction < 1.0,
       "inductive_fraction must be in [0, 1)");
  need(c.memory_update == "pre_batch", "memory_update supports only pre_batch");
  need(c.synthetic_novel_fraction >= 0.0 && c.synthetic_novel_fraction < 1.0,
       "synthetic_novel_fraction must be in [0, 1)");
  parse_restart_mode(c.restart_mode);
  parse_restart_sense(c.restart_sense);
  parse_neighbor_strategy(c.neighbor_strategy);
  parse_walk_query(c.walk_query);
  parse_neighbor_cutoff(c.neighbor_cutoff);
}

ModelConfig model_config(const RunConfig& c, std::size_t edge_dim, std::size_t node_feat_dim) {
  ModelConfig m;
  m.d_m = c.d_m;
  m.d_phi1 = c.d_phi1;
  m.d_phi2 = c.d_phi2;
  m.layers = c.L;
  m.k = c.k;
  m.heads = c.heads;
  m.strategy = parse_neighbor_strategy(c.neighbor_strategy);
  m.r = c.r;
  m.d_ce = c.d_ce;
  m.M = c.M;
  m.w = c.w;
  m.d_v = c.d_v;
  m.d_w = c.d_w;
  m.walk_heads = c.walk_heads;
  m.alpha = c.alpha;
  m.sense = parse_restart_sense(c.restart_sense);
  m.walk_query = parse_walk_query(c.walk_query);
  m.restart = parse_restart_mode(c.restart_mode);
  m.ablation = {c.no_mae, c.no_nce, c.no_tawr, c.no_restart};
  m.dropout = c.dropout;
  m.threads = resolved_threads(c);
  m.edge_dim = edge_dim;
  m.node_feat_dim = node_feat_dim;
  return m;
}

std::size_t resolved_threads(const RunConfig& c) {
  return c.threads == 0 ? default_threads() : c.threads;
}

}  // namespace tawrmac

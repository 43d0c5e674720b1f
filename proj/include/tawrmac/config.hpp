#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "tawrmac/model.hpp"
#include "tawrmac/negatives.hpp"
#include "tawrmac/trainer.hpp"

namespace tawrmac {

// Flat run configuration. Defaults are the shared reference settings; a
// JSON file may override any key, and unknown keys are rejected.
struct RunConfig {
  std::string dataset = "synthetic";
  std::string data_path;  // relative paths resolve against $TAWRMAC_DATA_DIR
  bool bipartite = true;
  std::string task = "link_pred";  // link_pred | node_class
  std::string setting = "transductive";  // transductive | inductive
  std::vector<std::string> nss = {"random"};
  std::uint64_t seed = 0;
  std::string model = "tawrmac";  // tawrmac | edgebank

  std::size_t M = 10;
  std::size_t r = 32;
  std::size_t w = 4;
  double alpha = 1e-6;
  std::size_t k = 10;
  std::size_t L = 1;
  std::size_t d_m = 172;
  std::size_t d_phi1 = 100;
  std::size_t d_phi2 = 20;
  std::size_t d_ce = 10;
  std::size_t d_v = 100;
  std::size_t d_w = 172;
  std::size_t heads = 2;
  std::size_t walk_heads = 4;
  double dropout = 0.1;
  double lr = 1e-4;
  std::size_t batch_size = 200;
  std::size_t epochs = 100;
  std::size_t patience = 5;

  bool no_mae = false;
  bool no_nce = false;
  bool no_tawr = false;
  bool no_restart = false;
  std::string restart_mode = "learnable";
  std::string restart_sense = "literal";
  std::string neighbor_strategy = "recent";
  std::string walk_query = "mean";
  std::string memory_update = "pre_batch";
  std::string neighbor_cutoff = "batch_start";
  double inductive_fraction = 0.1;
  std::size_t threads = 0;  // 0 = all hardware threads
  std::string output_dir = "runs/latest";

  // Synthetic streams (dataset = "synthetic" or "synthetic_novel").
  std::size_t synthetic_events = 10000;
  double synthetic_novel_fraction = 0.3;

  // Node classification head training.
  std::size_t node_epochs = 100;
  double node_lr = 1e-3;
};

nlohmann::json to_json(const RunConfig& c);
// Throws ConfigError on unknown keys, wrong types or invalid values.
RunConfig config_from_json(const nlohmann::json& j);
RunConfig load_config(const std::string& path);
void validate(const RunConfig& c);

ModelConfig model_config(const RunConfig& c, std::size_t edge_dim, std::size_t node_feat_dim);
std::size_t resolved_threads(const RunConfig& c);

}  // namespace tawrmac

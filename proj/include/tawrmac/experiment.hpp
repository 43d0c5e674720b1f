#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"
#include "tawrmac/config.hpp"
#include "tawrmac/event_store.hpp"

namespace tawrmac {

struct Dataset {
  std::string name;
  std::string source;  // file path, or "generated"
  EventLog log;
};

// Synthetic names generate in memory; anything else is read from data_path,
// or from $TAWRMAC_DATA_DIR/<dataset>.csv when data_path is empty.
Dataset load_dataset(const RunConfig& c);
std::string resolve_data_path(const RunConfig& c);

struct MetricRow {
  std::string dataset;
  std::string setting;
  std::string nss;
  std::uint64_t seed = 0;
  std::size_t epoch = 0;
  double ap = 0.0;
  double auc = 0.0;
};

std::string results_csv(const std::vector<MetricRow>& rows);

struct RunResult {
  std::vector<MetricRow> rows;
  nlohmann::json summary;
};

struct RunOptions {
  bool write_outputs = true;
  std::ostream* log = nullptr;  // progress lines
};

// Full protocol: split, optional inductive masking, training with early
// stopping on validation loss, test evaluation per negative strategy. With
// model = edgebank only the memorisation baseline is evaluated.
RunResult run_experiment(const RunConfig& c, const RunOptions& opts = {});

// Baseline on the test split; history = every event before the test split
// plus test positives already streamed.
std::vector<MetricRow> run_edgebank(const RunConfig& c, const Dataset& data);

}  // namespace tawrmac

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "tawrmac/event_store.hpp"
#include "tawrmac/kernels.hpp"
#include "tawrmac/memory.hpp"
#include "tawrmac/metrics.hpp"
#include "tawrmac/model.hpp"
#include "tawrmac/negatives.hpp"

namespace tawrmac {

// Where neighbourhood reads stop for an event of a batch: before the batch's
// first event (default) or before the event itself.
enum class NeighborCutoff { kBatchStart, kEvent };

NeighborCutoff parse_neighbor_cutoff(const std::string& name);
std::string to_string(NeighborCutoff c);

struct StreamConfig {
  std::size_t batch_size = 200;
  NeighborCutoff cutoff = NeighborCutoff::kBatchStart;
  std::uint64_t seed = 0;
  bool keep_embeddings = false;
  bool keep_restart = false;
};

struct BatchOutput {
  std::vector<double> pos;  // link probabilities of the positives
  std::vector<double> neg;
  double loss = 0.0;
  Tensor emb_src, emb_dst;  // positives only, when keep_embeddings is set
  std::vector<double> pr_src;  // restart probability of each source
};

struct SplitResult {
  double loss = 0.0;  // mean over batches
  double ap = 0.0;    // mean over scored batches
  double auc = 0.0;
  std::size_t batches = 0;
  std::size_t scored_batches = 0;
  std::size_t fallbacks = 0;
  std::vector<double> batch_losses;
};

// Event filter deciding which positives (and their negatives) are scored.
using ScoreFilter = std::function<bool(const Event&)>;

// Replays batches of one graph's event list through the model under the
// two-phase memory schedule: flush the previous batch's messages, predict,
// then stash this batch's messages.
class Streamer {
 public:
  Streamer(const Tawrmac& model, const TemporalGraph& graph, const DegreeIndex& degrees,
           MemoryStore& memory, StreamConfig cfg);

  const StreamConfig& config() const { return cfg_; }

  // One batch; with `opt` set, back-propagates the BCE loss and steps Adam.
  BatchOutput step(IndexRange batch, const Negatives& negatives, std::uint64_t pass_key,
                   Adam* opt = nullptr, Rng* dropout_rng = nullptr);

  // Streams [split) in batches; `pass_key` separates the random streams of
  // different passes (epochs, splits, strategies).
  SplitResult run(IndexRange split, NegativeSampler& sampler, std::uint64_t pass_key,
                  Adam* opt = nullptr, const ScoreFilter& filter = {},
                  const std::function<void(IndexRange, const BatchOutput&)>& on_batch = {});

 private:
  const Tawrmac& model_;
  const TemporalGraph& graph_;
  const DegreeIndex& degrees_;
  MemoryStore& memory_;
  StreamConfig cfg_;
};

std::vector<IndexRange> make_batches(IndexRange split, std::size_t batch_size);

}  // namespace tawrmac

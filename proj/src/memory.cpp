#include "tawrmac/memory.hpp"

#include <algorithm>
#include <array>
#include <string>

#include "tawrmac/errors.hpp"

namespace tawrmac {

MemoryStore::MemoryStore(std::size_t num_nodes, std::size_t dim)
    : dim_(dim), memory_(num_nodes * dim, 0.0), last_update_(num_nodes, kNeverUpdated) {}

void MemoryStore::write(NodeId u, std::span<const double> values, double t) {
  if (values.size() != dim_) throw DimensionError("memory write: wrong width");
  std::copy(values.begin(), values.end(), memory_.begin() + static_cast<std::ptrdiff_t>(u * dim_));
  last_update_[u] = t;
}

double MemoryStore::delta(NodeId u, double t) const {
  const double last = last_update_[u];
  if (last == kNeverUpdated) return 0.0;
  return std::max(0.0, t - last);
}

MemoryStore::Read MemoryStore::read(NodeId u, double t) const {
  const auto r = row(u);
  return {std::vector<double>(r.begin(), r.end()), delta(u, t)};
}

void MemoryStore::stash(RawMessage msg) {
  auto it = pending_.find(msg.node);
  if (it == pending_.end()) {
    pending_.emplace(msg.node, std::move(msg));
  } else if (msg.t >= it->second.t) {
    it->second = std::move(msg);
  }
}

std::vector<RawMessage> MemoryStore::take_pending() {
  std::vector<RawMessage> out;
  out.reserve(pending_.size());
  for (auto& [node, msg] : pending_) out.push_back(std::move(msg));
  pending_.clear();
  return out;
}

void MemoryStore::reset() {
  std::fill(memory_.begin(), memory_.end(), 0.0);
  std::fill(last_update_.begin(), last_update_.end(), kNeverUpdated);
  pending_.clear();
}

void MemoryStore::load(std::vector<double> table, std::vector<double> last_updates) {
  if (table.size() != last_updates.size() * dim_) {
    throw DimensionError("memory load: table/last_update size mismatch");
  }
  memory_ = std::move(table);
  last_update_ = std::move(last_updates);
  pending_.clear();
}

std::pair<RawMessage, RawMessage> compute_interaction_messages(
    const MemoryStore& store, NodeId src, NodeId dst, double t,
    std::span<const double> edge_feat) {
  const auto make = [&](NodeId self, NodeId other) {
    RawMessage m;
    m.node = self;
    m.t = t;
    m.dt = store.delta(self, t);
    const auto a = store.row(self);
    const auto b = store.row(other);
    m.self_memory.assign(a.begin(), a.end());
    m.other_memory.assign(b.begin(), b.end());
    m.features.assign(edge_feat.begin(), edge_feat.end());
    m.interaction = true;
    return m;
  };
  return {make(src, dst), make(dst, src)};
}

RawMessage compute_update_message(const MemoryStore& store, NodeId u, double t,
                                  std::span<const double> node_feat) {
  RawMessage m;
  m.node = u;
  m.t = t;
  m.dt = store.delta(u, t);
  const auto a = store.row(u);
  m.self_memory.assign(a.begin(), a.end());
  m.features.assign(node_feat.begin(), node_feat.end());
  m.interaction = false;
  return m;
}

namespace {

Var run_group(Tape& tape, const std::vector<const RawMessage*>& group, const GruCell& rnn,
              const LearnableTimeEncoder& enc, std::size_t dim) {
  const auto n = group.size();
  const bool interaction = group.front()->interaction;
  const auto mem_cols = interaction ? 2 * dim : dim;
  const auto feat_cols = group.front()->features.size();
  Tensor mem(n, mem_cols), feat(n, feat_cols), hidden(n, dim);
  std::vector<double> dts(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& m = *group[i];
    if (m.self_memory.size() != dim || m.features.size() != feat_cols ||
        (interaction && m.other_memory.size() != dim)) {
      throw DimensionError("memory message has inconsistent widths");
    }
    auto row = mem.row(i);
    std::copy(m.self_memory.begin(), m.self_memory.end(), row.begin());
    if (interaction) {
      std::copy(m.other_memory.begin(), m.other_memory.end(), row.begin() + static_cast<std::ptrdiff_t>(dim));
    }
    std::copy(m.features.begin(), m.features.end(), feat.row(i).begin());
    std::copy(m.self_memory.begin(), m.self_memory.end(), hidden.row(i).begin());
    dts[i] = m.dt;
  }
  std::vector<Var> parts{tape.constant(std::move(mem)), enc(tape, dts)};
  if (feat_cols > 0) parts.push_back(tape.constant(std::move(feat)));
  return rnn(ad::concat_cols(parts), tape.constant(std::move(hidden)));
}

}  // namespace

MemoryFlush flush_messages(Tape& tape, MemoryStore& store, std::vector<RawMessage> messages,
                           const MemoryUpdater& updater) {
  MemoryFlush out;
  if (messages.empty()) return out;
  std::map<NodeId, RawMessage> latest;
  for (auto& m : messages) {
    if (m.t < store.last_update(m.node)) {
      throw CausalityError("message for node " + std::to_string(m.node) + " at t=" +
                           std::to_string(m.t) + " predates its last memory update");
    }
    auto it = latest.find(m.node);
    if (it == latest.end()) {
      latest.emplace(m.node, std::move(m));
    } else if (m.t >= it->second.t) {
      it->second = std::move(m);
    }
  }
  std::vector<const RawMessage*> inter, upd;
  for (const auto& [node, m] : latest) (m.interaction ? inter : upd).push_back(&m);

  std::vector<Var> blocks;
  if (!inter.empty()) {
    blocks.push_back(run_group(tape, inter, updater.interaction_rnn, updater.time_encoder,
                               store.dim()));
    for (const auto* m : inter) out.nodes.push_back(m->node);
  }
  if (!upd.empty()) {
    if (updater.update_rnn.w_h == nullptr) {
      throw std::logic_error("node-update message but no update RNN configured");
    }
    blocks.push_back(run_group(tape, upd, updater.update_rnn, updater.time_encoder, store.dim()));
    for (const auto* m : upd) out.nodes.push_back(m->node);
  }
  out.rows = blocks.size() == 1 ? blocks.front() : ad::concat_rows(blocks);

  const auto& values = out.rows.value();
  std::size_t i = 0;
  for (const auto* group : {&inter, &upd}) {
    for (const auto* m : *group) {
      store.write(m->node, values.row(i), m->t);
      ++i;
    }
  }
  return out;
}

void apply_messages(MemoryStore& store, std::vector<RawMessage> messages,
                    const MemoryUpdater& updater) {
  Tape tape(/*record=*/false);
  flush_messages(tape, store, std::move(messages), updater);
}

}  // namespace tawrmac

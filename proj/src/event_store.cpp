#include "tawrmac/event_store.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string_view>

#include "tawrmac/errors.hpp"

namespace tawrmac {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

template <typename T>
T parse_field(std::string_view field, std::size_t line, const char* what) {
  field = trim(field);
  T value{};
  const auto* first = field.data();
  const auto* last = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last || field.empty()) {
    throw ParseError(line, std::string("bad ") + what + " '" + std::string(field) + "'");
  }
  return value;
}

// Integer ids are sometimes written as floats ("12.0") by pandas exports.
std::uint64_t parse_id(std::string_view field, std::size_t line, const char* what) {
  const auto v = parse_field<double>(field, line, what);
  if (v < 0 || v != std::floor(v) || v >= static_cast<double>(kNullNode)) {
    throw ParseError(line, std::string("bad ") + what + " id");
  }
  return static_cast<std::uint64_t>(v);
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

}  // namespace

EventLog parse_jodie_csv(const std::string& text, const LoadOptions& opts) {
  EventLog log;
  log.bipartite = opts.bipartite;
  std::istringstream in(text);
  std::string raw;
  std::size_t line_no = 0;
  bool have_arity = false;
  std::uint64_t max_user = 0;
  std::vector<std::pair<std::uint64_t, std::uint64_t>> ids;

  // Preprocessed DyGLib exports (`,u,i,ts,label,idx`) carry a leading row
  // index and a trailing edge index, and their ids are already disjoint.
  bool dyglib = false;
  while (std::getline(in, raw)) {
    ++line_no;
    if (line_no == 1) {
      dyglib = trim(raw).starts_with(",u,i,ts,label");
      if (dyglib) log.bipartite = false;
      continue;
    }
    const auto line = trim(raw);
    if (line.empty()) continue;
    auto fields = split_commas(line);
    if (dyglib) {
      if (fields.size() != 6) throw FormatError("line " + std::to_string(line_no) + ": expected 6 columns");
      fields = {fields[1], fields[2], fields[3], fields[4]};
    }
    if (fields.size() < 4) {
      throw ParseError(line_no, "expected at least 4 columns, got " +
                                    std::to_string(fields.size()));
    }
    const auto user = parse_id(fields[0], line_no, "user");
    const auto item = parse_id(fields[1], line_no, "item");
    Event e;
    e.t = parse_field<double>(fields[2], line_no, "timestamp");
    if (!(e.t >= 0.0) || !std::isfinite(e.t)) {
      throw ParseError(line_no, "timestamp must be finite and nonnegative");
    }
    e.state_label = static_cast<int>(parse_id(fields[3], line_no, "state_label"));
    const std::size_t arity = fields.size() - 4;
    if (!have_arity) {
      log.edge_feat_dim = arity;
      have_arity = true;
    } else if (arity != log.edge_feat_dim) {
      throw FormatError("line " + std::to_string(line_no) + ": expected " +
                        std::to_string(log.edge_feat_dim) + " edge features, got " +
                        std::to_string(arity));
    }
    e.edge_feat.reserve(arity);
    for (std::size_t i = 4; i < fields.size(); ++i) {
      e.edge_feat.push_back(parse_field<double>(fields[i], line_no, "feature"));
    }
    max_user = std::max(max_user, user);
    ids.emplace_back(user, item);
    log.events.push_back(std::move(e));
  }

  log.first_dst_id = log.bipartite ? static_cast<NodeId>(max_user + 1) : 0;
  for (std::size_t i = 0; i < log.events.size(); ++i) {
    const auto dst = ids[i].second + log.first_dst_id;
    if (dst >= kNullNode) throw FormatError("node id space overflow");
    log.events[i].src = static_cast<NodeId>(ids[i].first);
    log.events[i].dst = static_cast<NodeId>(dst);
  }
  std::stable_sort(log.events.begin(), log.events.end(),
                   [](const Event& a, const Event& b) { return a.t < b.t; });
  return log;
}

EventLog load_jodie_csv(const std::string& path, const LoadOptions& opts) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open dataset file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_jodie_csv(ss.str(), opts);
}

TemporalGraph::TemporalGraph(std::vector<Event> events, std::size_t node_feat_dim,
                             std::size_t min_num_nodes)
    : events_(std::move(events)), node_feat_dim_(node_feat_dim) {
  std::size_t n = min_num_nodes;
  for (const auto& e : events_) {
    n = std::max<std::size_t>(n, std::max(e.src, e.dst) + std::size_t{1});
  }
  edge_feat_dim_ = events_.empty() ? 0 : events_.front().edge_feat.size();

  std::vector<std::size_t> degree(n, 0);
  for (const auto& e : events_) {
    if (e.edge_feat.size() != edge_feat_dim_) {
      throw FormatError("inconsistent edge feature dimension");
    }
    ++degree[e.src];
    ++degree[e.dst];
  }
  offsets_.assign(n + 1, 0);
  for (std::size_t u = 0; u < n; ++u) offsets_[u + 1] = offsets_[u] + degree[u];
  entries_.resize(offsets_[n]);
  std::vector<std::size_t> fill(offsets_.begin(), offsets_.end() - 1);
  edge_feat_.reserve(events_.size() * edge_feat_dim_);
  for (std::size_t i = 0; i < events_.size(); ++i) {
    const auto& e = events_[i];
    const auto idx = static_cast<std::uint32_t>(i);
    entries_[fill[e.src]++] = {e.dst, e.t, idx};
    entries_[fill[e.dst]++] = {e.src, e.t, idx};
    edge_feat_.insert(edge_feat_.end(), e.edge_feat.begin(), e.edge_feat.end());
  }
  // Events arrive time-sorted, but keep the invariant even for unsorted input.
  for (std::size_t u = 0; u < n; ++u) {
    std::stable_sort(entries_.begin() + static_cast<std::ptrdiff_t>(offsets_[u]),
                     entries_.begin() + static_cast<std::ptrdiff_t>(offsets_[u + 1]),
                     [](const AdjEntry& a, const AdjEntry& b) { return a.t < b.t; });
  }
  node_feat_.assign(n * node_feat_dim_, 0.0);
}

std::span<const AdjEntry> TemporalGraph::adjacency(NodeId u) const {
  if (u >= num_nodes()) return {};
  return {entries_.data() + offsets_[u], offsets_[u + 1] - offsets_[u]};
}

std::span<const AdjEntry> TemporalGraph::history(NodeId u, double t) const {
  const auto adj = adjacency(u);
  const auto it = std::lower_bound(adj.begin(), adj.end(), t,
                                   [](const AdjEntry& a, double v) { return a.t < v; });
  return adj.first(static_cast<std::size_t>(it - adj.begin()));
}

std::span<const double> TemporalGraph::edge_features(std::size_t event) const {
  return {edge_feat_.data() + event * edge_feat_dim_, edge_feat_dim_};
}

std::span<const double> TemporalGraph::node_features(NodeId u) const {
  if (u >= num_nodes() || node_feat_dim_ == 0) return {};
  return {node_feat_.data() + static_cast<std::size_t>(u) * node_feat_dim_, node_feat_dim_};
}

void TemporalGraph::set_node_features(std::vector<double> table) {
  if (table.size() != num_nodes() * node_feat_dim_) {
    throw DimensionError("node feature table has wrong size");
  }
  node_feat_ = std::move(table);
}

TemporalGraph build_graph(std::vector<Event> events, std::size_t node_feat_dim,
                          std::size_t min_num_nodes) {
  return TemporalGraph(std::move(events), node_feat_dim, min_num_nodes);
}

NeighborStrategy parse_neighbor_strategy(const std::string& name) {
  if (name == "recent") return NeighborStrategy::kRecent;
  if (name == "uniform") return NeighborStrategy::kUniform;
  throw ConfigError("unknown neighbor strategy '" + name + "'");
}

std::string to_string(NeighborStrategy s) {
  return s == NeighborStrategy::kRecent ? "recent" : "uniform";
}

NeighborSample neighbors_before(const TemporalGraph& g, NodeId u, double t,
                                std::size_t k, NeighborStrategy strategy, Rng& rng) {
  if (k == 0) throw std::invalid_argument("neighbors_before: k must be >= 1");
  NeighborSample out;
  out.k = k;
  const auto hist = g.history(u, t);
  if (hist.empty()) return out;
  if (strategy == NeighborStrategy::kRecent) {
    const auto take = std::min(k, hist.size());
    out.neighbors.assign(hist.end() - static_cast<std::ptrdiff_t>(take), hist.end());
    return out;
  }
  std::vector<std::size_t> picks(k);
  for (auto& p : picks) p = rng.below(hist.size());
  std::sort(picks.begin(), picks.end());
  out.neighbors.reserve(k);
  for (auto p : picks) out.neighbors.push_back(hist[p]);
  return out;
}

SplitSpec chrono_split(std::span<const Event> events, SplitRatios ratios) {
  const std::size_t n = events.size();
  if (n < 3) throw std::invalid_argument("chrono_split: need at least 3 events");
  // Tolerance absorbs products such as 0.15 * 100 = 15.000000000000002.
  const auto ceil_frac = [n](double r) {
    return static_cast<std::size_t>(std::ceil(r * static_cast<double>(n) - 1e-9));
  };
  const std::size_t train_end = ceil_frac(ratios.train);
  const std::size_t test_size = ceil_frac(ratios.test);
  if (train_end + test_size >= n || test_size == 0) {
    throw std::invalid_argument("chrono_split: validation or test split would be empty");
  }
  SplitSpec s;
  s.train = {0, train_end};
  s.val = {train_end, n - test_size};
  s.test = {n - test_size, n};
  s.train_end_t = events[train_end - 1].t;
  s.val_end_t = events[s.val.end - 1].t;
  return s;
}

InductiveMask mark_inductive_nodes(std::span<const Event> events, const SplitSpec& split,
                                   double fraction, std::uint64_t seed) {
  if (fraction < 0.0 || fraction >= 1.0) {
    throw std::invalid_argument("mark_inductive_nodes: fraction must be in [0, 1)");
  }
  std::vector<NodeId> candidates;
  for (std::size_t i = split.val.begin; i < split.test.end; ++i) {
    candidates.push_back(events[i].src);
    candidates.push_back(events[i].dst);
  }
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

  const auto count = static_cast<std::size_t>(
      std::floor(fraction * static_cast<double>(candidates.size()) + 1e-9));
  Rng rng({seed, 0x1d0c7u});
  // Partial Fisher-Yates: first `count` slots are a uniform sample.
  for (std::size_t i = 0; i < count; ++i) {
    const auto j = i + rng.below(candidates.size() - i);
    std::swap(candidates[i], candidates[j]);
  }
  InductiveMask mask;
  mask.masked.assign(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(count));
  std::sort(mask.masked.begin(), mask.masked.end());
  mask.masked_set.insert(mask.masked.begin(), mask.masked.end());
  for (std::size_t i = split.train.begin; i < split.train.end; ++i) {
    if (!mask.is_inductive_edge(events[i])) mask.kept_train_events.push_back(i);
  }
  return mask;
}

nlohmann::json split_to_json(const SplitSpec& split) {
  return {
      {"train", {split.train.begin, split.train.end}},
      {"val", {split.val.begin, split.val.end}},
      {"test", {split.test.begin, split.test.end}},
      {"train_end_t", split.train_end_t},
      {"val_end_t", split.val_end_t},
  };
}

nlohmann::json mask_to_json(const InductiveMask& mask) {
  return {{"masked_nodes", mask.masked},
          {"kept_train_events", mask.kept_train_events.size()}};
}

}  // namespace tawrmac

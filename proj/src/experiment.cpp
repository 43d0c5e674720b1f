#include "tawrmac/experiment.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>

#include "tawrmac/checkpoint.hpp"
#include "tawrmac/errors.hpp"
#include "tawrmac/metrics.hpp"
#include "tawrmac/model.hpp"
#include "tawrmac/synthetic.hpp"
#include "tawrmac/trainer.hpp"

namespace tawrmac {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::uint64_t pass_key(std::uint64_t phase, std::uint64_t index) {
  return derive_seed({phase, index});
}

constexpr std::uint64_t kTrainPass = 1, kValPass = 2, kTestPass = 3, kNodePass = 4;

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

json nan_safe(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

}  // namespace

std::string resolve_data_path(const RunConfig& c) {
  const char* env = std::getenv("TAWRMAC_DATA_DIR");
  const fs::path dir = env != nullptr ? fs::path(env) : fs::path();
  if (c.data_path.empty()) {
    if (dir.empty()) {
      throw ConfigError("dataset '" + c.dataset + "' needs data_path or $TAWRMAC_DATA_DIR");
    }
    return (dir / (c.dataset + ".csv")).string();
  }
  fs::path p(c.data_path);
  if (p.is_relative() && !dir.empty() && !fs::exists(p)) p = dir / p;
  return p.string();
}

Dataset load_dataset(const RunConfig& c) {
  Dataset d;
  d.name = c.dataset;
  if (c.dataset == "synthetic" || c.dataset == "synthetic_novel") {
    SyntheticOptions o;
    o.events = c.synthetic_events;
    o.novel_fraction = c.dataset == "synthetic_novel" ? c.synthetic_novel_fraction : 0.0;
    d.source = "generated";
    d.log = make_synthetic_stream(o);
    return d;
  }
  d.source = resolve_data_path(c);
  d.log = load_jodie_csv(d.source, LoadOptions{c.bipartite});
  return d;
}

std::string results_csv(const std::vector<MetricRow>& rows) {
  std::ostringstream os;
  os << "dataset,setting,nss,seed,epoch,ap,auc\n";
  char buf[64];
  for (const auto& r : rows) {
    os << r.dataset << ',' << r.setting << ',' << r.nss << ',' << r.seed << ',' << r.epoch;
    std::snprintf(buf, sizeof buf, ",%.17g", r.ap);
    os << buf;
    std::snprintf(buf, sizeof buf, ",%.17g\n", r.auc);
    os << buf;
  }
  return os.str();
}

std::vector<MetricRow> run_edgebank(const RunConfig& c, const Dataset& data) {
  const auto& events = data.log.events;
  const auto split = chrono_split(events);
  InductiveMask mask;
  const bool inductive = c.setting == "inductive";
  if (inductive) mask = mark_inductive_nodes(events, split, c.inductive_fraction, c.seed);

  std::vector<MetricRow> rows;
  for (std::size_t s = 0; s < c.nss.size(); ++s) {
    EdgeBank bank;
    for (std::size_t i = 0; i < split.test.begin; ++i) bank.observe(events[i].src, events[i].dst);
    NegativeSampler sampler(parse_neg_strategy(c.nss[s]), events, split.test);
    double ap = 0.0, auc = 0.0;
    std::size_t scored = 0, b = 0;
    const auto key = pass_key(kTestPass, s);
    for (const auto& batch : make_batches(split.test, c.batch_size)) {
      Rng rng({c.seed, key, b++, 0x4e47ULL});
      const auto negs = sampler.sample(batch, rng);
      std::vector<double> scores;
      std::vector<int> labels;
      for (int side = 1; side >= 0; --side) {
        for (std::size_t i = 0; i < batch.size(); ++i) {
          const auto& e = events[batch.begin + i];
          if (inductive && !mask.is_inductive_edge(e)) continue;
          scores.push_back(side == 1 ? bank.predict(e.src, e.dst)
                                     : bank.predict(negs.src[i], negs.dst[i]));
          labels.push_back(side);
        }
      }
      if (!scores.empty()) {
        ap += average_precision(scores, labels);
        auc += auc_roc(scores, labels);
        ++scored;
      }
      for (std::size_t i = batch.begin; i < batch.end; ++i) bank.observe(events[i].src, events[i].dst);
    }
    const double denom = scored > 0 ? static_cast<double>(scored) : std::nan("");
    rows.push_back({data.name, c.setting, c.nss[s], c.seed, 0, ap / denom, auc / denom});
  }
  return rows;
}

namespace {

struct NodeTaskResult {
  double val_auc = std::nan("");
  double test_auc = std::nan("");
  std::size_t classes = 0;
  std::size_t labelled = 0;
};

// Frozen backbone: one streaming pass collects emb_src for every event, then
// only the classification head is trained on the training split.
NodeTaskResult run_node_classification(const RunConfig& c, const Tawrmac& model,
                                       const TemporalGraph& g, const DegreeIndex& degrees,
                                       const SplitSpec& split, StreamConfig scfg) {
  NodeTaskResult res;
  const auto& events = g.events();
  int max_label = -1;
  for (const auto& e : events) {
    if (e.state_label) max_label = std::max(max_label, *e.state_label);
  }
  if (max_label < 1) throw ConfigError("node_class needs at least two distinct state labels");
  res.classes = static_cast<std::size_t>(max_label) + 1;

  MemoryStore memory(g.num_nodes(), model.config().d_m);
  scfg.keep_embeddings = true;
  Streamer streamer(model, g, degrees, memory, scfg);
  NegativeSampler sampler(NegStrategy::kRandom, events, {0, events.size()});
  const auto dim = model.embedding_dim();
  Tensor emb(events.size(), dim);
  streamer.run({0, events.size()}, sampler, pass_key(kNodePass, 0), nullptr, {},
               [&](IndexRange batch, const BatchOutput& out) {
                 std::copy(out.emb_src.data.begin(), out.emb_src.data.end(),
                           emb.data.begin() + static_cast<std::ptrdiff_t>(batch.begin * dim));
               });

  const auto gather = [&](IndexRange r, Tensor& x, std::vector<int>& y) {
    std::vector<std::size_t> rows;
    for (auto i = r.begin; i < r.end; ++i) {
      if (events[i].state_label) rows.push_back(i);
    }
    x = Tensor(rows.size(), dim);
    y.clear();
    for (std::size_t j = 0; j < rows.size(); ++j) {
      std::copy(emb.row(rows[j]).begin(), emb.row(rows[j]).end(), x.row(j).begin());
      y.push_back(*events[rows[j]].state_label);
    }
  };
  Tensor xtr, xva, xte;
  std::vector<int> ytr, yva, yte;
  gather(split.train, xtr, ytr);
  gather(split.val, xva, yva);
  gather(split.test, xte, yte);
  res.labelled = ytr.size() + yva.size() + yte.size();
  if (ytr.empty()) throw ConfigError("node_class: no labelled training events");

  NodeClassifier head(dim, c.d_m, res.classes, c.seed);
  Adam opt(head.params, AdamOptions{c.node_lr});
  const auto score = [&](const Tensor& x, const std::vector<int>& y) {
    if (y.empty()) return std::nan("");
    Tape tape(false);
    const auto probs = head(tape.constant(x));
    try {
      return macro_auc(probs.value().data, res.classes, y);
    } catch (const std::invalid_argument&) {
      return std::nan("");
    }
  };
  auto best = head.params.snapshot();
  double best_val = -1.0;
  for (std::size_t epoch = 0; epoch < c.node_epochs; ++epoch) {
    Tape tape;
    const auto loss = ad::nll(head(tape.constant(xtr)), ytr);
    tape.backward(loss);
    opt.step();
    const double v = score(xva, yva);
    if (!(v <= best_val)) {
      best_val = std::isfinite(v) ? v : best_val;
      best = head.params.snapshot();
    }
  }
  head.params.restore(best);
  res.val_auc = score(xva, yva);
  res.test_auc = score(xte, yte);
  return res;
}

}  // namespace

RunResult run_experiment(const RunConfig& c, const RunOptions& opts) {
  validate(c);
  const auto t_start = std::chrono::steady_clock::now();
  auto log = [&](const std::string& line) {
    if (opts.log != nullptr) *opts.log << line << std::endl;
  };

  const auto data = load_dataset(c);
  const auto& events = data.log.events;
  const auto split = chrono_split(events);
  const bool inductive = c.setting == "inductive";
  InductiveMask mask;
  if (inductive) mask = mark_inductive_nodes(events, split, c.inductive_fraction, c.seed);

  RunResult result;
  json& summary = result.summary;
  summary["config"] = to_json(c);
  summary["dataset"] = {{"name", data.name},
                        {"source", data.source},
                        {"events", events.size()},
                        {"edge_feat_dim", data.log.edge_feat_dim},
                        {"bipartite", data.log.bipartite}};
  summary["split"] = split_to_json(split);

  fs::path out_dir(c.output_dir);
  if (opts.write_outputs) {
    fs::create_directories(out_dir);
    write_text(out_dir / "split.json", split_to_json(split).dump(2) + "\n");
    if (inductive) write_text(out_dir / "mask.json", mask_to_json(mask).dump(2) + "\n");
  }

  if (c.model == "edgebank") {
    result.rows = run_edgebank(c, data);
    summary["test"] = json::array();
    for (const auto& r : result.rows) {
      summary["test"].push_back({{"nss", r.nss}, {"ap", nan_safe(r.ap)}, {"auc", nan_safe(r.auc)}});
    }
  } else {
    const TemporalGraph full = build_graph(events);
    std::vector<Event> train_events;
    if (inductive) {
      for (auto i : mask.kept_train_events) train_events.push_back(events[i]);
    } else {
      train_events.assign(events.begin() + static_cast<std::ptrdiff_t>(split.train.begin),
                          events.begin() + static_cast<std::ptrdiff_t>(split.train.end));
    }
    const TemporalGraph train_graph = build_graph(std::move(train_events), 0, full.num_nodes());
    const DegreeIndex full_degrees(full), train_degrees(train_graph);

    const auto edge_dim = model_edge_dim(full);
    Tawrmac model(model_config(c, edge_dim, 0), c.seed);
    Adam opt(model.parameters(), AdamOptions{c.lr});
    StreamConfig scfg;
    scfg.batch_size = c.batch_size;
    scfg.cutoff = parse_neighbor_cutoff(c.neighbor_cutoff);
    scfg.seed = c.seed;

    ScoreFilter filter;
    if (inductive) filter = [&mask](const Event& e) { return mask.is_inductive_edge(e); };

    MemoryStore memory(full.num_nodes(), c.d_m);
    MemoryStore best_memory = memory;
    auto best_params = model.parameters().snapshot();
    double best_loss = std::numeric_limits<double>::infinity();
    std::size_t best_epoch = 0, bad_epochs = 0;
    json epochs = json::array();

    for (std::size_t epoch = 0; epoch < c.epochs; ++epoch) {
      const auto t0 = std::chrono::steady_clock::now();
      memory.reset();
      NegativeSampler train_sampler(NegStrategy::kRandom, train_graph.events(),
                                    {0, train_graph.num_events()});
      Streamer trainer(model, train_graph, train_degrees, memory, scfg);
      const auto tr = trainer.run({0, train_graph.num_events()}, train_sampler,
                                  pass_key(kTrainPass, epoch), &opt);

      MemoryStore val_memory = memory;
      NegativeSampler val_sampler(NegStrategy::kRandom, events, split.val);
      Streamer validator(model, full, full_degrees, val_memory, scfg);
      const auto vr = validator.run(split.val, val_sampler, pass_key(kValPass, epoch), nullptr, filter);

      const double secs = seconds_since(t0);
      epochs.push_back({{"epoch", epoch + 1},
                        {"train_loss", tr.loss},
                        {"val_loss", vr.loss},
                        {"val_ap", nan_safe(vr.ap)},
                        {"val_auc", nan_safe(vr.auc)},
                        {"seconds", secs}});
      std::ostringstream line;
      line.precision(4);
      line << std::fixed << "epoch " << epoch + 1 << " train_loss " << tr.loss << " val_loss "
           << vr.loss << " val_ap " << vr.ap << " val_auc " << vr.auc << " (" << secs << "s)";
      log(line.str());

      if (vr.loss < best_loss) {
        best_loss = vr.loss;
        best_epoch = epoch + 1;
        best_params = model.parameters().snapshot();
        best_memory = val_memory;
        bad_epochs = 0;
      } else if (++bad_epochs >= c.patience) {
        log("early stop after epoch " + std::to_string(epoch + 1));
        break;
      }
    }
    summary["epochs"] = epochs;
    summary["best_epoch"] = best_epoch;
    summary["best_val_loss"] = best_loss;
    model.parameters().restore(best_params);

    if (c.task == "link_pred") {
      summary["test"] = json::array();
      for (std::size_t s = 0; s < c.nss.size(); ++s) {
        MemoryStore test_memory = best_memory;
        NegativeSampler sampler(parse_neg_strategy(c.nss[s]), events, split.test);
        Streamer tester(model, full, full_degrees, test_memory, scfg);
        const auto res = tester.run(split.test, sampler, pass_key(kTestPass, s), nullptr, filter);
        result.rows.push_back({data.name, c.setting, c.nss[s], c.seed, best_epoch, res.ap, res.auc});
        summary["test"].push_back({{"nss", c.nss[s]},
                                   {"ap", nan_safe(res.ap)},
                                   {"auc", nan_safe(res.auc)},
                                   {"loss", res.loss},
                                   {"fallback_negatives", res.fallbacks}});
        std::ostringstream line;
        line.precision(4);
        line << std::fixed << "test " << c.nss[s] << " ap " << res.ap << " auc " << res.auc;
        log(line.str());
      }
    } else {
      const auto nc = run_node_classification(c, model, full, full_degrees, split, scfg);
      result.rows.push_back({data.name, c.setting, "none", c.seed, best_epoch, std::nan(""),
                             nc.test_auc});
      summary["node_classification"] = {{"classes", nc.classes},
                                        {"labelled_events", nc.labelled},
                                        {"val_auc", nan_safe(nc.val_auc)},
                                        {"test_auc", nan_safe(nc.test_auc)}};
    }
    if (opts.write_outputs) {
      save_checkpoint((out_dir / "checkpoint.json").string(), model.parameters(), &best_memory,
                      to_json(c));
    }
  }

  summary["seconds"] = seconds_since(t_start);
  if (opts.write_outputs) {
    write_text(out_dir / "results.csv", results_csv(result.rows));
    write_text(out_dir / "summary.json", summary.dump(2) + "\n");
  }
  return result;
}

}  // namespace tawrmac

// Acceptance checks. Prints one PASS/FAIL/SKIP line per criterion and exits
// non-zero if any criterion fails. Pass criterion numbers as arguments to run
// a subset.

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

#include "oracles.hpp"
#include "tawrmac/config.hpp"
#include "tawrmac/experiment.hpp"
#include "tawrmac/metrics.hpp"
#include "tawrmac/nce.hpp"
#include "tawrmac/synthetic.hpp"
#include "tawrmac/tawr.hpp"
#include "tawrmac/trainer.hpp"
#include "tawrmac/verification.hpp"

using namespace tawrmac;
namespace fs = std::filesystem;

namespace {

enum class Status { kPass, kFail, kSkip };

struct Outcome {
  Status status = Status::kFail;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

Outcome verdict(bool ok, std::string detail) { return {ok ? Status::kPass : Status::kFail, std::move(detail)}; }

Event ev(NodeId s, NodeId d, double t) {
  Event e;
  e.src = s;
  e.dst = d;
  e.t = t;
  e.edge_feat = {0.0};
  return e;
}

// Pinned tolerances.
constexpr double kGradTol = 1e-4;
constexpr double kGradSeconds = 60.0;
constexpr double kMetricTol = 1e-12;
constexpr double kEdgeBankUciAp = 76.20;
constexpr double kEdgeBankUciTol = 2.0;
constexpr double kEdgeBankSeconds = 120.0;
constexpr double kRelabelTol = 1e-10;
constexpr double kChiSquareP = 0.01;
constexpr double kSmokeAp = 0.95;
constexpr double kSmokeSeconds = 600.0;
constexpr double kUciAp = 0.90;
constexpr double kUciMargin = 0.10;
constexpr double kUciSeconds = 7200.0;

// Small model used by the wiring and determinism checks.
RunConfig small_synthetic(const std::string& out) {
  RunConfig c;
  c.dataset = "synthetic";
  c.synthetic_events = 2000;
  c.M = 4;
  c.r = 8;
  c.d_m = 16;
  c.d_phi1 = 8;
  c.d_phi2 = 8;
  c.d_ce = 4;
  c.d_v = 8;
  c.d_w = 16;
  c.lr = 1e-3;
  c.epochs = 1;
  c.threads = 1;
  c.output_dir = out;
  return c;
}

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("tawrmac_acceptance_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string uci_path() {
  const char* dir = std::getenv("TAWRMAC_DATA_DIR");
  if (dir == nullptr || *dir == '\0') return {};
  const auto p = fs::path(dir) / "uci.csv";
  return fs::exists(p) ? p.string() : std::string{};
}

RunConfig uci_config() {
  auto c = load_config((fs::path(TAWRMAC_SOURCE_DIR) / "configs" / "uci.json").string());
  c.data_path = uci_path();
  c.nss = {"random"};
  c.seed = 0;
  return c;
}

// ---------------------------------------------------------------------------

Outcome c1_gradients() {
  const auto t0 = Clock::now();
  const auto results = gradcheck_suite(0);
  const double secs = seconds_since(t0);
  double worst = 0.0;
  std::string worst_name;
  for (const auto& r : results) {
    if (!(r.max_rel_error <= worst)) {
      worst = r.max_rel_error;
      worst_name = r.name;
    }
  }
  const bool ok = std::isfinite(worst) && worst <= kGradTol && secs < kGradSeconds;
  return verdict(ok, std::to_string(results.size()) + " checks, max_rel_error " + fmt("%.2e", worst) + " (" +
                         worst_name + ") <= 1e-4; " + fmt("%.1f", secs) + " s < 60 s");
}

Outcome c2_metric_oracles() {
  Rng rng(2024);
  double ap_err = 0.0, auc_err = 0.0, rho_err = 0.0;
  bool ranks_equal = true;
  for (int rep = 0; rep < 1000; ++rep) {
    const std::size_t n = 2 + rng.below(60);
    std::vector<double> s(n);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = static_cast<double>(rng.below(12)) / 12.0;  // coarse grid gives ties
      y[i] = static_cast<int>(rng.below(2));
    }
    const auto pos = rng.below(n);
    y[pos] = 1;
    y[(pos + 1 + rng.below(n - 1)) % n] = 0;
    ap_err = std::max(ap_err, std::abs(average_precision(s, y, TieMode::kStable) - oracle::average_precision(s, y, false)));
    ap_err = std::max(ap_err, std::abs(average_precision(s, y, TieMode::kGrouped) - oracle::average_precision(s, y, true)));
    auc_err = std::max(auc_err, std::abs(auc_roc(s, y) - oracle::auc(s, y)));
  }
  for (int rep = 0; rep < 1000; ++rep) {
    const std::size_t n = 3 + rng.below(40);
    std::vector<double> a(n), b(n);
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = static_cast<double>(rng.below(10));
      b[i] = rng.uniform();
    }
    a[0] = 0.0;
    a[1] = 10.0;
    ranks_equal = ranks_equal && average_ranks(a) == oracle::ranks(a);
    rho_err = std::max(rho_err, std::abs(spearman_rho(a, b).rho - oracle::spearman(a, b)));
  }
  const bool ok = ap_err <= kMetricTol && auc_err <= kMetricTol && rho_err <= kMetricTol && ranks_equal;
  return verdict(ok, "1000 instances each; max |AP - oracle| " + fmt("%.1e", ap_err) + ", |AUC - oracle| " +
                         fmt("%.1e", auc_err) + ", |rho - oracle| " + fmt("%.1e", rho_err) +
                         " (tol 1e-12); ranks identical: " + (ranks_equal ? "yes" : "no"));
}

Outcome c3_edgebank_uci() {
  if (uci_path().empty()) return {Status::kSkip, "UCI stream not found ($TAWRMAC_DATA_DIR/uci.csv)"};
  const auto t0 = Clock::now();
  const auto c = uci_config();
  const auto rows = run_edgebank(c, load_dataset(c));
  const double secs = seconds_since(t0);
  const double ap = rows.at(0).ap * 100.0;
  const bool ok = std::abs(ap - kEdgeBankUciAp) <= kEdgeBankUciTol && secs < kEdgeBankSeconds;
  return verdict(ok, "AP " + fmt("%.2f", ap) + " vs 76.20 +/- 2.0; " + fmt("%.1f", secs) + " s < 120 s");
}

Outcome c4_no_leakage() {
  const auto log = make_synthetic_stream({.events = 2000, .novel_fraction = 0.3, .seed = 4});
  const auto full = build_graph(log.events, 0);
  const DegreeIndex full_deg(full);
  ModelConfig mc;
  mc.d_m = 8;
  mc.d_phi1 = 4;
  mc.d_phi2 = 4;
  mc.layers = 2;
  mc.k = 5;
  mc.r = 6;
  mc.d_ce = 2;
  mc.M = 4;
  mc.w = 3;
  mc.d_v = 4;
  mc.d_w = 8;
  mc.walk_heads = 2;
  mc.dropout = 0.0;
  mc.edge_dim = 1;
  const Tawrmac model(mc, 4);
  const std::size_t batch = 20;
  const auto batches = make_batches({0, full.num_events()}, batch);

  MemoryStore memory(full.num_nodes(), mc.d_m);
  NegativeSampler sampler(NegStrategy::kRandom, full.events(), {0, full.num_events()});
  StreamConfig sc{.batch_size = batch, .seed = 4, .keep_embeddings = true};
  std::size_t checked = 0, mismatched = 0;
  for (std::size_t b = 0; b < batches.size() && checked < 100; ++b) {
    Rng rng({4, b});
    const auto negs = sampler.sample(batches[b], rng);
    // Prefix graph: every event up to the end of this batch; later events are
    // removed entirely.
    std::vector<Event> prefix(full.events().begin(), full.events().begin() + static_cast<std::ptrdiff_t>(batches[b].end));
    const auto cut = build_graph(std::move(prefix), 0, full.num_nodes());
    const DegreeIndex cut_deg(cut);

    MemoryStore mem_cut = memory;
    Streamer on_full(model, full, full_deg, memory, sc);
    Streamer on_cut(model, cut, cut_deg, mem_cut, sc);
    const auto a = on_full.step(batches[b], negs, 1);
    const auto c = on_cut.step(batches[b], negs, 1);
    const auto same = [](const std::vector<double>& x, const std::vector<double>& y) {
      if (x.size() != y.size()) return false;
      for (std::size_t i = 0; i < x.size(); ++i)
        if (std::bit_cast<std::uint64_t>(x[i]) != std::bit_cast<std::uint64_t>(y[i])) return false;
      return true;
    };
    const bool eq = same(a.emb_src.data, c.emb_src.data) && same(a.emb_dst.data, c.emb_dst.data) &&
                    same(a.pos, c.pos) && same(a.neg, c.neg) && same(memory.table(), mem_cut.table());
    mismatched += !eq;
    ++checked;
  }
  return verdict(checked == 100 && mismatched == 0,
                 std::to_string(checked) + " batch prefixes (L=2, 2000-event stream), " + std::to_string(mismatched) +
                     " with any bit difference in embeddings, scores or memory");
}

Outcome c5_relabel() {
  ParameterStore store;
  Rng init(5);
  const auto phi1 = LearnableTimeEncoder::create(store, "phi1", 4);
  const std::size_t w = 3, M = 5, r = 6;
  const auto walker = WalkEncoder::create(store, "tawr", w, 6, 8, 2, phi1, WalkQuery::kMean, init);
  const auto cooc = CoocEncoder::create(store, "nce", r, 3, init);

  Rng rng(55);
  double drift = 0.0;
  for (int rep = 0; rep < 50; ++rep) {
    const NodeId n = static_cast<NodeId>(6 + rng.below(10));
    std::vector<Event> events;
    double t = 0.0;
    const std::size_t m = 20 + rng.below(60);
    for (std::size_t i = 0; i < m; ++i) {
      t += static_cast<double>(rng.below(3));  // repeated timestamps included
      events.push_back(ev(static_cast<NodeId>(rng.below(n)), static_cast<NodeId>(rng.below(n)), t));
    }
    std::vector<NodeId> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    for (std::size_t i = n - 1; i > 0; --i) std::swap(perm[i], perm[rng.below(i + 1)]);
    auto relabeled = events;
    for (auto& e : relabeled) {
      e.src = perm[e.src];
      e.dst = perm[e.dst];
    }
    const auto g = build_graph(events, 0, n);
    const auto gp = build_graph(relabeled, 0, n);
    const double horizon = t + 1.0;

    std::vector<std::pair<NodeId, NodeId>> pairs;
    for (int p = 0; p < 4; ++p) pairs.emplace_back(static_cast<NodeId>(rng.below(n)), static_cast<NodeId>(rng.below(n)));
    const auto encode = [&](const TemporalGraph& gr, bool mapped) {
      std::vector<WalkRoot> ru, rv;
      std::vector<CoocMatrix> mu, mv;
      for (std::size_t p = 0; p < pairs.size(); ++p) {
        const NodeId u = mapped ? perm[pairs[p].first] : pairs[p].first;
        const NodeId v = mapped ? perm[pairs[p].second] : pairs[p].second;
        ru.push_back({u, horizon, horizon, 0.6, 2 * p});
        rv.push_back({v, horizon, horizon, 0.6, 2 * p + 1});
        auto [a, b] = build_cooccurrence(gr, u, v, horizon, r);
        mu.push_back(std::move(a));
        mv.push_back(std::move(b));
      }
      WalkConfig wc;
      wc.w = w;
      const auto wu = sample_walks(gr, ru, M, wc, 99);
      const auto wv = sample_walks(gr, rv, M, wc, 99);
      Tape tape(false);
      std::vector<double> out = walker(tape, anonymize(wu, wv, M)).value().data;
      for (const auto* mats : {&mu, &mv}) {
        const auto ce = cooc(tape, *mats).value().data;
        out.insert(out.end(), ce.begin(), ce.end());
      }
      return out;
    };
    const auto a = encode(g, false);
    const auto b = encode(gp, true);
    if (a.size() != b.size()) return {Status::kFail, "output sizes differ"};
    for (std::size_t i = 0; i < a.size(); ++i) drift = std::max(drift, std::abs(a[i] - b[i]));
  }
  return verdict(drift <= kRelabelTol, "50 random graphs, walk encodings + co-occurrence embeddings, max drift " +
                                          fmt("%.1e", drift) + " <= 1e-10");
}

Outcome c6_sampler() {
  // alpha = 0: six candidate edges must be picked uniformly.
  std::vector<Event> star;
  for (NodeId j = 1; j <= 6; ++j) star.push_back(ev(0, j, static_cast<double>(j)));
  const auto g = build_graph(star);
  WalkConfig wc;
  wc.w = 1;
  wc.alpha = 0.0;
  Rng rng(6);
  std::vector<double> counts(7, 0.0);
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) counts[sample_twr(g, 0, 10.0, 10.0, wc, 1.0, rng).steps[1].node] += 1.0;
  double chi2 = 0.0;
  for (NodeId j = 1; j <= 6; ++j) chi2 += std::pow(counts[j] - draws / 6.0, 2) / (draws / 6.0);
  const double p_value = boost::math::cdf(boost::math::complement(boost::math::chi_squared(5.0), chi2));

  // Restart rate and timestamp order on a random graph.
  Rng grng(66);
  std::vector<Event> events;
  double t = 0.0;
  for (int i = 0; i < 400; ++i) {
    t += 0.25 + grng.uniform();
    events.push_back(ev(static_cast<NodeId>(grng.below(15)), static_cast<NodeId>(grng.below(15)), t));
  }
  const auto rg = build_graph(events);
  wc.w = 4;
  wc.alpha = 1e-6;
  bool rates_ok = true;
  std::string rates;
  for (double pr : {0.1, 0.5, 0.9}) {
    Rng r2(static_cast<std::uint64_t>(pr * 100));
    int restarts = 0;
    for (int i = 0; i < draws; ++i) restarts += sample_twr(rg, static_cast<NodeId>(i % 15), t + 1, t + 1, wc, pr, r2).restart_used;
    const double rate = static_cast<double>(restarts) / draws;
    const double sigma = std::sqrt(pr * (1.0 - pr) / draws);
    rates_ok = rates_ok && std::abs(rate - (1.0 - pr)) <= 3.0 * sigma;
    rates += fmt(" pr=%.1f:", pr) + fmt("%.4f", rate);
  }
  std::size_t violations = 0;
  Rng r3(666);
  for (int i = 0; i < draws; ++i) {
    const double q = 20.0 + r3.uniform() * (t - 20.0);
    const auto walk = sample_twr(rg, static_cast<NodeId>(r3.below(15)), q, q, wc, 0.5, r3);
    double last = q;
    for (std::size_t s = 1; s < walk.steps.size(); ++s) {
      if (walk.steps[s].node == kNullNode) break;
      if (walk.restart_index && *walk.restart_index == s) continue;  // virtual edge, not a real one
      if (!(walk.steps[s].t < last)) ++violations;
      last = walk.steps[s].t;
    }
  }
  const bool ok = p_value > kChiSquareP && rates_ok && violations == 0;
  return verdict(ok, "uniform chi2 p=" + fmt("%.3f", p_value) + " > 0.01; restart rate within 3 sigma of 1-pr:" + rates +
                         "; non-decreasing real steps in 1e5 walks: " + std::to_string(violations));
}

Outcome c7_learning() {
  const auto base = load_config((fs::path(TAWRMAC_SOURCE_DIR) / "configs" / "synthetic.json").string());
  auto c = base;
  c.threads = 1;
  c.output_dir = scratch("c7").string();
  const auto t0 = Clock::now();
  const auto res = run_experiment(c, {.write_outputs = false});
  const double secs = seconds_since(t0);
  const double ap = res.rows.at(0).ap;
  const auto epochs = res.summary["epochs"].size();

  auto novel = base;
  novel.dataset = "synthetic_novel";
  novel.synthetic_novel_fraction = 0.3;
  novel.threads = 1;
  novel.output_dir = scratch("c7_novel").string();
  const double novel_ap = run_experiment(novel, {.write_outputs = false}).rows.at(0).ap;
  novel.model = "edgebank";
  const double bank_ap = run_experiment(novel, {.write_outputs = false}).rows.at(0).ap;

  const bool ok = ap >= kSmokeAp && epochs <= 10 && secs < kSmokeSeconds && novel_ap > bank_ap;
  return verdict(ok, "periodic stream AP " + fmt("%.4f", ap) + " >= 0.95 after " + std::to_string(epochs) +
                         " epochs in " + fmt("%.0f", secs) + " s < 600 s; 30% novel: model " + fmt("%.4f", novel_ap) +
                         " vs EdgeBank " + fmt("%.4f", bank_ap));
}

Outcome c8_uci() {
  if (uci_path().empty()) return {Status::kSkip, "UCI stream not found ($TAWRMAC_DATA_DIR/uci.csv)"};
  auto c = uci_config();
  c.epochs = std::min<std::size_t>(c.epochs, 30);
  c.threads = 0;
  c.output_dir = scratch("c8").string();
  const auto t0 = Clock::now();
  const double ap = run_experiment(c, {.write_outputs = false}).rows.at(0).ap;
  const double secs = seconds_since(t0);
  const double bank = run_edgebank(c, load_dataset(c)).at(0).ap;
  const bool ok = ap >= kUciAp && ap >= bank + kUciMargin && secs <= kUciSeconds;
  return verdict(ok, "AP " + fmt("%.4f", ap) + " >= 0.90, EdgeBank " + fmt("%.4f", bank) + " + 0.10; " +
                         fmt("%.0f", secs) + " s <= 7200 s");
}

Outcome c9_ablations() {
  struct Variant {
    std::string name;
    std::function<void(RunConfig&)> apply;
  };
  const std::vector<Variant> variants{
      {"no_mae", [](RunConfig& c) { c.no_mae = true; }},
      {"no_nce", [](RunConfig& c) { c.no_nce = true; }},
      {"no_tawr", [](RunConfig& c) { c.no_tawr = true; }},
      {"no_restart", [](RunConfig& c) { c.no_restart = true; }},
      {"learnable", [](RunConfig& c) { c.restart_mode = "learnable"; }},
      {"fixed:0.1", [](RunConfig& c) { c.restart_mode = "fixed:0.1"; }},
      {"fixed:0.8", [](RunConfig& c) { c.restart_mode = "fixed:0.8"; }},
      {"degree", [](RunConfig& c) { c.restart_mode = "degree"; }},
  };
  std::set<std::string> echoes;
  std::string failed;
  for (const auto& v : variants) {
    auto c = small_synthetic(scratch("c9").string());
    v.apply(c);
    try {
      const auto res = run_experiment(c, {.write_outputs = false});
      if (!std::isfinite(res.rows.at(0).ap)) failed += " " + v.name + "(nan)";
      echoes.insert(res.summary["config"].dump());
    } catch (const std::exception& e) {
      failed += " " + v.name + "(" + e.what() + ")";
    }
  }
  const bool ok = failed.empty() && echoes.size() == variants.size();
  return verdict(ok, std::to_string(variants.size()) + " variants run, " + std::to_string(echoes.size()) +
                         " distinct config echoes" + (failed.empty() ? "" : "; failed:" + failed));
}

Outcome c10_determinism() {
  std::vector<std::string> csvs;
  std::vector<std::size_t> threads{1, 1, 4};
  for (std::size_t i = 0; i < threads.size(); ++i) {
    auto c = small_synthetic(scratch("c10_" + std::to_string(i)).string());
    c.epochs = 2;
    c.nss = {"random", "historical", "inductive"};
    c.threads = threads[i];
    run_experiment(c);
    csvs.push_back(slurp(fs::path(c.output_dir) / "results.csv"));
  }
  const bool ok = !csvs[0].empty() && csvs[0] == csvs[1] && csvs[0] == csvs[2];
  return verdict(ok, "results.csv of runs with threads 1, 1, 4: " + std::string(ok ? "byte-identical" : "differ") + " (" +
                         std::to_string(csvs[0].size()) + " bytes)");
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"kernel gradient suite", c1_gradients},
      {"metric oracles", c2_metric_oracles},
      {"EdgeBank on UCI", c3_edgebank_uci},
      {"causality / no leakage", c4_no_leakage},
      {"anonymization invariance", c5_relabel},
      {"sampler statistics", c6_sampler},
      {"learning smoke test", c7_learning},
      {"desk-scale UCI run", c8_uci},
      {"ablation wiring", c9_ablations},
      {"determinism", c10_determinism},
  };
  std::set<std::size_t> selected;
  for (int i = 1; i < argc; ++i) selected.insert(static_cast<std::size_t>(std::atoi(argv[i])));

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto id = i + 1;
    if (!selected.empty() && !selected.contains(id)) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {Status::kFail, std::string("exception: ") + e.what()};
    }
    const char* tag = o.status == Status::kPass ? "PASS" : o.status == Status::kFail ? "FAIL" : "SKIP";
    failures += o.status == Status::kFail;
    std::printf("%s  %2zu  %s: %s\n", tag, id, criteria[i].first.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}

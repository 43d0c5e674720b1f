#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "tawrmac/analysis.hpp"
#include "tawrmac/checkpoint.hpp"
#include "tawrmac/config.hpp"
#include "tawrmac/errors.hpp"
#include "tawrmac/experiment.hpp"
#include "tawrmac/verification.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace tawrmac;

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;
constexpr double kGradTolerance = 1e-4;

struct Overrides {
  std::string config_path;
  std::vector<std::string> sets;  // key=value, value parsed as JSON when possible
  std::string seed, output, dataset, data_path, setting, task, model, restart_mode;
  std::vector<std::string> nss;
  bool no_mae = false, no_nce = false, no_tawr = false, no_restart = false;
  std::string epochs, threads;
};

void add_override_options(CLI::App* app, Overrides& o) {
  app->add_option("-c,--config", o.config_path, "JSON config file");
  app->add_option("--seed", o.seed, "random seed");
  app->add_option("-o,--output", o.output, "output directory");
  app->add_option("--dataset", o.dataset, "dataset name (synthetic, synthetic_novel, or a file stem)");
  app->add_option("--data-path", o.data_path, "event CSV path");
  app->add_option("--setting", o.setting, "transductive | inductive");
  app->add_option("--task", o.task, "link_pred | node_class");
  app->add_option("--model", o.model, "tawrmac | edgebank");
  app->add_option("--nss", o.nss, "negative sampling strategies (random historical inductive, or all)");
  app->add_option("--restart-mode", o.restart_mode, "learnable | degree | fixed:<v>");
  app->add_option("--epochs", o.epochs, "maximum epochs");
  app->add_option("--threads", o.threads, "walk sampling threads (0 = all)");
  app->add_flag("--no-mae", o.no_mae, "drop the memory/attention block");
  app->add_flag("--no-nce", o.no_nce, "drop the co-occurrence block");
  app->add_flag("--no-tawr", o.no_tawr, "drop the walk block");
  app->add_flag("--no-restart", o.no_restart, "walks never restart");
  app->add_option("--set", o.sets, "override any config key: key=value");
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  try {
    json j;
    in >> j;
    return j;
  } catch (const json::exception& e) {
    throw ConfigError("config " + path + " is not valid JSON: " + e.what());
  }
}

json parse_scalar(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::exception&) {
    return text;
  }
}

RunConfig resolve_config(const Overrides& o) {
  json j = o.config_path.empty() ? json::object() : read_json_file(o.config_path);
  if (!j.is_object()) throw ConfigError("config root must be an object");
  const auto put = [&j](const char* key, const std::string& v, bool numeric) {
    if (!v.empty()) j[key] = numeric ? parse_scalar(v) : json(v);
  };
  put("seed", o.seed, true);
  put("output_dir", o.output, false);
  put("dataset", o.dataset, false);
  put("data_path", o.data_path, false);
  put("setting", o.setting, false);
  put("task", o.task, false);
  put("model", o.model, false);
  put("restart_mode", o.restart_mode, false);
  put("epochs", o.epochs, true);
  put("threads", o.threads, true);
  if (!o.nss.empty()) j["nss"] = o.nss.size() == 1 ? json(o.nss[0]) : json(o.nss);
  if (o.no_mae) j["no_mae"] = true;
  if (o.no_nce) j["no_nce"] = true;
  if (o.no_tawr) j["no_tawr"] = true;
  if (o.no_restart) j["no_restart"] = true;
  for (const auto& s : o.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("--set expects key=value, got '" + s + "'");
    j[s.substr(0, eq)] = parse_scalar(s.substr(eq + 1));
  }
  return config_from_json(j);
}

// Maps library exceptions onto exit codes.
template <class Fn>
int guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

int cmd_run(const Overrides& o) {
  return guarded([&] {
    const auto c = resolve_config(o);
    RunOptions opts;
    opts.log = &std::cerr;
    const auto res = run_experiment(c, opts);
    std::cout << results_csv(res.rows);
    return 0;
  });
}

std::vector<std::size_t> parse_grid(const std::string& text, const char* name) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t pos = 0;
      const auto v = std::stoul(item, &pos);
      if (pos != item.size() || v == 0) throw std::invalid_argument(item);
      out.push_back(v);
    } catch (const std::exception&) {
      throw ConfigError(std::string("bad ") + name + " grid value '" + item + "'");
    }
  }
  if (out.empty()) throw ConfigError(std::string("empty ") + name + " grid");
  return out;
}

std::string csv_number(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string csv_field(std::string s) {
  for (auto& ch : s) {
    if (ch == ',' || ch == '\n' || ch == '"') ch = ' ';
  }
  return s;
}

int cmd_sweep(const Overrides& o, const std::string& m_grid, const std::string& r_grid) {
  return guarded([&] {
    const auto base = resolve_config(o);
    const auto Ms = parse_grid(m_grid, "M");
    const auto rs = parse_grid(r_grid, "r");
    fs::create_directories(base.output_dir);
    std::ostringstream table;
    table << "M,r,status,dataset,setting,nss,seed,epoch,ap,auc,error\n";
    int failures = 0;
    for (auto M : Ms) {
      for (auto r : rs) {
        RunConfig c = base;
        c.M = M;
        c.r = r;
        c.output_dir = (fs::path(base.output_dir) / ("M" + std::to_string(M) + "_r" + std::to_string(r))).string();
        std::cerr << "sweep cell M=" << M << " r=" << r << '\n';
        try {
          RunOptions opts;
          opts.log = &std::cerr;
          const auto res = run_experiment(c, opts);
          for (const auto& row : res.rows) {
            table << M << ',' << r << ",ok," << row.dataset << ',' << row.setting << ','
                  << row.nss << ',' << row.seed << ',' << row.epoch << ',' << csv_number(row.ap)
                  << ',' << csv_number(row.auc) << ",\n";
          }
        } catch (const std::exception& e) {
          ++failures;
          table << M << ',' << r << ",failed," << c.dataset << ',' << c.setting << ",," << c.seed
                << ",,,," << csv_field(e.what()) << '\n';
        }
      }
    }
    const auto path = fs::path(base.output_dir) / "sweep.csv";
    std::ofstream(path) << table.str();
    std::cout << table.str();
    return failures == 0 ? 0 : kExitFailure;
  });
}

int cmd_gradcheck(std::uint64_t seed) {
  return guarded([&] {
    std::cout << "check,max_rel_error,scalars,status\n";
    bool ok = true;
    for (const auto& r : gradcheck_suite(seed)) {
      const bool pass = r.max_rel_error <= kGradTolerance;
      ok = ok && pass;
      std::cout << r.name << ',' << csv_number(r.max_rel_error) << ',' << r.scalars << ','
                << (pass ? "pass" : "FAIL") << '\n';
    }
    return ok ? 0 : kExitFailure;
  });
}

int cmd_analyze_restart(const Overrides& o, std::string checkpoint) {
  return guarded([&] {
    const auto c = resolve_config(o);
    if (c.model != "tawrmac") throw ConfigError("analyze-restart needs model = tawrmac");
    if (checkpoint.empty()) {
      RunOptions opts;
      opts.log = &std::cerr;
      run_experiment(c, opts);
      checkpoint = (fs::path(c.output_dir) / "checkpoint.json").string();
    }
    const auto data = load_dataset(c);
    const auto graph = build_graph(data.log.events);
    Tawrmac model(model_config(c, model_edge_dim(graph), 0), c.seed);
    load_checkpoint(checkpoint, model.parameters(), nullptr);
    const auto a = analyze_restart(model, graph, c.batch_size, c.seed);
    const auto table = restart_table_csv(data.name, a);
    fs::create_directories(c.output_dir);
    std::ofstream(fs::path(c.output_dir) / "restart_analysis.csv") << table;
    std::ofstream samples(fs::path(c.output_dir) / "restart_samples.csv");
    samples << "node,t,pr,degree,inter_event\n";
    for (const auto& s : a.samples) {
      samples << s.node << ',' << csv_number(s.t) << ',' << csv_number(s.pr) << ','
              << csv_number(s.degree) << ',' << csv_number(s.inter_event) << '\n';
    }
    std::cout << table;
    return 0;
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Temporal link prediction with memory, co-occurrence and restart walks"};
  app.require_subcommand(1);

  Overrides run_o;
  auto* run = app.add_subcommand("run", "train, validate and test one configuration");
  add_override_options(run, run_o);

  Overrides sweep_o;
  std::string m_grid = "10", r_grid = "32";
  auto* sweep = app.add_subcommand("sweep", "one run per (M, r) cell, aggregated into sweep.csv");
  add_override_options(sweep, sweep_o);
  sweep->add_option("--M", m_grid, "comma-separated walk counts");
  sweep->add_option("--r", r_grid, "comma-separated co-occurrence lengths");

  std::uint64_t grad_seed = 0;
  auto* grad = app.add_subcommand("gradcheck", "central-difference checks of every differentiable block");
  grad->add_option("--seed", grad_seed, "seed for the random test inputs");

  Overrides an_o;
  std::string checkpoint;
  auto* analyze = app.add_subcommand(
      "analyze-restart", "Spearman table of restart probability vs degree and inter-event time");
  add_override_options(analyze, an_o);
  analyze->add_option("--checkpoint", checkpoint, "trained checkpoint (default: train first)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  if (*run) return cmd_run(run_o);
  if (*sweep) return cmd_sweep(sweep_o, m_grid, r_grid);
  if (*grad) return cmd_gradcheck(grad_seed);
  return cmd_analyze_restart(an_o, checkpoint);
}

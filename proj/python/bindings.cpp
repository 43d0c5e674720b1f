#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "json.hpp"
#include "tawrmac/config.hpp"
#include "tawrmac/errors.hpp"
#include "tawrmac/experiment.hpp"
#include "tawrmac/metrics.hpp"
#include "tawrmac/synthetic.hpp"
#include "tawrmac/tawr.hpp"
#include "tawrmac/verification.hpp"

namespace py = pybind11;
using namespace tawrmac;
using nlohmann::json;

namespace {

using EventTuple = std::tuple<NodeId, NodeId, double>;

std::vector<EventTuple> event_tuples(const EventLog& log) {
  std::vector<EventTuple> out;
  out.reserve(log.events.size());
  for (const auto& e : log.events) out.emplace_back(e.src, e.dst, e.t);
  return out;
}

std::vector<Event> to_events(const std::vector<EventTuple>& rows) {
  std::vector<Event> out;
  out.reserve(rows.size());
  for (const auto& [s, d, t] : rows) {
    Event e;
    e.src = s;
    e.dst = d;
    e.t = t;
    out.push_back(std::move(e));
  }
  return out;
}

RunConfig config_from_string(const std::string& text) {
  return config_from_json(text.empty() ? json::object() : json::parse(text));
}

}  // namespace

PYBIND11_MODULE(_tawrmac, m) {
  m.doc() = "Native core: event streams, walk sampling, metrics and experiment runner.";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);

  m.def("default_config", [] { return to_json(RunConfig{}).dump(); },
        "Default run configuration as a JSON string.");
  m.def("validate_config", [](const std::string& text) { return to_json(config_from_string(text)).dump(); },
        py::arg("config_json"), "Validates a JSON config and returns it with defaults filled in.");

  m.def("load_jodie_csv", [](const std::string& path, bool bipartite) {
        return event_tuples(load_jodie_csv(path, LoadOptions{bipartite}));
      },
      py::arg("path"), py::arg("bipartite") = true, "Events as (src, dst, t) tuples, sorted by time.");
  m.def("synthetic_stream",
        [](std::size_t events, double novel_fraction, std::uint64_t seed) {
          SyntheticOptions o;
          o.events = events;
          o.novel_fraction = novel_fraction;
          o.seed = seed;
          return event_tuples(make_synthetic_stream(o));
        },
        py::arg("events") = 10000, py::arg("novel_fraction") = 0.0, py::arg("seed") = 0);

  m.def("chrono_split",
        [](const std::vector<EventTuple>& rows) {
          const auto events = to_events(rows);
          const auto s = chrono_split(events);
          return py::dict(py::arg("train") = std::make_pair(s.train.begin, s.train.end),
                          py::arg("val") = std::make_pair(s.val.begin, s.val.end),
                          py::arg("test") = std::make_pair(s.test.begin, s.test.end));
        },
        py::arg("events"));

  m.def("average_precision",
        [](const std::vector<double>& scores, const std::vector<int>& labels, bool stable_ties) {
          return average_precision(scores, labels, stable_ties ? TieMode::kStable : TieMode::kGrouped);
        },
        py::arg("scores"), py::arg("labels"), py::arg("stable_ties") = false);
  m.def("auc_roc", [](const std::vector<double>& s, const std::vector<int>& y) { return auc_roc(s, y); },
        py::arg("scores"), py::arg("labels"));
  m.def("spearman",
        [](const std::vector<double>& x, const std::vector<double>& y) {
          const auto c = spearman_rho(x, y);
          return std::make_pair(c.rho, c.p_value);
        },
        py::arg("x"), py::arg("y"), "(rho, p_value)");

  m.def("sample_walks",
        [](const std::vector<EventTuple>& rows, NodeId root, double t, std::size_t M, std::size_t w,
           double alpha, double pr, std::uint64_t seed) {
          const auto g = build_graph(to_events(rows));
          WalkConfig cfg;
          cfg.w = w;
          cfg.alpha = alpha;
          const std::vector<WalkRoot> roots{{root, t, t, pr, seed}};
          const auto walks = sample_walks(g, roots, M, cfg, seed);
          std::vector<std::string> out;
          for (const auto& walk : walks) out.push_back(walk_dump_line(walk));
          return out;
        },
        py::arg("events"), py::arg("root"), py::arg("t"), py::arg("M") = 10, py::arg("w") = 4,
        py::arg("alpha") = 1e-6, py::arg("pr") = 1.0, py::arg("seed") = 0,
        "Backward walks from `root` as dump lines: `root t [node@t ...] restart_index`.");

  m.def("gradcheck", [](std::uint64_t seed) {
        std::vector<std::tuple<std::string, double, std::size_t>> out;
        for (const auto& r : gradcheck_suite(seed)) out.emplace_back(r.name, r.max_rel_error, r.scalars);
        return out;
      },
      py::arg("seed") = 0, "(name, max_rel_error, scalars) per differentiable block.");

  m.def("run_experiment",
        [](const std::string& config_json, bool write_outputs) {
          const auto c = config_from_string(config_json);
          RunResult res;
          {
            py::gil_scoped_release release;
            RunOptions opts;
            opts.write_outputs = write_outputs;
            res = run_experiment(c, opts);
          }
          return std::make_pair(results_csv(res.rows), res.summary.dump());
        },
        py::arg("config_json"), py::arg("write_outputs") = false,
        "Runs the full protocol; returns (results_csv, summary_json).");
}

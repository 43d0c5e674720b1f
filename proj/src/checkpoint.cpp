#include "tawrmac/checkpoint.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>

#include "tawrmac/errors.hpp"

namespace tawrmac {

using nlohmann::json;

std::string to_hex(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", x);
  return buf;
}

double from_hex(const std::string& s) {
  char* end = nullptr;
  const double x = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') throw FormatError("bad float literal '" + s + "'");
  return x;
}

namespace {

json hex_array(const std::vector<double>& v) {
  json a = json::array();
  for (double x : v) a.push_back(to_hex(x));
  return a;
}

std::vector<double> from_hex_array(const json& a) {
  std::vector<double> v;
  v.reserve(a.size());
  for (const auto& x : a) v.push_back(from_hex(x.get<std::string>()));
  return v;
}

}  // namespace

json parameters_to_json(const ad::ParameterStore& store) {
  json out = json::array();
  for (const auto* p : store.all()) {
    out.push_back({{"name", p->name},
                   {"rows", p->value.rows},
                   {"cols", p->value.cols},
                   {"frozen", p->frozen},
                   {"values", hex_array(p->value.data)}});
  }
  return out;
}

void parameters_from_json(const json& j, ad::ParameterStore& store) {
  std::size_t seen = 0;
  for (const auto& entry : j) {
    const auto name = entry.at("name").get<std::string>();
    auto* p = store.find(name);
    if (p == nullptr) throw FormatError("checkpoint has unknown parameter " + name);
    if (entry.at("rows").get<std::size_t>() != p->value.rows ||
        entry.at("cols").get<std::size_t>() != p->value.cols) {
      throw FormatError("checkpoint shape mismatch for " + name);
    }
    p->value.data = from_hex_array(entry.at("values"));
    if (p->value.data.size() != p->value.rows * p->value.cols) {
      throw FormatError("checkpoint value count mismatch for " + name);
    }
    ++seen;
  }
  if (seen != store.size()) throw FormatError("checkpoint is missing parameters");
}

json memory_to_json(const MemoryStore& memory) {
  json pending = json::array();
  for (const auto& [node, m] : memory.pending()) {
    pending.push_back({{"node", m.node},
                       {"t", to_hex(m.t)},
                       {"dt", to_hex(m.dt)},
                       {"self_memory", hex_array(m.self_memory)},
                       {"other_memory", hex_array(m.other_memory)},
                       {"features", hex_array(m.features)},
                       {"interaction", m.interaction}});
  }
  return {{"nodes", memory.num_nodes()},
          {"dim", memory.dim()},
          {"table", hex_array(memory.table())},
          {"last_update", hex_array(memory.last_updates())},
          {"pending", pending}};
}

MemoryStore memory_from_json(const json& j) {
  MemoryStore m(j.at("nodes").get<std::size_t>(), j.at("dim").get<std::size_t>());
  m.load(from_hex_array(j.at("table")), from_hex_array(j.at("last_update")));
  for (const auto& e : j.at("pending")) {
    RawMessage msg;
    msg.node = e.at("node").get<NodeId>();
    msg.t = from_hex(e.at("t").get<std::string>());
    msg.dt = from_hex(e.at("dt").get<std::string>());
    msg.self_memory = from_hex_array(e.at("self_memory"));
    msg.other_memory = from_hex_array(e.at("other_memory"));
    msg.features = from_hex_array(e.at("features"));
    msg.interaction = e.at("interaction").get<bool>();
    m.stash(std::move(msg));
  }
  return m;
}

void save_checkpoint(const std::string& path, const ad::ParameterStore& store,
                     const MemoryStore* memory, const json& config) {
  json j{{"format", "tawrmac-checkpoint"}, {"version", 1}, {"config", config},
         {"parameters", parameters_to_json(store)}};
  if (memory != nullptr) j["memory"] = memory_to_json(*memory);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path);
  out << j.dump() << '\n';
}

json load_checkpoint(const std::string& path, ad::ParameterStore& store, MemoryStore* memory) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw FormatError(std::string("checkpoint is not valid JSON: ") + e.what());
  }
  if (j.value("format", "") != "tawrmac-checkpoint") throw FormatError("not a checkpoint file");
  parameters_from_json(j.at("parameters"), store);
  if (memory != nullptr && j.contains("memory")) *memory = memory_from_json(j.at("memory"));
  return j.value("config", json::object());
}

}  // namespace tawrmac

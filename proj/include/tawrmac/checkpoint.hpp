#pragma once

#include <string>

#include "json.hpp"
#include "tawrmac/memory.hpp"
#include "tawrmac/tensor.hpp"

namespace tawrmac {

// Every float64 is stored as a C99 hex-float string ("%a"), so values
// round-trip bit for bit, including -inf for never-updated nodes.
std::string to_hex(double x);
double from_hex(const std::string& s);

nlohmann::json parameters_to_json(const ad::ParameterStore& store);
// Loads values by name; shapes must match and every parameter must be present.
void parameters_from_json(const nlohmann::json& j, ad::ParameterStore& store);

nlohmann::json memory_to_json(const MemoryStore& memory);
MemoryStore memory_from_json(const nlohmann::json& j);

void save_checkpoint(const std::string& path, const ad::ParameterStore& store,
                     const MemoryStore* memory, const nlohmann::json& config);
// Returns the stored config; restores memory when `memory` is set and present.
nlohmann::json load_checkpoint(const std::string& path, ad::ParameterStore& store,
                               MemoryStore* memory);

}  // namespace tawrmac

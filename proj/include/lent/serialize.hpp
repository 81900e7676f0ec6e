#pragma once

#include <json.hpp>
#include <string>
#include <vector>

#include "lent/config_space.hpp"
#include "lent/density.hpp"
#include "lent/identity_suite.hpp"
#include "lent/sde_flow.hpp"

namespace lent {

// Ordered keys keep serialized output byte-deterministic.
using Json = nlohmann::ordered_json;

// Shortest round-trip decimal for binary64 (std::to_chars).
std::string format_double(double v);

// One CSV line; no quoting (fields are numbers and plain identifiers).
std::string csv_row(const std::vector<std::string>& fields);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

// Marks: {"angle": a} on the circle, {"path": {"dt":…, "increments": [[…]]}}
// on Wiener space. Values survive a round trip bit-exactly.
Json mark_to_json(const Mark& mark);
Mark mark_from_json(const Json& j);

Json configuration_to_json(const Configuration& cfg);
Configuration configuration_from_json(const Json& j);

Json to_json(const NondegeneracyReport& report);
Json to_json(const IsotropyReport& report);
Json to_json(const SuiteReport& report);
Json to_json(const MomentCheckReport& report);

}  // namespace lent

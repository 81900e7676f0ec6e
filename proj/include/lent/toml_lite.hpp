#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace lent {

// Strict subset of TOML sufficient for experiment configs: top-level and
// one-level [section] tables, scalar values (integer, float, string, bool)
// and flat arrays of floats/integers. Unknown constructs, duplicate keys,
// and type mismatches are reported as ConfigError with source line numbers.
struct TomlValue {
  enum class Kind { integer, real, string, boolean, array };
  Kind kind = Kind::integer;
  std::int64_t int_v = 0;
  double real_v = 0.0;
  std::string str_v;
  bool bool_v = false;
  std::vector<TomlValue> array_v;
  int line = 0;
};

class TomlDoc {
 public:
  // `source` names the input in diagnostics (file path or "<inline>").
  static TomlDoc parse(const std::string& text, const std::string& source);

  const std::string& source() const { return source_; }
  bool has_section(const std::string& section) const;

  // nullptr when absent; found keys are remembered as consumed.
  const TomlValue* find(const std::string& section, const std::string& key) const;

  // Typed getters with defaults; throw ConfigError on type mismatch.
  std::int64_t get_int(const std::string& section, const std::string& key,
                       std::int64_t fallback) const;
  double get_real(const std::string& section, const std::string& key, double fallback) const;
  std::string get_str(const std::string& section, const std::string& key,
                      const std::string& fallback) const;
  bool get_bool(const std::string& section, const std::string& key, bool fallback) const;
  std::vector<double> get_real_array(const std::string& section, const std::string& key,
                                     const std::vector<double>& fallback) const;
  bool has(const std::string& section, const std::string& key) const;

  // Rejects keys the schema never consumed; call after reading everything.
  void reject_unconsumed() const;

 private:
  std::string source_;
  // section -> key -> value; "" is the top level
  std::map<std::string, std::map<std::string, TomlValue>> tables_;
  mutable std::set<std::string> consumed_;  // "section\x1fkey"

  [[noreturn]] void fail(int line, const std::string& message) const;
};

}  // namespace lent

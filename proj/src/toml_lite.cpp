#include "lent/toml_lite.hpp"

#include <cctype>
#include <charconv>
#include <sstream>

#include "lent/errors.hpp"

namespace lent {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0;
  std::size_t b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

// Cuts a trailing comment, respecting double-quoted strings.
std::string strip_comment(const std::string& line) {
  bool in_string = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (in_string) {
      if (c == '\\') {
        ++i;
      } else if (c == '"') {
        in_string = false;
      }
    } else if (c == '"') {
      in_string = true;
    } else if (c == '#') {
      return line.substr(0, i);
    }
  }
  return line;
}

bool valid_name(const std::string& s) {
  if (s.empty()) return false;
  for (char c : s) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-') return false;
  }
  return true;
}

const char* kind_name(TomlValue::Kind kind) {
  switch (kind) {
    case TomlValue::Kind::integer: return "integer";
    case TomlValue::Kind::real: return "float";
    case TomlValue::Kind::string: return "string";
    case TomlValue::Kind::boolean: return "bool";
    case TomlValue::Kind::array: return "array";
  }
  return "?";
}

}  // namespace

void TomlDoc::fail(int line, const std::string& message) const {
  throw ConfigError(source_ + ":" + std::to_string(line) + ": " + message);
}

namespace {

class ValueParser {
 public:
  ValueParser(const std::string& source, int line) : source_(source), line_(line) {}

  TomlValue parse(const std::string& raw) {
    const std::string text = trim(raw);
    if (text.empty()) fail("missing value");
    TomlValue v;
    v.line = line_;
    if (text.front() == '"') {
      v.kind = TomlValue::Kind::string;
      v.str_v = parse_string(text);
      return v;
    }
    if (text.front() == '[') {
      v.kind = TomlValue::Kind::array;
      v.array_v = parse_array(text);
      return v;
    }
    if (text == "true" || text == "false") {
      v.kind = TomlValue::Kind::boolean;
      v.bool_v = text == "true";
      return v;
    }
    return parse_number(text);
  }

 private:
  [[noreturn]] void fail(const std::string& message) const {
    throw ConfigError(source_ + ":" + std::to_string(line_) + ": " + message);
  }

  std::string parse_string(const std::string& text) const {
    if (text.size() < 2 || text.back() != '"') fail("unterminated string");
    std::string out;
    for (std::size_t i = 1; i + 1 < text.size(); ++i) {
      char c = text[i];
      if (c == '"') fail("unexpected quote inside string (escape it as \\\")");
      if (c == '\\') {
        if (i + 2 >= text.size()) fail("dangling escape in string");
        const char e = text[++i];
        switch (e) {
          case '"': out.push_back('"'); break;
          case '\\': out.push_back('\\'); break;
          case 'n': out.push_back('\n'); break;
          case 't': out.push_back('\t'); break;
          case 'r': out.push_back('\r'); break;
          default: fail(std::string("unsupported escape \\") + e);
        }
      } else {
        out.push_back(c);
      }
    }
    return out;
  }

  std::vector<TomlValue> parse_array(const std::string& text) const {
    if (text.back() != ']') fail("unterminated array");
    std::vector<TomlValue> out;
    const std::string inner = trim(text.substr(1, text.size() - 2));
    if (inner.empty()) return out;
    std::size_t start = 0;
    bool in_string = false;
    for (std::size_t i = 0; i <= inner.size(); ++i) {
      const bool at_end = i == inner.size();
      const char c = at_end ? ',' : inner[i];
      if (in_string) {
        if (c == '\\') {
          ++i;
        } else if (c == '"') {
          in_string = false;
        }
        continue;
      }
      if (c == '"') {
        in_string = true;
      } else if (c == ',') {
        const std::string item = trim(inner.substr(start, i - start));
        if (item.empty()) fail("empty array element");
        if (item.front() == '[') fail("nested arrays are not supported");
        ValueParser element(source_, line_);
        out.push_back(element.parse(item));
        start = i + 1;
      }
    }
    if (in_string) fail("unterminated string in array");
    return out;
  }

  TomlValue parse_number(const std::string& text) const {
    TomlValue v;
    v.line = line_;
    const bool looks_float = text.find_first_of(".eE") != std::string::npos;
    if (!looks_float) {
      std::int64_t value = 0;
      const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
      if (ec == std::errc() && ptr == text.data() + text.size()) {
        v.kind = TomlValue::Kind::integer;
        v.int_v = value;
        v.real_v = static_cast<double>(value);
        return v;
      }
    }
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size())
      fail("cannot parse value '" + text + "'");
    v.kind = TomlValue::Kind::real;
    v.real_v = value;
    return v;
  }

  const std::string& source_;
  int line_;
};

}  // namespace

TomlDoc TomlDoc::parse(const std::string& text, const std::string& source) {
  TomlDoc doc;
  doc.source_ = source;
  doc.tables_[""];

  std::istringstream stream(text);
  std::string raw;
  std::string section;
  int line_no = 0;
  while (std::getline(stream, raw)) {
    ++line_no;
    const std::string line = trim(strip_comment(raw));
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']') doc.fail(line_no, "unterminated section header");
      const std::string name = trim(line.substr(1, line.size() - 2));
      if (!valid_name(name)) doc.fail(line_no, "invalid section name '" + name + "'");
      if (doc.tables_.count(name)) doc.fail(line_no, "section [" + name + "] opened twice");
      doc.tables_[name];
      section = name;
      continue;
    }

    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) doc.fail(line_no, "expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    if (!valid_name(key)) doc.fail(line_no, "invalid key '" + key + "'");
    auto& table = doc.tables_[section];
    if (table.count(key)) {
      doc.fail(line_no, "duplicate key '" + key + "' (first set on line " +
                            std::to_string(table[key].line) + ")");
    }
    ValueParser parser(source, line_no);
    table[key] = parser.parse(line.substr(eq + 1));
  }
  return doc;
}

bool TomlDoc::has_section(const std::string& section) const {
  return tables_.count(section) > 0;
}

const TomlValue* TomlDoc::find(const std::string& section, const std::string& key) const {
  auto table = tables_.find(section);
  if (table == tables_.end()) return nullptr;
  auto it = table->second.find(key);
  if (it == table->second.end()) return nullptr;
  consumed_.insert(section + '\x1f' + key);
  return &it->second;
}

bool TomlDoc::has(const std::string& section, const std::string& key) const {
  return find(section, key) != nullptr;
}

std::int64_t TomlDoc::get_int(const std::string& section, const std::string& key,
                              std::int64_t fallback) const {
  const TomlValue* v = find(section, key);
  if (!v) return fallback;
  if (v->kind != TomlValue::Kind::integer)
    fail(v->line, "key '" + key + "' must be an integer, got " + kind_name(v->kind));
  return v->int_v;
}

double TomlDoc::get_real(const std::string& section, const std::string& key,
                         double fallback) const {
  const TomlValue* v = find(section, key);
  if (!v) return fallback;
  if (v->kind != TomlValue::Kind::real && v->kind != TomlValue::Kind::integer)
    fail(v->line, "key '" + key + "' must be a number, got " + kind_name(v->kind));
  return v->real_v;
}

std::string TomlDoc::get_str(const std::string& section, const std::string& key,
                             const std::string& fallback) const {
  const TomlValue* v = find(section, key);
  if (!v) return fallback;
  if (v->kind != TomlValue::Kind::string)
    fail(v->line, "key '" + key + "' must be a string, got " + kind_name(v->kind));
  return v->str_v;
}

bool TomlDoc::get_bool(const std::string& section, const std::string& key, bool fallback) const {
  const TomlValue* v = find(section, key);
  if (!v) return fallback;
  if (v->kind != TomlValue::Kind::boolean)
    fail(v->line, "key '" + key + "' must be a bool, got " + kind_name(v->kind));
  return v->bool_v;
}

std::vector<double> TomlDoc::get_real_array(const std::string& section, const std::string& key,
                                            const std::vector<double>& fallback) const {
  const TomlValue* v = find(section, key);
  if (!v) return fallback;
  if (v->kind != TomlValue::Kind::array)
    fail(v->line, "key '" + key + "' must be an array, got " + kind_name(v->kind));
  std::vector<double> out;
  out.reserve(v->array_v.size());
  for (const TomlValue& e : v->array_v) {
    if (e.kind != TomlValue::Kind::real && e.kind != TomlValue::Kind::integer)
      fail(e.line, "array '" + key + "' must contain numbers only");
    out.push_back(e.real_v);
  }
  return out;
}

void TomlDoc::reject_unconsumed() const {
  for (const auto& [section, table] : tables_) {
    for (const auto& [key, value] : table) {
      const std::string tag = section + '\x1f' + key;
      if (consumed_.count(tag)) continue;
      const std::string where = section.empty() ? key : "[" + section + "] " + key;
      fail(value.line, "unknown key '" + where + "'");
    }
  }
}

}  // namespace lent

#pragma once
// Flat key-value run configuration: "key = value" lines with '#' comments.
// Parsing remembers line numbers so diagnostics point at the offending
// line; values round-trip as text at full double precision.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "rotax/cmatrix.hpp"

namespace rotax {

struct ConfigError : Error {
  explicit ConfigError(const std::string& msg) : Error(msg) {}
};

inline std::string format_number(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

class Config {
 public:
  struct Entry {
    std::string key;
    std::string value;
    int line = 0;  // 0 when set programmatically
  };

  static Config parse_text(const std::string& text,
                           const std::string& origin = "config") {
    Config c;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const std::string body = strip(line.substr(0, line.find('#')));
      if (body.empty()) continue;
      const size_t eq = body.find('=');
      if (eq == std::string::npos)
        throw ConfigError(origin + " line " + std::to_string(lineno) +
                          ": expected 'key = value'");
      const std::string key = strip(body.substr(0, eq));
      const std::string value = strip(body.substr(eq + 1));
      if (key.empty() || key.find_first_of(" \t") != std::string::npos)
        throw ConfigError(origin + " line " + std::to_string(lineno) +
                          ": malformed key");
      if (value.empty())
        throw ConfigError(origin + " line " + std::to_string(lineno) +
                          ": empty value for key '" + key + "'");
      if (c.index_.count(key))
        throw ConfigError(origin + " line " + std::to_string(lineno) +
                          ": duplicate key '" + key + "' (first at line " +
                          std::to_string(c.entry(key).line) + ")");
      c.entries_.push_back({key, value, lineno});
      c.index_[key] = c.entries_.size() - 1;
    }
    return c;
  }

  static Config parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_text(buf.str(), path);
  }

  bool has(const std::string& key) const { return index_.count(key) > 0; }

  void set(const std::string& key, const std::string& value) {
    if (value.empty()) throw ConfigError("empty value for key '" + key + "'");
    auto it = index_.find(key);
    if (it != index_.end()) {
      entries_[it->second].value = value;
      entries_[it->second].line = 0;
    } else {
      entries_.push_back({key, value, 0});
      index_[key] = entries_.size() - 1;
    }
  }

  void set(const std::string& key, double value) {
    set(key, format_number(value));
  }

  std::string get_string(const std::string& key) const {
    return entry(key).value;
  }
  std::string get_string(const std::string& key,
                         const std::string& fallback) const {
    return has(key) ? entry(key).value : fallback;
  }

  double get_number(const std::string& key) const {
    return to_number(entry(key));
  }
  double get_number(const std::string& key, double fallback) const {
    return has(key) ? to_number(entry(key)) : fallback;
  }

  int get_int(const std::string& key) const { return to_int(entry(key)); }
  int get_int(const std::string& key, int fallback) const {
    return has(key) ? to_int(entry(key)) : fallback;
  }

  // Reject keys outside the allowed set, pointing at their source lines.
  void require_known(const std::vector<std::string>& allowed) const {
    std::string bad;
    for (const Entry& e : entries_) {
      bool ok = false;
      for (const std::string& a : allowed) ok = ok || a == e.key;
      if (!ok) {
        if (!bad.empty()) bad += "; ";
        bad += "'" + e.key + "'";
        if (e.line > 0) bad += " (line " + std::to_string(e.line) + ")";
      }
    }
    if (!bad.empty()) throw ConfigError("unknown config keys: " + bad);
  }

  const std::vector<Entry>& entries() const { return entries_; }

  // Canonical text form, reparseable; used to embed the resolved
  // configuration into every output file.
  std::string serialize() const {
    std::string out;
    for (const Entry& e : entries_) out += e.key + " = " + e.value + "\n";
    return out;
  }

 private:
  static std::string strip(const std::string& s) {
    const size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
  }

  const Entry& entry(const std::string& key) const {
    auto it = index_.find(key);
    if (it == index_.end())
      throw ConfigError("missing config key '" + key + "'");
    return entries_[it->second];
  }

  static double to_number(const Entry& e) {
    char* end = nullptr;
    const double v = std::strtod(e.value.c_str(), &end);
    if (end == e.value.c_str() || *end != '\0')
      throw ConfigError("key '" + e.key + "'" + location(e) +
                        ": not a number: '" + e.value + "'");
    return v;
  }

  static int to_int(const Entry& e) {
    char* end = nullptr;
    const long v = std::strtol(e.value.c_str(), &end, 10);
    if (end == e.value.c_str() || *end != '\0')
      throw ConfigError("key '" + e.key + "'" + location(e) +
                        ": not an integer: '" + e.value + "'");
    return int(v);
  }

  static std::string location(const Entry& e) {
    return e.line > 0 ? " (line " + std::to_string(e.line) + ")" : "";
  }

  std::vector<Entry> entries_;
  std::map<std::string, size_t> index_;
};

}  // namespace rotax

#pragma once
// Result serialization: CSV tables and JSON documents, both carrying the
// fully resolved run configuration so any output file is reproducible on
// its own. Existing files are never overwritten unless forced.

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "rotax/config.hpp"

namespace rotax {

struct IoError : Error {
  explicit IoError(const std::string& msg) : Error(msg) {}
};

// A named column of doubles; all columns of a table share one length.
struct Column {
  std::string name;
  std::vector<double> values;
};

class Table {
 public:
  void add(const std::string& name, std::vector<double> values) {
    if (!cols_.empty() && values.size() != cols_.front().values.size())
      throw IoError("column '" + name + "' length mismatch");
    cols_.push_back({name, std::move(values)});
  }

  size_t rows() const { return cols_.empty() ? 0 : cols_.front().values.size(); }
  const std::vector<Column>& columns() const { return cols_; }

  // CSV with '.' decimal separator and 17 significant digits, so values
  // reparse bit-exactly. The config echo rides in '#' comment lines.
  std::string to_csv(const Config& cfg) const {
    std::string out;
    for (const Config::Entry& e : cfg.entries())
      out += "# " + e.key + " = " + e.value + "\n";
    for (size_t c = 0; c < cols_.size(); ++c)
      out += (c ? "," : "") + cols_[c].name;
    out += "\n";
    for (size_t r = 0; r < rows(); ++r) {
      for (size_t c = 0; c < cols_.size(); ++c) {
        if (c) out += ",";
        out += format_number(cols_[c].values[r]);
      }
      out += "\n";
    }
    return out;
  }

  nlohmann::json to_json() const {
    nlohmann::json j = nlohmann::json::object();
    for (const Column& c : cols_) j[c.name] = c.values;
    return j;
  }

 private:
  std::vector<Column> cols_;
};

inline nlohmann::json config_json(const Config& cfg) {
  nlohmann::json j = nlohmann::json::object();
  for (const Config::Entry& e : cfg.entries()) j[e.key] = e.value;
  return j;
}

// Parse one CSV produced by Table::to_csv back into columns; used by the
// round-trip tests to prove bit-exactness.
inline Table parse_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::vector<std::string> names;
  std::vector<std::vector<double>> data;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream row(line);
    std::string cell;
    if (names.empty()) {
      while (std::getline(row, cell, ',')) names.push_back(cell);
      data.resize(names.size());
      continue;
    }
    size_t c = 0;
    while (std::getline(row, cell, ',')) {
      if (c >= names.size()) throw IoError("csv row wider than header");
      data[c++].push_back(std::strtod(cell.c_str(), nullptr));
    }
    if (c != names.size()) throw IoError("csv row narrower than header");
  }
  Table t;
  for (size_t c = 0; c < names.size(); ++c) t.add(names[c], data[c]);
  return t;
}

// Refuses to clobber existing files unless force is set; writes are
// atomic-ish via a temp file rename so partial output never lands.
inline void write_file(const std::string& path, const std::string& content,
                       bool force) {
  namespace fs = std::filesystem;
  if (!force && fs::exists(path))
    throw IoError("refusing to overwrite existing file: " + path +
                  " (pass --force to allow)");
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + tmp.string());
    out << content;
    if (!out.flush()) throw IoError("write failed: " + tmp.string());
  }
  fs::rename(tmp, target);
}

}  // namespace rotax

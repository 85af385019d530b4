#pragma once

// Reports, CSV tables and QPoint JSON. Numbers are printed with %.17g so the
// bytes depend only on the values.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "qhalf/errors.hpp"
#include "qhalf/qpoint.hpp"

namespace qhalf::io {

using json = nlohmann::json;

struct Table {
  std::string name;  // file stem
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  void add(std::vector<double> row) {
    if (row.size() != columns.size()) throw DimensionMismatch("Table " + name + ": row has wrong length");
    rows.push_back(std::move(row));
  }
};

inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string to_csv(const Table& t) {
  std::string out;
  for (std::size_t c = 0; c < t.columns.size(); ++c) out += (c ? "," : "") + t.columns[c];
  out += "\n";
  for (const auto& row : t.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) out += (c ? "," : "") + format_number(row[c]);
    out += "\n";
  }
  return out;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot write " + path.string());
  f << text;
}

inline void write_csv(const std::filesystem::path& dir, const Table& t) { write_text(dir / (t.name + ".csv"), to_csv(t)); }

/// NaN and infinities become strings; JSON has no literal for them.
inline json number(double v) {
  if (std::isfinite(v)) return v;
  return format_number(v);
}

inline json to_json(const QPoint& a) {
  json sheets = json::array();
  for (int i = 0; i < a.multiplicity(); ++i) {
    json s = json::array();
    for (int k = 0; k < a.dim(); ++k) s.push_back(a.sheet(i)[k]);
    sheets.push_back(s);
  }
  return {{"Q", a.multiplicity()}, {"n", a.dim()}, {"data", sheets}};
}

inline QPoint qpoint_from_json(const json& j) {
  if (!j.is_object() || !j.contains("Q") || !j.contains("n") || !j.contains("data"))
    throw ConfigError("QPoint JSON needs Q, n and data");
  const int q = j.at("Q").get<int>(), n = j.at("n").get<int>();
  std::vector<double> v;
  for (const auto& s : j.at("data")) {
    if (!s.is_array() || static_cast<int>(s.size()) != n) throw DimensionMismatch("QPoint JSON: sheet length != n");
    for (const auto& x : s) v.push_back(x.get<double>());
  }
  if (static_cast<int>(v.size()) != q * n) throw DimensionMismatch("QPoint JSON: sheet count != Q");
  return QPoint(q, n, v);
}

}  // namespace qhalf::io

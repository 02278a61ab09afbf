/**
 * @file dataset.hpp
 * @brief Column tables written as CSV (with a `#`-prefixed JSON metadata
 * line) or as JSON with one array per column.
 */
#pragma once

#include <fstream>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "nhse/config.hpp"

namespace nhse {

using Cell = std::variant<double, long long, std::string>;

struct Dataset {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
  nlohmann::ordered_json meta = nlohmann::ordered_json::object();

  void add_row(std::vector<Cell> row) {
    if (row.size() != columns.size())
      throw Error(ErrorCode::InvalidParameter, "dataset '" + name + "': row width does not match the header");
    rows.push_back(std::move(row));
  }
};

inline nlohmann::ordered_json config_json(const RunConfig& cfg) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto& [k, v] : config_entries(cfg)) j[k] = v;
  return j;
}

/// Metadata shared by every dataset: name, command and the full effective config.
inline Dataset make_dataset(std::string name, const std::string& command, const RunConfig& cfg,
                            std::vector<std::string> columns) {
  Dataset d;
  d.name = std::move(name);
  d.columns = std::move(columns);
  d.meta["dataset"] = d.name;
  d.meta["command"] = command;
  d.meta["config"] = config_json(cfg);
  return d;
}

namespace detail {

inline std::string csv_cell(const Cell& c) {
  if (const auto* d = std::get_if<double>(&c)) return format_real(*d);
  if (const auto* i = std::get_if<long long>(&c)) return std::to_string(*i);
  const auto& s = std::get<std::string>(c);
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char ch : s) {
    if (ch == '"') q += '"';
    q += ch;
  }
  return q + "\"";
}

inline nlohmann::ordered_json json_cell(const Cell& c) {
  if (const auto* d = std::get_if<double>(&c)) {
    if (!std::isfinite(*d)) return nullptr;
    return *d;
  }
  if (const auto* i = std::get_if<long long>(&c)) return *i;
  return std::get<std::string>(c);
}

}  // namespace detail

inline void write_csv(std::ostream& os, const Dataset& d) {
  os << "# " << d.meta.dump() << "\n";
  for (std::size_t i = 0; i < d.columns.size(); ++i) os << (i ? "," : "") << d.columns[i];
  os << "\n";
  for (const auto& row : d.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << detail::csv_cell(row[i]);
    os << "\n";
  }
}

inline nlohmann::ordered_json to_json(const Dataset& d) {
  nlohmann::ordered_json j;
  j["meta"] = d.meta;
  nlohmann::ordered_json cols = nlohmann::ordered_json::object();
  for (std::size_t c = 0; c < d.columns.size(); ++c) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& row : d.rows) arr.push_back(detail::json_cell(row[c]));
    cols[d.columns[c]] = std::move(arr);
  }
  j["columns"] = std::move(cols);
  return j;
}

inline void write_json(std::ostream& os, const Dataset& d) { os << to_json(d).dump(1) << "\n"; }

inline void write_dataset(std::ostream& os, const Dataset& d, const std::string& format) {
  if (format == "json")
    write_json(os, d);
  else
    write_csv(os, d);
}

inline void write_dataset_file(const std::string& path, const Dataset& d, const std::string& format) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::ConfigError, "cannot write '" + path + "'");
  write_dataset(f, d, format);
}

}  // namespace nhse

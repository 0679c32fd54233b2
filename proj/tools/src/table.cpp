#include "partstat_cli/table.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <stdexcept>

#include <json.hpp>

namespace partstat::cli {
namespace {

using Json = nlohmann::ordered_json;

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string cell_text(const Cell& cell) {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, std::monostate>) {
          return "";
        } else if constexpr (std::is_same_v<T, std::int64_t>) {
          return std::to_string(v);
        } else if constexpr (std::is_same_v<T, double>) {
          return format_number(v);
        } else {
          return csv_escape(v);
        }
      },
      cell);
}

Json cell_json(const Cell& cell) {
  return std::visit(
      [](const auto& v) -> Json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, std::monostate>) {
          return nullptr;
        } else if constexpr (std::is_same_v<T, double>) {
          return std::isfinite(v) ? Json(v) : Json(nullptr);
        } else {
          return v;
        }
      },
      cell);
}

void write_csv_table(const Table& t, std::ostream& out) {
  for (std::size_t c = 0; c < t.columns.size(); ++c) out << (c ? "," : "") << csv_escape(t.columns[c]);
  out << '\n';
  for (const auto& row : t.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << cell_text(row[c]);
    out << '\n';
  }
}

Json table_json(const Table& t) {
  Json rows = Json::array();
  for (const auto& row : t.rows) {
    Json obj = Json::object();
    for (std::size_t c = 0; c < row.size(); ++c) obj[t.columns[c]] = cell_json(row[c]);
    rows.push_back(std::move(obj));
  }
  return Json{{"columns", t.columns}, {"rows", std::move(rows)}};
}

}  // namespace

void Table::add_row(std::vector<Cell> row) {
  if (row.size() != columns.size()) throw std::logic_error("Table::add_row: row width does not match the header");
  rows.push_back(std::move(row));
}

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  std::array<char, 64> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), x, std::chars_format::general, 17);
  if (ec != std::errc()) throw std::runtime_error("format_number: conversion failed");
  return std::string(buf.data(), ptr);
}

void write_csv(const Document& doc, std::ostream& out) {
  write_csv_table(doc.main, out);
  for (const auto& [name, table] : doc.tables) {
    out << "\n# " << name << '\n';
    write_csv_table(table, out);
  }
  if (!doc.summary.empty()) {
    out << "\nkey,value\n";
    for (const auto& [key, value] : doc.summary) out << csv_escape(key) << ',' << cell_text(value) << '\n';
  }
}

void write_json(const Document& doc, std::ostream& out) {
  Json j = Json::object();
  j["command"] = doc.command;
  Json main = table_json(doc.main);
  j["columns"] = std::move(main["columns"]);
  j["rows"] = std::move(main["rows"]);
  Json tables = Json::object();
  for (const auto& [name, table] : doc.tables) tables[name] = table_json(table);
  j["tables"] = std::move(tables);
  Json summary = Json::object();
  for (const auto& [key, value] : doc.summary) summary[key] = cell_json(value);
  j["summary"] = std::move(summary);
  out << j.dump(2) << '\n';
}

}  // namespace partstat::cli

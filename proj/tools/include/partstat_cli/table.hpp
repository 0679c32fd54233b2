#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace partstat::cli {

// Empty cells render as "" in CSV and null in JSON.
using Cell = std::variant<std::monostate, std::int64_t, double, std::string>;

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  // Throws std::logic_error when the row width differs from the header.
  void add_row(std::vector<Cell> row);
};

/// What a subcommand prints: its main table, optional named side tables and
/// a flat key/value summary.
struct Document {
  std::string command;
  Table main;
  std::vector<std::pair<std::string, Table>> tables;
  std::vector<std::pair<std::string, Cell>> summary;
};

/// Shortest of "%.17g"-style output, locale independent: 17 significant
/// digits at most, so every double round-trips. nan/inf print as such.
std::string format_number(double x);

/// Main table, then each side table, then "key,value" summary lines, with a
/// blank line between blocks. Side tables are preceded by a "# name" line.
void write_csv(const Document& doc, std::ostream& out);

/// {"command", "columns", "rows": [{column: value}], "tables": {...},
/// "summary": {...}}; non-finite numbers become null.
void write_json(const Document& doc, std::ostream& out);

}  // namespace partstat::cli

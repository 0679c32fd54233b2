#include "partstat_cli/level_file.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <vector>

namespace partstat::cli {
namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\v' || c == '\f'; }

[[noreturn]] void fail(std::string_view source, std::size_t line, const std::string& what) {
  std::ostringstream msg;
  msg << source << ':' << line << ": " << what;
  throw ParseError(msg.str(), line);
}

}  // namespace

LevelSystem parse_levels(std::istream& in, std::string_view source_name) {
  std::vector<double> energies;
  std::vector<std::vector<double>> charges;
  std::size_t fields_per_line = 0;
  std::size_t first_line = 0;

  std::string text;
  for (std::size_t line = 1; std::getline(in, text); ++line) {
    if (const auto hash = text.find('#'); hash != std::string::npos) text.resize(hash);

    std::vector<double> fields;
    const char* p = text.data();
    const char* end = p + text.size();
    while (true) {
      while (p < end && is_space(*p)) ++p;
      if (p == end) break;
      const char* token_end = p;
      while (token_end < end && !is_space(*token_end)) ++token_end;
      double value = 0.0;
      const auto [ptr, ec] = std::from_chars(p, token_end, value);
      const std::string token(p, token_end);
      if (ec != std::errc() || ptr != token_end) fail(source_name, line, "not a decimal number: '" + token + "'");
      if (!std::isfinite(value)) fail(source_name, line, "non-finite value '" + token + "'");
      fields.push_back(value);
      p = token_end;
    }
    if (fields.empty()) continue;

    if (fields_per_line == 0) {
      fields_per_line = fields.size();
      first_line = line;
    } else if (fields.size() != fields_per_line) {
      std::ostringstream what;
      what << "expected " << fields_per_line << " fields (as on line " << first_line << "), found " << fields.size();
      fail(source_name, line, what.str());
    }
    energies.push_back(fields.front());
    if (fields.size() > 1) charges.emplace_back(fields.begin() + 1, fields.end());
  }
  if (in.bad()) throw ParseError(std::string(source_name) + ": read error", 0);
  if (energies.empty()) throw ParseError(std::string(source_name) + ": no levels found", 0);
  return charges.empty() ? LevelSystem(std::move(energies)) : LevelSystem(std::move(energies), std::move(charges));
}

LevelSystem read_levels(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path.string() + ": cannot open", 0);
  return parse_levels(in, path.string());
}

}  // namespace partstat::cli

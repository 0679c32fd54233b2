#pragma once

#include <cstddef>
#include <filesystem>
#include <istream>
#include <stdexcept>
#include <string>
#include <string_view>

#include "partstat/types.hpp"

namespace partstat::cli {

// Malformed level file; the message carries "source:line: ...".
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& message, std::size_t line) : std::runtime_error(message), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// One level per line: the energy, then optionally m charge values. Fields are
/// whitespace-separated decimal floats, '#' starts a comment, blank lines are
/// ignored. Every non-blank line must carry the same number of fields.
LevelSystem parse_levels(std::istream& in, std::string_view source_name);
LevelSystem read_levels(const std::filesystem::path& path);

}  // namespace partstat::cli

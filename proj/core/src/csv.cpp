#include "adsel/csv.hpp"

#include <charconv>
#include <cmath>

#include <fmt/format.h>

#include "adsel/error.hpp"

namespace adsel {

ParseError::ParseError(const std::string& source, std::size_t line, const std::string& what)
    : Error(line ? fmt::format("{}:{}: {}", source, line, what) : fmt::format("{}: {}", source, what)),
      source_(source),
      line_(line) {}

namespace csv {

std::vector<std::string> split(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    std::size_t comma = line.find(',', start);
    std::string_view field = line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
    while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
    while (!field.empty() && (field.back() == ' ' || field.back() == '\t')) field.remove_suffix(1);
    out.emplace_back(field);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string format_double(double v) { return fmt::format("{}", v); }

double parse_double(std::string_view text, const std::string& source, std::size_t line) {
  if (text.empty()) throw ParseError(source, line, "missing numeric value");
  double v = 0.0;
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v)) {
    throw ParseError(source, line, fmt::format("invalid number '{}'", text));
  }
  return v;
}

bool parse_bool01(std::string_view text, const std::string& source, std::size_t line) {
  if (text == "1") return true;
  if (text == "0") return false;
  if (text.empty()) throw ParseError(source, line, "missing boolean value");
  throw ParseError(source, line, fmt::format("expected 0 or 1, got '{}'", text));
}

bool LineReader::next(std::vector<std::string>& fields) {
  std::string raw;
  while (std::getline(in_, raw)) {
    ++line_;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    if (raw.find_first_not_of(" \t") == std::string::npos) continue;
    fields = split(raw);
    return true;
  }
  return false;
}

}  // namespace csv
}  // namespace adsel

#pragma once

#include <cstddef>
#include <istream>
#include <string>
#include <string_view>
#include <vector>

namespace adsel::csv {

// Splits one line on commas. Quoting is not supported; identifiers and numbers
// in the formats used here never contain commas.
std::vector<std::string> split(std::string_view line);

// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

double parse_double(std::string_view text, const std::string& source, std::size_t line);
bool parse_bool01(std::string_view text, const std::string& source, std::size_t line);

// Line reader that strips trailing CR and skips blank lines, tracking 1-based
// line numbers for error messages.
class LineReader {
 public:
  LineReader(std::istream& in, std::string source) : in_(in), source_(std::move(source)) {}

  bool next(std::vector<std::string>& fields);
  std::size_t line() const { return line_; }
  const std::string& source() const { return source_; }

 private:
  std::istream& in_;
  std::string source_;
  std::size_t line_ = 0;
};

}  // namespace adsel::csv

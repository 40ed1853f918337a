#include "adsel/config.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <set>

#include <fmt/format.h>

#include "adsel/csv.hpp"
#include "adsel/error.hpp"
#include "adsel/rng.hpp"

namespace adsel {
namespace {

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys{"theta",     "k",         "pcc_threshold", "feature_count",
                                          "folds",     "seed",      "criterion",     "fallback",
                                          "features",  "premodel_overhead_s", "measure_time", "rng"};
  return keys;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return std::string(s.substr(b, e - b + 1));
}

template <class T>
T parse_unsigned(const std::string& key, const std::string& v, const std::string& source) {
  T out{};
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw Error(fmt::format("{}: '{}' expects a non-negative integer, got '{}'", source, key, v));
  }
  return out;
}

double parse_number(const std::string& key, const std::string& v, const std::string& source) {
  try {
    return csv::parse_double(v, source, 0);
  } catch (const Error&) {
    throw Error(fmt::format("{}: '{}' expects a number, got '{}'", source, key, v));
  }
}

}  // namespace

std::map<std::string, std::string> read_config(std::istream& in, const std::string& source) {
  std::map<std::string, std::string> out;
  std::string line;
  std::size_t no = 0;
  while (std::getline(in, line)) {
    ++no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(source, no, "expected key = value");
    std::string key = trim(std::string_view(line).substr(0, eq));
    std::string value = trim(std::string_view(line).substr(eq + 1));
    if (!known_keys().count(key)) throw ParseError(source, no, fmt::format("unknown key '{}'", key));
    if (!out.emplace(key, value).second) throw ParseError(source, no, fmt::format("duplicate key '{}'", key));
  }
  return out;
}

std::map<std::string, std::string> read_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(fmt::format("cannot open {}", path.string()));
  return read_config(in, path.string());
}

void apply_config(RunConfig& c, const std::map<std::string, std::string>& entries, const std::string& source) {
  for (const auto& [key, v] : entries) {
    if (key == "theta") {
      c.theta_pct = parse_number(key, v, source);
    } else if (key == "k") {
      c.k = parse_unsigned<std::size_t>(key, v, source);
    } else if (key == "pcc_threshold") {
      c.pcc_threshold = parse_number(key, v, source);
    } else if (key == "feature_count") {
      c.feature_count = parse_unsigned<std::size_t>(key, v, source);
    } else if (key == "folds") {
      c.folds = parse_unsigned<std::size_t>(key, v, source);
    } else if (key == "seed") {
      c.seed = parse_unsigned<std::uint64_t>(key, v, source);
    } else if (key == "criterion") {
      c.criterion = parse_criterion(v);
    } else if (key == "fallback") {
      if (v == "abstain") {
        c.fallback = Fallback::Kind::kAbstain;
      } else if (v == "prespecified") {
        c.fallback = Fallback::Kind::kUsePrespecified;
      } else {
        throw Error(fmt::format("{}: fallback must be 'prespecified' or 'abstain', got '{}'", source, v));
      }
    } else if (key == "features") {
      c.features = FeatureSubset(csv::split(v));
    } else if (key == "premodel_overhead_s") {
      c.premodel_overhead_s = parse_number(key, v, source);
    } else if (key == "measure_time") {
      if (v == "1" || v == "true") {
        c.measure_time = true;
      } else if (v == "0" || v == "false") {
        c.measure_time = false;
      } else {
        throw Error(fmt::format("{}: measure_time must be 0 or 1, got '{}'", source, v));
      }
    } else if (key == "rng") {
      if (v != Rng::kAlgorithm) {
        throw Error(fmt::format("{}: configuration was written for RNG '{}', this build uses '{}'", source, v,
                                Rng::kAlgorithm));
      }
    } else {
      throw Error(fmt::format("{}: unknown key '{}'", source, key));
    }
  }
}

}  // namespace adsel

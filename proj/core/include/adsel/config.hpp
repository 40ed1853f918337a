#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>

#include "adsel/pipeline.hpp"

namespace adsel {

// Flat `key = value` lines; `#` starts a comment. Keys are those of
// config_entries(); duplicate or unknown keys are rejected.
std::map<std::string, std::string> read_config(std::istream& in, const std::string& source = "<config>");
std::map<std::string, std::string> read_config(const std::filesystem::path& path);

// Overwrites the fields named in `entries`.
void apply_config(RunConfig& config, const std::map<std::string, std::string>& entries,
                  const std::string& source = "<config>");

}  // namespace adsel

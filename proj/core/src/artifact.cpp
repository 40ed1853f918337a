#include "adsel/artifact.hpp"

#include <fstream>
#include <istream>
#include <ostream>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "adsel/error.hpp"
#include "json_io.hpp"

namespace adsel {

void save_artifact(std::ostream& out, const PremodelArtifact& a) {
  json_io::Json j;
  j["format"] = "adsel-premodel";
  j["format_version"] = kArtifactFormatVersion;
  j["criterion"] = std::string(to_string(a.criterion));
  j["features"] = a.features.names();
  j["scaling"] = json_io::to_json(a.ranges);
  j["cascade"] = json_io::to_json(a.cascade);
  j["trace"] = json_io::to_json(a.trace);
  j["provenance"] = a.provenance;
  out << j.dump() << '\n';
}

void save_artifact(const std::filesystem::path& path, const PremodelArtifact& artifact) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(fmt::format("cannot write {}", path.string()));
  save_artifact(out, artifact);
}

PremodelArtifact load_artifact(std::istream& in, const std::string& source) {
  json_io::Json j;
  try {
    j = json_io::Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(source, 0, fmt::format("invalid cascade JSON: {}", e.what()));
  }
  try {
    if (j.at("format").get<std::string>() != "adsel-premodel") throw ParseError(source, 0, "not a premodel file");
    const int version = j.at("format_version").get<int>();
    if (version != kArtifactFormatVersion) {
      throw ParseError(source, 0, fmt::format("unsupported premodel format version {}", version));
    }
    PremodelArtifact a{parse_criterion(j.at("criterion").get<std::string>()),
                       FeatureSubset(j.at("features").get<std::vector<std::string>>()),
                       json_io::ranges_from_json(j.at("scaling")),
                       json_io::cascade_from_json(j.at("cascade")),
                       json_io::trace_from_json(j.at("trace")),
                       j.at("provenance").get<std::map<std::string, std::string>>()};
    if (a.ranges.names != a.features.names() || a.cascade.matrix().feature_names != a.features.names()) {
      throw ParseError(source, 0, "feature subset, scaling ranges and training matrix disagree");
    }
    return a;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(source, 0, fmt::format("malformed premodel file: {}", e.what()));
  }
}

PremodelArtifact load_artifact(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(fmt::format("cannot open {}", path.string()));
  return load_artifact(in, path.string());
}

Prediction predict_raw(const PremodelArtifact& artifact, std::span<const double> raw) {
  if (raw.size() != artifact.features.size()) {
    throw Error(fmt::format("feature vector has {} values, premodel expects {} ({})", raw.size(),
                            artifact.features.size(), fmt::join(artifact.features.names(), ",")));
  }
  return predict(artifact.cascade, scale(raw, artifact.ranges));
}

std::string prediction_json(const Prediction& p, const std::string& image_id) {
  json_io::Json j;
  if (!image_id.empty()) j["image_id"] = image_id;
  j["model"] = p.choice ? json_io::Json(*p.choice) : json_io::Json(nullptr);
  j["level"] = p.level_reached;
  j["fallback"] = p.used_fallback;
  j["confidence"] = confidence(p);
  return j.dump();
}

}  // namespace adsel

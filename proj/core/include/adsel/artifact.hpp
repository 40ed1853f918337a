#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>

#include "adsel/features.hpp"
#include "adsel/premodel.hpp"
#include "adsel/scaling.hpp"
#include "adsel/selection.hpp"

namespace adsel {

inline constexpr int kArtifactFormatVersion = 1;

// Everything needed to run a trained premodel on raw feature values.
struct PremodelArtifact {
  Criterion criterion = Criterion::kTop1;
  FeatureSubset features = FeatureSubset::standard();
  ScalingRanges ranges;
  Cascade cascade;
  ModelSelectionTrace trace;
  // Input name -> SHA-256 of the file the premodel was trained from.
  std::map<std::string, std::string> provenance;
};

void save_artifact(std::ostream& out, const PremodelArtifact& artifact);
void save_artifact(const std::filesystem::path& path, const PremodelArtifact& artifact);
PremodelArtifact load_artifact(std::istream& in, const std::string& source = "<cascade>");
PremodelArtifact load_artifact(const std::filesystem::path& path);

// `raw` holds unscaled values in artifact.features order.
Prediction predict_raw(const PremodelArtifact& artifact, std::span<const double> raw);

// Single-line JSON: {"model": ..., "level": ..., "confidence": ...}, plus
// "image_id" when given.
std::string prediction_json(const Prediction& prediction, const std::string& image_id = "");

}  // namespace adsel

#pragma once

// JSON encodings shared by the artifact, trace and report writers.

#include <json.hpp>

#include "adsel/eval.hpp"
#include "adsel/premodel.hpp"
#include "adsel/scaling.hpp"
#include "adsel/selection.hpp"

namespace adsel::json_io {

using Json = nlohmann::ordered_json;

Json to_json(const ModelSelectionTrace& trace);
ModelSelectionTrace trace_from_json(const Json& j);

Json to_json(const ScalingRanges& ranges);
ScalingRanges ranges_from_json(const Json& j);

Json to_json(const Cascade& cascade);
Cascade cascade_from_json(const Json& j);

Json to_json(const FoldMetrics& m, bool has_energy);
Json to_json(const EvaluationReport& report);

}  // namespace adsel::json_io

#pragma once

#include "clmkl/pipeline.hpp"

#include <filesystem>
#include <string>

namespace clmkl {

inline constexpr int kModelFormatVersion = 1;

/// Deterministic JSON text of a fitted model (sorted keys, shortest
/// round-trip doubles, trailing newline). The "schema" field is "lmkl" for
/// LMKL models and "clmkl" for everything else.
std::string modelToJson(const FittedModel& model);

/// Throws FormatError on malformed input, unknown schema or version.
FittedModel modelFromJson(const std::string& text);

void saveModel(const FittedModel& model, const std::filesystem::path& path);
FittedModel loadModel(const std::filesystem::path& path);

/// Member sets, tau and evenness of a clustering as JSON text.
std::string clusteringToJson(const ClusterAssignment& assignment, const LikelihoodModel& likelihood,
                             const TauCalibration* calibration);

}  // namespace clmkl

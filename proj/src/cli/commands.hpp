#pragma once

#include "clmkl/kernel.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace clmkl::cli {

enum ExitCode { kSuccess = 0, kUsageError = 1, kNotConverged = 2 };

/// NAME=PATH argument.
struct NamedPath {
  std::string name;
  std::filesystem::path path;
};

NamedPath parseNamedPath(const std::string& text);

/// One value per line; blank lines are skipped.
Vector readLabels(const std::filesystem::path& path);

struct ComputeKernelsConfig {
  std::filesystem::path features;
  std::optional<std::filesystem::path> testFeatures;
  /// NAME=SPEC with SPEC one of linear, gaussian:WIDTH, poly:DEGREE[:OFFSET],
  /// chi2[:WIDTH].
  std::vector<std::string> specs;
  std::filesystem::path outDir;
};

struct ClusterConfig {
  NamedPath kernel;
  int clusters = 2;
  std::optional<double> evenness;
  std::optional<double> tau;
  int restarts = 10;
  std::uint64_t seed = 0;
  std::string normalization = "multiplicative";
  std::filesystem::path out;
};

struct TrainConfig {
  std::vector<NamedPath> kernels;
  /// NAME=PATH, or the NAME of one of `kernels`.
  std::optional<std::string> clusterKernel;
  std::filesystem::path labels;
  std::string algorithm = "clmkl";
  double C = 1.0;
  double p = 2.0;
  int clusters = 1;
  std::optional<double> evenness;
  std::optional<double> tau;
  std::string loss = "hinge";
  double epsilon = 0.1;
  double gapTolerance = 1e-3;
  int maxIterations = 200;
  int restarts = 10;
  std::uint64_t seed = 0;
  std::string normalization = "multiplicative";
  int lmklSteps = 50;
  std::filesystem::path model;
  std::optional<std::filesystem::path> report;
};

struct PredictConfig {
  std::filesystem::path model;
  std::vector<NamedPath> cross;
  std::vector<NamedPath> testDiag;
  std::optional<std::filesystem::path> clusterCross;
  std::optional<std::filesystem::path> clusterTestDiag;
  std::filesystem::path out;
};

struct EvaluateConfig {
  std::filesystem::path predictions;
  std::filesystem::path labels;
  std::string metric = "accuracy";
};

struct CvConfig {
  TrainConfig train;
  std::vector<double> Cs;
  std::vector<double> ps = {2.0};
  std::vector<int> ls = {3};
  double evennessLo = 0.4;
  double evennessHi = 0.7;
  int evennessCount = 8;
  int folds = 10;
  std::string metric = "accuracy";
  std::optional<std::filesystem::path> out;
};

struct BoundConfig {
  std::vector<NamedPath> kernels;
  std::optional<std::filesystem::path> model;
  std::optional<std::string> clusterKernel;
  /// uniform, hard or model
  std::string assignment = "uniform";
  int clusters = 1;
  std::optional<double> radius;
  double p = 2.0;
  std::optional<double> kernelBound;
  double lossBound = 1.0;
  double lipschitz = 1.0;
  double delta = 0.05;
  double risk = 0.0;
  std::uint64_t seed = 0;
  int restarts = 10;
  std::string normalization = "multiplicative";
  std::optional<std::filesystem::path> csv;
};

int cmdComputeKernels(const ComputeKernelsConfig& config, std::ostream& out);
int cmdCluster(const ClusterConfig& config, std::ostream& out);
int cmdTrain(const TrainConfig& config, std::ostream& out);
int cmdPredict(const PredictConfig& config, std::ostream& out);
int cmdEvaluate(const EvaluateConfig& config, std::ostream& out);
int cmdCv(const CvConfig& config, std::ostream& out);
int cmdBound(const BoundConfig& config, std::ostream& out);

/// Parses argv, dispatches to a subcommand and maps errors to exit codes.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace clmkl::cli

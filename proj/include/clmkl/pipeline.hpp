#pragma once

#include "clmkl/clmkl.hpp"
#include "clmkl/clustering.hpp"
#include "clmkl/kernel.hpp"
#include "clmkl/lmkl.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace clmkl {

/// Training method selectable from the command line and in cross-validation.
enum class Method { clmkl, mkl, lmkl, unifSvm };

std::string toString(Method method);
Method parseMethod(const std::string& text);

struct FitOptions {
  Method method = Method::clmkl;
  double C = 1.0;
  double p = 2.0;
  /// Number of clusters l; ignored by mkl and unif-svm.
  int clusters = 1;
  /// Target average evenness; when unset, `tau` is used, and when both are
  /// unset the assignment is hard.
  std::optional<double> evenness;
  std::optional<double> tau;
  Loss loss;
  double gapTolerance = 1e-3;
  int maxOuterIterations = 200;
  int restarts = 10;
  std::uint64_t seed = 0;
  NormalizationMode normalization = NormalizationMode::multiplicative;
  int lmklSteps = 50;
  std::string clusterKernelName = "k0";

  void validate() const;
};

/// A trained model together with the preprocessing fitted on its training
/// data, so that raw cross kernels can be fed to predictFitted().
struct FittedModel {
  Method method = Method::clmkl;
  Loss loss;
  NormalizationMode normalization = NormalizationMode::none;
  std::vector<Normalization> kernelNormalizations;
  /// Set when the model reads the clustering kernel at prediction time.
  std::optional<Normalization> clusterNormalization;
  std::string clusterKernelName;
  /// Ascending class labels. {-1, +1} for binary problems, empty for
  /// regression; anything else is handled one-vs-all.
  std::vector<int> classes;
  /// One model for binary classification and regression, one per class otherwise.
  std::vector<ClmklModel> models;
  std::vector<TrainReport> reports;
  std::optional<LmklModel> lmkl;
  LmklReport lmklReport;
  std::optional<ClusterAssignment> assignment;
  std::optional<TauCalibration> calibration;
  std::uint64_t seed = 0;

  bool converged() const;
  bool isRegression() const { return classes.empty(); }
  bool isBinary() const { return classes == std::vector<int>{-1, 1}; }
  bool needsClusterKernel() const { return clusterNormalization.has_value(); }
  std::vector<std::string> kernelNames() const;
  Index trainPoints() const;
};

/// Sorted distinct labels; throws if any target is not an integer.
std::vector<int> classLabels(const Vector& targets);

/// Normalizes the kernels on the training data, clusters and calibrates
/// when the method needs it, and trains. `clusterKernel` is required for
/// clmkl with l > 1 and for lmkl.
FittedModel fitModel(const KernelBundle& bundle, const GramMatrix* clusterKernel, const Vector& targets,
                     const FitOptions& options);

/// n_test x K decision values (K = 1 for binary and regression) from raw,
/// unnormalized cross kernels ordered like the model's kernel names.
Matrix predictFitted(const FittedModel& model, const std::vector<CrossKernelMatrix>& cross,
                     const CrossKernelMatrix* clusterCross);

/// Predicted label per row: sign for binary (0 maps to +1), argmax class
/// for one-vs-all, the decision value itself for regression.
Vector labelsFromDecisions(const FittedModel& model, const Matrix& decisions);

}  // namespace clmkl

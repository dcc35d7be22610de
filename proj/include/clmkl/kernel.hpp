#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace clmkl {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Dense symmetric matrix of kernel evaluations over n points.
///
/// Construction rejects non-square input, non-finite entries and asymmetry
/// beyond 1e-12 * max(1, |K_ij|). Positive semi-definiteness is not enforced
/// here; see checkPsd().
class GramMatrix {
 public:
  explicit GramMatrix(Matrix values);

  Index size() const { return values_.rows(); }
  const Matrix& values() const { return values_; }
  double operator()(Index i, Index j) const { return values_(i, j); }
  double trace() const { return values_.trace(); }
  Vector diagonal() const { return values_.diagonal(); }

  /// Principal submatrix over the given point indices, in that order.
  GramMatrix submatrix(std::span<const Index> indices) const;

 private:
  Matrix values_;
};

struct PsdReport {
  double minEigenvalue = 0.0;
  /// -1e-8 * trace / n
  double threshold = 0.0;
  bool ok = true;
};

PsdReport checkPsd(const GramMatrix& kernel);

/// Kernel evaluations between n_test new points and the n_train training
/// points, plus the test self-evaluations k(x, x).
struct CrossKernelMatrix {
  Matrix values;   // n_test x n_train
  Vector diagTest; // n_test

  CrossKernelMatrix() = default;
  CrossKernelMatrix(Matrix values, Vector diagTest);

  Index testPoints() const { return values.rows(); }
  Index trainPoints() const { return values.cols(); }

  /// Cross block between `testIndices` and `trainIndices` of a full Gram
  /// matrix; used to carve validation folds out of precomputed kernels.
  static CrossKernelMatrix fromGram(const GramMatrix& full, std::span<const Index> testIndices,
                                    std::span<const Index> trainIndices);
};

/// Ordered collection of M >= 1 Gram matrices over the same points.
class KernelBundle {
 public:
  KernelBundle(std::vector<GramMatrix> kernels, std::vector<std::string> names);

  std::size_t count() const { return kernels_.size(); }
  Index points() const { return kernels_.front().size(); }
  const GramMatrix& operator[](std::size_t m) const { return kernels_[m]; }
  const std::vector<GramMatrix>& kernels() const { return kernels_; }
  const std::vector<std::string>& names() const { return names_; }
  std::optional<std::size_t> indexOf(const std::string& name) const;

  KernelBundle submatrices(std::span<const Index> indices) const;

 private:
  std::vector<GramMatrix> kernels_;
  std::vector<std::string> names_;
};

struct KernelSpec {
  enum class Kind { linear, gaussian, polynomial, chiSquared };

  Kind kind = Kind::linear;
  /// Gaussian: sigma in exp(-|x-y|^2 / (2 sigma^2)).
  /// Chi-squared: sigma in exp(-chi2(x, y) / sigma); unset means the mean
  /// pairwise chi-squared distance of the training features.
  std::optional<double> width;
  int degree = 1;
  double offset = 0.0;

  static KernelSpec linear() { return {}; }
  static KernelSpec gaussian(double width);
  static KernelSpec polynomial(int degree, double offset);
  static KernelSpec chiSquared(std::optional<double> width = std::nullopt);

  /// Throws InvalidArgument if a parameter is out of range.
  void validate() const;
};

/// Chi-squared distance sum_d (x_d - y_d)^2 / (x_d + y_d), with 0/0 := 0.
double chiSquaredDistance(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& y);

/// Fills in any width that defaults to a statistic of the training features.
KernelSpec resolveSpec(const KernelSpec& spec, const Matrix& trainFeatures);

/// Gram matrix of `features` (n x d, one point per row).
GramMatrix computeGram(const Matrix& features, const KernelSpec& spec);

/// Cross kernel between test and train features. Widths must already be
/// resolved against the training features (see resolveSpec).
CrossKernelMatrix computeCross(const Matrix& testFeatures, const Matrix& trainFeatures,
                               const KernelSpec& spec);

GramMatrix normalizeMultiplicative(const GramMatrix& kernel);
GramMatrix normalizeTrace(const GramMatrix& kernel);

/// Entrywise mean of the bundle's matrices.
GramMatrix sumUniform(const KernelBundle& bundle);

enum class NormalizationMode { none, multiplicative, trace };

std::string toString(NormalizationMode mode);
NormalizationMode parseNormalizationMode(const std::string& text);

/// A normalization fitted on a training Gram matrix so that the same
/// transform can be replayed on cross kernels of unseen points.
struct Normalization {
  NormalizationMode mode = NormalizationMode::none;
  Vector trainDiagonal;  // multiplicative only
  double scale = 1.0;    // trace only

  static Normalization fit(NormalizationMode mode, const GramMatrix& train);

  GramMatrix apply(const GramMatrix& train) const;
  CrossKernelMatrix apply(const CrossKernelMatrix& cross) const;
};

}  // namespace clmkl

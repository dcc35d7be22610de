#include "clmkl/kernel.hpp"

#include "clmkl/error.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace clmkl {

namespace {

void requireFinite(const Matrix& m, const char* what) {
  if (!m.allFinite()) throw InvalidArgument(std::string(what) + " contains non-finite values");
}

double evaluate(const KernelSpec& spec, const Eigen::Ref<const Vector>& x,
                const Eigen::Ref<const Vector>& y) {
  switch (spec.kind) {
    case KernelSpec::Kind::linear:
      return x.dot(y);
    case KernelSpec::Kind::gaussian: {
      const double sigma = *spec.width;
      return std::exp(-(x - y).squaredNorm() / (2.0 * sigma * sigma));
    }
    case KernelSpec::Kind::polynomial:
      return std::pow(x.dot(y) + spec.offset, spec.degree);
    case KernelSpec::Kind::chiSquared:
      return std::exp(-chiSquaredDistance(x, y) / *spec.width);
  }
  return 0.0;
}

void checkFeatures(const Matrix& features, const KernelSpec& spec) {
  if (features.rows() < 1 || features.cols() < 1)
    throw InvalidArgument("feature matrix must have at least one row and one column");
  requireFinite(features, "feature matrix");
  if (spec.kind == KernelSpec::Kind::chiSquared && (features.array() < 0.0).any())
    throw InvalidArgument("chi-squared kernel requires nonnegative features");
}

}  // namespace

GramMatrix::GramMatrix(Matrix values) : values_(std::move(values)) {
  if (values_.rows() != values_.cols())
    throw DimensionMismatch("Gram matrix must be square, got " + std::to_string(values_.rows()) +
                            "x" + std::to_string(values_.cols()));
  if (values_.rows() == 0) throw InvalidArgument("Gram matrix must not be empty");
  requireFinite(values_, "Gram matrix");
  const Index n = values_.rows();
  for (Index j = 0; j < n; ++j) {
    for (Index i = j + 1; i < n; ++i) {
      const double a = values_(i, j);
      const double b = values_(j, i);
      if (std::abs(a - b) > 1e-12 * std::max(1.0, std::abs(a)))
        throw InvalidArgument("Gram matrix is not symmetric at (" + std::to_string(i) + ", " +
                              std::to_string(j) + ")");
    }
  }
}

GramMatrix GramMatrix::submatrix(std::span<const Index> indices) const {
  const auto k = static_cast<Index>(indices.size());
  Matrix out(k, k);
  for (Index a = 0; a < k; ++a)
    for (Index b = 0; b < k; ++b) out(a, b) = values_(indices[a], indices[b]);
  return GramMatrix(std::move(out));
}

PsdReport checkPsd(const GramMatrix& kernel) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(kernel.values(), Eigen::EigenvaluesOnly);
  PsdReport report;
  report.minEigenvalue = solver.eigenvalues().minCoeff();
  report.threshold = -1e-8 * kernel.trace() / static_cast<double>(kernel.size());
  report.ok = report.minEigenvalue >= report.threshold;
  return report;
}

CrossKernelMatrix::CrossKernelMatrix(Matrix values_, Vector diagTest_)
    : values(std::move(values_)), diagTest(std::move(diagTest_)) {
  if (diagTest.size() != values.rows())
    throw DimensionMismatch("cross kernel has " + std::to_string(values.rows()) +
                            " rows but " + std::to_string(diagTest.size()) +
                            " test self-evaluations");
  requireFinite(values, "cross kernel");
  if (!diagTest.allFinite()) throw InvalidArgument("test self-evaluations are not finite");
}

CrossKernelMatrix CrossKernelMatrix::fromGram(const GramMatrix& full,
                                              std::span<const Index> testIndices,
                                              std::span<const Index> trainIndices) {
  const auto rows = static_cast<Index>(testIndices.size());
  const auto cols = static_cast<Index>(trainIndices.size());
  Matrix values(rows, cols);
  Vector diag(rows);
  for (Index a = 0; a < rows; ++a) {
    diag(a) = full(testIndices[a], testIndices[a]);
    for (Index b = 0; b < cols; ++b) values(a, b) = full(testIndices[a], trainIndices[b]);
  }
  return CrossKernelMatrix(std::move(values), std::move(diag));
}

KernelBundle::KernelBundle(std::vector<GramMatrix> kernels, std::vector<std::string> names)
    : kernels_(std::move(kernels)), names_(std::move(names)) {
  if (kernels_.empty()) throw InvalidArgument("kernel bundle must contain at least one kernel");
  if (names_.size() != kernels_.size())
    throw DimensionMismatch("kernel bundle has " + std::to_string(kernels_.size()) +
                            " kernels but " + std::to_string(names_.size()) + " names");
  const Index n = kernels_.front().size();
  for (const auto& k : kernels_)
    if (k.size() != n) throw DimensionMismatch("kernels in a bundle must share the point count");
  std::set<std::string> seen;
  for (const auto& name : names_)
    if (!seen.insert(name).second) throw InvalidArgument("duplicate kernel name '" + name + "'");
}

std::optional<std::size_t> KernelBundle::indexOf(const std::string& name) const {
  const auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - names_.begin());
}

KernelBundle KernelBundle::submatrices(std::span<const Index> indices) const {
  std::vector<GramMatrix> out;
  out.reserve(kernels_.size());
  for (const auto& k : kernels_) out.push_back(k.submatrix(indices));
  return KernelBundle(std::move(out), names_);
}

KernelSpec KernelSpec::gaussian(double width) {
  KernelSpec s;
  s.kind = Kind::gaussian;
  s.width = width;
  return s;
}

KernelSpec KernelSpec::polynomial(int degree, double offset) {
  KernelSpec s;
  s.kind = Kind::polynomial;
  s.degree = degree;
  s.offset = offset;
  return s;
}

KernelSpec KernelSpec::chiSquared(std::optional<double> width) {
  KernelSpec s;
  s.kind = Kind::chiSquared;
  s.width = width;
  return s;
}

void KernelSpec::validate() const {
  switch (kind) {
    case Kind::linear:
      break;
    case Kind::gaussian:
      if (!width || !(*width > 0.0) || !std::isfinite(*width))
        throw InvalidArgument("gaussian kernel width must be positive");
      break;
    case Kind::polynomial:
      if (degree < 1) throw InvalidArgument("polynomial kernel degree must be >= 1");
      if (!std::isfinite(offset)) throw InvalidArgument("polynomial kernel offset must be finite");
      break;
    case Kind::chiSquared:
      if (width && (!(*width > 0.0) || !std::isfinite(*width)))
        throw InvalidArgument("chi-squared kernel width must be positive");
      break;
  }
}

double chiSquaredDistance(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& y) {
  double sum = 0.0;
  for (Index d = 0; d < x.size(); ++d) {
    const double denom = x(d) + y(d);
    if (denom == 0.0) continue;
    const double diff = x(d) - y(d);
    sum += diff * diff / denom;
  }
  return sum;
}

KernelSpec resolveSpec(const KernelSpec& spec, const Matrix& trainFeatures) {
  spec.validate();
  KernelSpec out = spec;
  if (spec.kind != KernelSpec::Kind::chiSquared || spec.width) return out;
  checkFeatures(trainFeatures, spec);
  const Index n = trainFeatures.rows();
  double total = 0.0;
  std::size_t pairs = 0;
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      total += chiSquaredDistance(trainFeatures.row(i).transpose(), trainFeatures.row(j).transpose());
      ++pairs;
    }
  }
  const double mean = pairs > 0 ? total / static_cast<double>(pairs) : 0.0;
  // All points identical: any width gives the all-ones kernel.
  out.width = mean > 0.0 ? mean : 1.0;
  return out;
}

GramMatrix computeGram(const Matrix& features, const KernelSpec& spec) {
  checkFeatures(features, spec);
  const KernelSpec resolved = resolveSpec(spec, features);
  const Index n = features.rows();
  const Matrix rows = features.transpose();
  Matrix k(n, n);
  for (Index j = 0; j < n; ++j) {
    for (Index i = j; i < n; ++i) {
      const double v = evaluate(resolved, rows.col(i), rows.col(j));
      k(i, j) = v;
      k(j, i) = v;
    }
  }
  if (!k.allFinite()) throw InvalidArgument("kernel evaluation overflowed");
  return GramMatrix(std::move(k));
}

CrossKernelMatrix computeCross(const Matrix& testFeatures, const Matrix& trainFeatures,
                               const KernelSpec& spec) {
  checkFeatures(testFeatures, spec);
  checkFeatures(trainFeatures, spec);
  if (testFeatures.cols() != trainFeatures.cols())
    throw DimensionMismatch("test and train features differ in dimension");
  spec.validate();
  if (spec.kind == KernelSpec::Kind::chiSquared && !spec.width)
    throw InvalidArgument("cross kernel needs a resolved chi-squared width");
  const Matrix test = testFeatures.transpose();
  const Matrix train = trainFeatures.transpose();
  Matrix values(test.cols(), train.cols());
  Vector diag(test.cols());
  for (Index a = 0; a < test.cols(); ++a) {
    diag(a) = evaluate(spec, test.col(a), test.col(a));
    for (Index b = 0; b < train.cols(); ++b) values(a, b) = evaluate(spec, test.col(a), train.col(b));
  }
  return CrossKernelMatrix(std::move(values), std::move(diag));
}

GramMatrix normalizeMultiplicative(const GramMatrix& kernel) {
  return Normalization::fit(NormalizationMode::multiplicative, kernel).apply(kernel);
}

GramMatrix normalizeTrace(const GramMatrix& kernel) {
  return Normalization::fit(NormalizationMode::trace, kernel).apply(kernel);
}

GramMatrix sumUniform(const KernelBundle& bundle) {
  Matrix sum = Matrix::Zero(bundle.points(), bundle.points());
  for (const auto& k : bundle.kernels()) sum += k.values();
  sum /= static_cast<double>(bundle.count());
  return GramMatrix(std::move(sum));
}

std::string toString(NormalizationMode mode) {
  switch (mode) {
    case NormalizationMode::none: return "none";
    case NormalizationMode::multiplicative: return "multiplicative";
    case NormalizationMode::trace: return "trace";
  }
  return "none";
}

NormalizationMode parseNormalizationMode(const std::string& text) {
  if (text == "none") return NormalizationMode::none;
  if (text == "multiplicative") return NormalizationMode::multiplicative;
  if (text == "trace") return NormalizationMode::trace;
  throw InvalidArgument("unknown normalization mode '" + text + "'");
}

Normalization Normalization::fit(NormalizationMode mode, const GramMatrix& train) {
  Normalization norm;
  norm.mode = mode;
  if (mode == NormalizationMode::multiplicative) {
    norm.trainDiagonal = train.diagonal();
    if ((norm.trainDiagonal.array() <= 0.0).any())
      throw InvalidArgument("multiplicative normalization needs a strictly positive diagonal");
  } else if (mode == NormalizationMode::trace) {
    const double trace = train.trace();
    if (!(trace > 0.0)) throw InvalidArgument("trace normalization needs a positive trace");
    norm.scale = static_cast<double>(train.size()) / trace;
  }
  return norm;
}

GramMatrix Normalization::apply(const GramMatrix& train) const {
  switch (mode) {
    case NormalizationMode::none:
      return train;
    case NormalizationMode::trace:
      return GramMatrix(train.values() * scale);
    case NormalizationMode::multiplicative: {
      if (trainDiagonal.size() != train.size())
        throw DimensionMismatch("normalization was fitted on a different point count");
      const Vector inv = trainDiagonal.array().sqrt().inverse();
      Matrix out = inv.asDiagonal() * train.values() * inv.asDiagonal();
      out.diagonal().setOnes();
      return GramMatrix(std::move(out));
    }
  }
  return train;
}

CrossKernelMatrix Normalization::apply(const CrossKernelMatrix& cross) const {
  switch (mode) {
    case NormalizationMode::none:
      return cross;
    case NormalizationMode::trace:
      return CrossKernelMatrix(cross.values * scale, cross.diagTest * scale);
    case NormalizationMode::multiplicative: {
      if (trainDiagonal.size() != cross.trainPoints())
        throw DimensionMismatch("normalization was fitted on a different point count");
      if ((cross.diagTest.array() <= 0.0).any())
        throw InvalidArgument("multiplicative normalization needs positive test self-evaluations");
      const Vector invTrain = trainDiagonal.array().sqrt().inverse();
      const Vector invTest = cross.diagTest.array().sqrt().inverse();
      Matrix values = invTest.asDiagonal() * cross.values * invTrain.asDiagonal();
      return CrossKernelMatrix(std::move(values), Vector::Ones(cross.testPoints()));
    }
  }
  return cross;
}

}  // namespace clmkl

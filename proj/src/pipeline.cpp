#include "clmkl/pipeline.hpp"

#include "clmkl/error.hpp"

#include <cmath>
#include <set>

namespace clmkl {

std::string toString(Method method) {
  switch (method) {
    case Method::clmkl: return "clmkl";
    case Method::mkl: return "mkl";
    case Method::lmkl: return "lmkl";
    case Method::unifSvm: return "unif-svm";
  }
  return "clmkl";
}

Method parseMethod(const std::string& text) {
  if (text == "clmkl") return Method::clmkl;
  if (text == "mkl") return Method::mkl;
  if (text == "lmkl") return Method::lmkl;
  if (text == "unif-svm") return Method::unifSvm;
  throw InvalidArgument("unknown algorithm '" + text + "' (expected clmkl, mkl, lmkl or unif-svm)");
}

void FitOptions::validate() const {
  if (!(C > 0.0) || !std::isfinite(C)) throw InvalidArgument("C must be a positive finite value");
  if (!(p >= 1.0) || !std::isfinite(p)) throw InvalidArgument("p must be a finite value >= 1");
  if (clusters < 1) throw InvalidArgument("the number of clusters must be at least 1");
  if (evenness && tau) throw InvalidArgument("give either a target evenness or tau, not both");
  if (evenness && (!(*evenness > 1.0 / clusters) || *evenness > 1.0))
    throw InvalidArgument("target evenness must lie in (1/l, 1]");
  if (tau && !(*tau >= 0.0)) throw InvalidArgument("tau must be nonnegative");
  if (!(gapTolerance > 0.0)) throw InvalidArgument("gap tolerance must be positive");
  if (maxOuterIterations < 1) throw InvalidArgument("need at least one outer iteration");
  if (restarts < 1) throw InvalidArgument("need at least one k-means restart");
  if (lmklSteps < 1) throw InvalidArgument("LMKL needs at least one step");
  if (method == Method::lmkl && loss.kind != LossKind::hinge)
    throw InvalidArgument("lmkl supports the hinge loss only");
}

bool FittedModel::converged() const {
  if (method == Method::lmkl) return !lmklReport.stalled;
  for (const auto& r : reports)
    if (!r.converged) return false;
  return true;
}

std::vector<std::string> FittedModel::kernelNames() const {
  if (lmkl) return lmkl->kernelNames;
  if (models.empty()) return {};
  return models.front().kernelNames;
}

Index FittedModel::trainPoints() const {
  if (lmkl) return lmkl->trainPoints();
  if (models.empty()) return 0;
  return models.front().trainPoints();
}

std::vector<int> classLabels(const Vector& targets) {
  std::set<int> distinct;
  for (Index i = 0; i < targets.size(); ++i) {
    const double v = targets(i);
    if (!std::isfinite(v) || v != std::round(v) || std::abs(v) > 1e9)
      throw InvalidArgument("classification labels must be integers, got " + std::to_string(v));
    distinct.insert(static_cast<int>(v));
  }
  return {distinct.begin(), distinct.end()};
}

namespace {

TrainOptions trainOptions(const FitOptions& options) {
  TrainOptions t;
  t.p = options.p;
  t.C = options.C;
  t.loss = options.loss;
  t.gapTolerance = options.gapTolerance;
  t.maxOuterIterations = options.maxOuterIterations;
  return t;
}

Algorithm algorithmFor(Method method) {
  switch (method) {
    case Method::mkl: return Algorithm::mkl;
    case Method::unifSvm: return Algorithm::unifSvm;
    default: return Algorithm::clmkl;
  }
}

}  // namespace

FittedModel fitModel(const KernelBundle& bundle, const GramMatrix* clusterKernel, const Vector& targets,
                     const FitOptions& options) {
  options.validate();
  const Index n = bundle.points();
  if (targets.size() != n) throw DimensionMismatch("label count differs from the kernel size");

  FittedModel out;
  out.method = options.method;
  out.loss = options.loss;
  out.normalization = options.normalization;
  out.seed = options.seed;

  std::vector<GramMatrix> normalized;
  for (const auto& k : bundle.kernels()) {
    out.kernelNormalizations.push_back(Normalization::fit(options.normalization, k));
    normalized.push_back(out.kernelNormalizations.back().apply(k));
  }
  const KernelBundle train(std::move(normalized), bundle.names());

  const bool clustered = options.method == Method::lmkl ||
                         (options.method == Method::clmkl && options.clusters > 1);
  std::optional<GramMatrix> k0;
  if (clustered) {
    if (clusterKernel == nullptr)
      throw InvalidArgument("a clustering kernel is required for " + toString(options.method) +
                            (options.method == Method::clmkl ? " with l > 1" : ""));
    if (clusterKernel->size() != n)
      throw DimensionMismatch("clustering kernel size differs from the base kernels");
    out.clusterNormalization = Normalization::fit(options.normalization, *clusterKernel);
    out.clusterKernelName = options.clusterKernelName;
    k0 = out.clusterNormalization->apply(*clusterKernel);
  }

  if (options.loss.kind == LossKind::hinge) out.classes = classLabels(targets);

  if (options.method == Method::lmkl) {
    if (!out.isBinary()) throw InvalidArgument("lmkl needs binary labels -1/+1");
    LmklOptions lo;
    lo.C = options.C;
    lo.steps = options.lmklSteps;
    LmklResult r = trainLmkl(train, *k0, targets, lo, options.clusterKernelName);
    out.lmkl = std::move(r.model);
    out.lmklReport = std::move(r.report);
    return out;
  }

  LikelihoodModel likelihood = LikelihoodModel::global(n, options.clusterKernelName);
  LikelihoodMatrix c = LikelihoodMatrix::uniform(n, 1);
  if (clustered) {
    KMeansOptions km;
    km.clusters = options.clusters;
    km.restarts = options.restarts;
    km.seed = options.seed;
    ClusterAssignment assignment = kernelKMeans(*k0, km);
    likelihood = LikelihoodModel::build(*k0, assignment, options.clusterKernelName);
    const Matrix dist = trainDistanceSq(*k0, likelihood);
    if (options.evenness) {
      out.calibration = calibrateTau(dist, *options.evenness);
      likelihood.tau = out.calibration->tau;
    } else {
      likelihood.tau = options.tau.value_or(kHardAssignment);
    }
    c = likelihoods(dist, likelihood.tau);
    out.assignment = std::move(assignment);
  }

  const TrainOptions to = trainOptions(options);
  const Algorithm algorithm = algorithmFor(options.method);
  if (out.isRegression() || out.isBinary()) {
    TrainResult r;
    switch (algorithm) {
      case Algorithm::clmkl: r = trainClmkl(train, targets, c, likelihood, to); break;
      case Algorithm::mkl: r = trainMkl(train, targets, to); break;
      case Algorithm::unifSvm: r = trainUniform(train, targets, to); break;
    }
    out.models.push_back(std::move(r.model));
    out.reports.push_back(std::move(r.report));
  } else {
    std::vector<int> labels(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) labels[static_cast<std::size_t>(i)] = static_cast<int>(targets(i));
    OneVsAllModel ova = trainOneVsAll(train, labels, c, likelihood, algorithm, to);
    out.models = std::move(ova.models);
    out.reports = std::move(ova.reports);
  }
  return out;
}

Matrix predictFitted(const FittedModel& model, const std::vector<CrossKernelMatrix>& cross,
                     const CrossKernelMatrix* clusterCross) {
  const std::vector<std::string> names = model.kernelNames();
  if (cross.size() != names.size())
    throw DimensionMismatch("expected " + std::to_string(names.size()) + " cross kernels, got " +
                            std::to_string(cross.size()));
  if (cross.size() != model.kernelNormalizations.size())
    throw InvalidArgument("model is missing kernel normalizations");
  std::vector<CrossKernelMatrix> normalized;
  normalized.reserve(cross.size());
  for (std::size_t m = 0; m < cross.size(); ++m) {
    if (cross[m].trainPoints() != model.trainPoints())
      throw DimensionMismatch("cross kernel '" + names[m] + "' has " +
                              std::to_string(cross[m].trainPoints()) + " training columns, model has " +
                              std::to_string(model.trainPoints()));
    normalized.push_back(model.kernelNormalizations[m].apply(cross[m]));
  }
  std::optional<CrossKernelMatrix> k0;
  if (model.needsClusterKernel()) {
    if (clusterCross == nullptr)
      throw InvalidArgument("the model needs the clustering cross kernel '" + model.clusterKernelName + "'");
    if (clusterCross->trainPoints() != model.trainPoints())
      throw DimensionMismatch("clustering cross kernel does not match the model's training size");
    k0 = model.clusterNormalization->apply(*clusterCross);
  }
  const CrossKernelMatrix* k0Ptr = k0 ? &*k0 : nullptr;

  if (model.lmkl) return predictLmkl(*model.lmkl, normalized, *k0);
  const Index nTest = normalized.front().testPoints();
  Matrix out(nTest, static_cast<Index>(model.models.size()));
  for (std::size_t k = 0; k < model.models.size(); ++k)
    out.col(static_cast<Index>(k)) = predict(model.models[k], normalized, k0Ptr);
  return out;
}

Vector labelsFromDecisions(const FittedModel& model, const Matrix& decisions) {
  const Index n = decisions.rows();
  Vector out(n);
  if (model.isRegression()) return decisions.col(0);
  if (decisions.cols() == 1) {
    for (Index i = 0; i < n; ++i) out(i) = labelFromDecision(decisions(i, 0));
    return out;
  }
  if (static_cast<std::size_t>(decisions.cols()) != model.classes.size())
    throw DimensionMismatch("decision matrix does not have one column per class");
  for (Index i = 0; i < n; ++i) {
    Index best = 0;
    for (Index k = 1; k < decisions.cols(); ++k)
      if (decisions(i, k) > decisions(i, best)) best = k;
    out(i) = model.classes[static_cast<std::size_t>(best)];
  }
  return out;
}

}  // namespace clmkl

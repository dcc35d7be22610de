#include "clmkl/clmkl.hpp"

#include "clmkl/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace clmkl {

namespace {

void checkP(double p) {
  if (!(p >= 1.0) || !std::isfinite(p)) throw InvalidArgument("p must be a finite value >= 1");
}

void checkTargets(const Vector& targets, const Loss& loss) {
  if (loss.kind == LossKind::hinge) {
    requireBinaryLabels(targets);
  } else {
    if (!targets.allFinite()) throw InvalidArgument("regression targets must be finite");
    if (!(loss.epsilon >= 0.0)) throw InvalidArgument("epsilon must be nonnegative");
  }
}

void checkShapes(const KernelBundle& bundle, const LikelihoodMatrix& c) {
  if (c.points() != bundle.points())
    throw DimensionMismatch("likelihood matrix has " + std::to_string(c.points()) +
                            " rows, kernels have " + std::to_string(bundle.points()) + " points");
}

// sum_m x_m^e scaled by the row maximum to keep powers in range; returns
// (sum_m x_m^e)^(1/e).
double powerMean(const Eigen::Ref<const Vector>& x, double e) {
  const double s = x.maxCoeff();
  if (!(s > 0.0)) return 0.0;
  double sum = 0.0;
  for (Index m = 0; m < x.size(); ++m) sum += std::pow(x(m) / s, e);
  return s * std::pow(sum, 1.0 / e);
}

// Minimizes sum_i loss(f_i + b, y_i) over b. The loss is piecewise linear
// and convex in b, so the minimum sits at a breakpoint.
double lossAtBestBias(const Vector& f, const Vector& targets, const Loss& loss, double hint) {
  const Index n = f.size();
  auto total = [&](double b) {
    double s = 0.0;
    for (Index i = 0; i < n; ++i) s += loss(f(i) + b, targets(i));
    return s;
  };
  double best = total(hint);
  for (Index i = 0; i < n; ++i) {
    const double knot = targets(i) - f(i);
    if (loss.kind == LossKind::hinge) {
      best = std::min(best, total(knot));
    } else {
      best = std::min(best, total(knot - loss.epsilon));
      best = std::min(best, total(knot + loss.epsilon));
    }
  }
  return best;
}

double lossDualTerm(const Vector& alpha, const Vector& targets, const Loss& loss) {
  if (loss.kind == LossKind::hinge) return alpha.sum();
  return alpha.dot(targets) - loss.epsilon * alpha.cwiseAbs().sum();
}

void checkDualFeasible(const Vector& alpha, const Vector& targets, double C, const Loss& loss) {
  const double slack = 1e-8 * C * static_cast<double>(alpha.size()) + 1e-14;
  if (loss.kind == LossKind::hinge) {
    if ((alpha.array() < -slack).any() || (alpha.array() > C + slack).any())
      throw InvalidArgument("alpha violates the box constraint 0 <= alpha <= C");
    if (std::abs(alpha.dot(targets)) > slack)
      throw InvalidArgument("alpha violates the equality constraint sum alpha_i y_i = 0");
  } else {
    if ((alpha.array().abs() > C + slack).any())
      throw InvalidArgument("alpha violates the box constraint |alpha| <= C");
    if (std::abs(alpha.sum()) > slack)
      throw InvalidArgument("alpha violates the equality constraint sum alpha_i = 0");
  }
}

DualSolution solveInner(const GramMatrix& kernel, const Vector& targets, const TrainOptions& options) {
  if (options.loss.kind == LossKind::hinge) return solveHinge(kernel, targets, options.C, options.solver);
  return solveEpsInsensitive(kernel, targets, options.C, options.loss.epsilon, options.solver);
}

Matrix flooredWeights(const Matrix& beta, double floor) { return beta.cwiseMax(floor); }

}  // namespace

double Loss::operator()(double decision, double target) const {
  if (kind == LossKind::hinge) return std::max(0.0, 1.0 - target * decision);
  return std::max(0.0, std::abs(target - decision) - epsilon);
}

KernelWeights KernelWeights::uniform(int clusters, std::size_t kernels, double p) {
  checkP(p);
  const double value = std::pow(1.0 / static_cast<double>(kernels), 1.0 / p);
  return {Matrix::Constant(clusters, static_cast<Index>(kernels), value)};
}

void KernelWeights::validate(double p) const {
  checkP(p);
  if ((beta.array() < 0.0).any()) throw InvalidArgument("kernel weights must be nonnegative");
  for (Index j = 0; j < beta.rows(); ++j) {
    double sum = 0.0;
    for (Index m = 0; m < beta.cols(); ++m) sum += std::pow(beta(j, m), p);
    if (sum > 1.0 + 1e-10)
      throw InvalidArgument("kernel weights of cluster " + std::to_string(j) +
                            " exceed the l_p ball");
  }
}

std::string toString(Algorithm algorithm) {
  switch (algorithm) {
    case Algorithm::clmkl: return "clmkl";
    case Algorithm::mkl: return "mkl";
    case Algorithm::unifSvm: return "unif-svm";
  }
  return "clmkl";
}

Algorithm parseAlgorithm(const std::string& text) {
  if (text == "clmkl") return Algorithm::clmkl;
  if (text == "mkl") return Algorithm::mkl;
  if (text == "unif-svm") return Algorithm::unifSvm;
  throw InvalidArgument("unknown algorithm '" + text + "'");
}

Vector ClmklModel::expansion() const { return expansionCoefficients(alpha, targets, loss); }

GramMatrix compositeKernel(const Matrix& beta, const LikelihoodMatrix& c, const KernelBundle& bundle) {
  checkShapes(bundle, c);
  const Index n = bundle.points();
  const auto M = static_cast<Index>(bundle.count());
  if (beta.rows() != c.clusters() || beta.cols() != M)
    throw DimensionMismatch("kernel weights must be " + std::to_string(c.clusters()) + " x " +
                            std::to_string(M));
  Matrix out = Matrix::Zero(n, n);
  Matrix mix(n, n);
  for (int j = 0; j < c.clusters(); ++j) {
    mix.setZero();
    for (Index m = 0; m < M; ++m) mix.noalias() += beta(j, m) * bundle[static_cast<std::size_t>(m)].values();
    const auto cj = c.values().col(j);
    for (Index b = 0; b < n; ++b) {
      const double cb = cj(b);
      if (cb == 0.0) continue;
      for (Index a = b; a < n; ++a) out(a, b) += cj(a) * cb * mix(a, b);
    }
  }
  for (Index b = 0; b < n; ++b)
    for (Index a = b + 1; a < n; ++a) out(b, a) = out(a, b);
  return GramMatrix(std::move(out));
}

Vector expansionCoefficients(const Vector& alpha, const Vector& targets, const Loss& loss) {
  if (alpha.size() != targets.size()) throw DimensionMismatch("alpha and targets differ in size");
  if (loss.kind == LossKind::hinge) return alpha.cwiseProduct(targets);
  return alpha;
}

Matrix expansionNormsSq(const Vector& expansion, const LikelihoodMatrix& c, const KernelBundle& bundle) {
  checkShapes(bundle, c);
  if (expansion.size() != bundle.points())
    throw DimensionMismatch("expansion length differs from the kernel size");
  const auto M = static_cast<Index>(bundle.count());
  Matrix q(c.clusters(), M);
  Vector u(bundle.points());
  for (int j = 0; j < c.clusters(); ++j) {
    u = expansion.cwiseProduct(c.values().col(j));
    for (Index m = 0; m < M; ++m)
      q(j, m) = std::max(0.0, u.dot(bundle[static_cast<std::size_t>(m)].values() * u));
  }
  return q;
}

Matrix weightNormsSq(const Vector& expansion, const LikelihoodMatrix& c, const Matrix& beta,
                     const KernelBundle& bundle) {
  Matrix q = expansionNormsSq(expansion, c, bundle);
  if (beta.rows() != q.rows() || beta.cols() != q.cols())
    throw DimensionMismatch("kernel weights do not match l x M");
  return beta.array().square() * q.array();
}

WeightUpdate updateBeta(const Matrix& weightNormsSq, double p) {
  checkP(p);
  if ((weightNormsSq.array() < 0.0).any() || !weightNormsSq.allFinite())
    throw InvalidArgument("weight norms must be finite and nonnegative");
  const Index l = weightNormsSq.rows();
  const Index M = weightNormsSq.cols();
  WeightUpdate out;
  out.weights.beta.resize(l, M);
  const double uniform = std::pow(1.0 / static_cast<double>(M), 1.0 / p);
  for (Index j = 0; j < l; ++j) {
    const double s = weightNormsSq.row(j).maxCoeff();
    if (!(s > 0.0)) {
      out.weights.beta.row(j).setConstant(uniform);
      out.resetClusters.push_back(static_cast<int>(j));
      continue;
    }
    double denom = 0.0;
    for (Index m = 0; m < M; ++m) denom += std::pow(weightNormsSq(j, m) / s, p / (p + 1.0));
    denom = std::pow(denom, 1.0 / p);
    for (Index m = 0; m < M; ++m)
      out.weights.beta(j, m) = std::pow(weightNormsSq(j, m) / s, 1.0 / (p + 1.0)) / denom;
  }
  return out;
}

double blockNormRegularizer(const Matrix& weightNormsSq, double p) {
  checkP(p);
  const double e = p / (p + 1.0);
  double total = 0.0;
  for (Index j = 0; j < weightNormsSq.rows(); ++j) total += powerMean(weightNormsSq.row(j).transpose(), e);
  return 0.5 * total;
}

double dualRegularizer(const Matrix& expansionNormsSq, double p) {
  checkP(p);
  double total = 0.0;
  for (Index j = 0; j < expansionNormsSq.rows(); ++j) {
    if (p == 1.0)
      total += std::max(0.0, expansionNormsSq.row(j).maxCoeff());
    else
      total += powerMean(expansionNormsSq.row(j).transpose(), p / (p - 1.0));
  }
  return 0.5 * total;
}

Vector inSampleDecision(const ClmklModel& model, const KernelBundle& bundle) {
  const LikelihoodMatrix c(model.trainLikelihoods);
  const GramMatrix kt = compositeKernel(model.weights.beta, c, bundle);
  return (kt.values() * model.expansion()).array() + model.bias;
}

double primalObjective(const ClmklModel& model, const KernelBundle& bundle) {
  const Vector f = inSampleDecision(model, bundle);
  double loss = 0.0;
  for (Index i = 0; i < f.size(); ++i) loss += model.loss(f(i), model.targets(i));
  return blockNormRegularizer(model.weightNormsSq, model.p) + model.C * loss;
}

double dualObjective(const Vector& alpha, const Vector& targets, const LikelihoodMatrix& c,
                     const KernelBundle& bundle, double p, double C, const Loss& loss) {
  checkShapes(bundle, c);
  if (alpha.size() != bundle.points() || targets.size() != bundle.points())
    throw DimensionMismatch("alpha and targets must have one entry per point");
  checkDualFeasible(alpha, targets, C, loss);
  const Vector a = expansionCoefficients(alpha, targets, loss);
  return lossDualTerm(alpha, targets, loss) - dualRegularizer(expansionNormsSq(a, c, bundle), p);
}

TrainResult trainClmkl(const KernelBundle& bundle, const Vector& targets, const LikelihoodMatrix& c,
                       const LikelihoodModel& likelihood, const TrainOptions& options) {
  checkP(options.p);
  checkShapes(bundle, c);
  if (targets.size() != bundle.points())
    throw DimensionMismatch("target count differs from the kernel size");
  if (likelihood.clusters() != c.clusters() || likelihood.trainPoints != bundle.points())
    throw DimensionMismatch("likelihood model does not match the likelihood matrix");
  checkTargets(targets, options.loss);
  if (options.maxOuterIterations < 1) throw InvalidArgument("need at least one outer iteration");

  const double p = options.p;
  TrainResult result;
  ClmklModel& model = result.model;
  model.algorithm = c.clusters() == 1 ? Algorithm::mkl : Algorithm::clmkl;
  model.targets = targets;
  model.p = p;
  model.C = options.C;
  model.loss = options.loss;
  model.likelihood = likelihood;
  model.trainLikelihoods = c.values();
  model.kernelNames = bundle.names();

  Matrix beta = KernelWeights::uniform(c.clusters(), bundle.count(), p).beta;
  TrainReport& report = result.report;
  for (int outer = 0; outer < options.maxOuterIterations; ++outer) {
    const Matrix used = flooredWeights(beta, options.weightFloor);
    const GramMatrix kt = compositeKernel(used, c, bundle);
    const DualSolution sol = solveInner(kt, targets, options);
    const Vector a = expansionCoefficients(sol.alpha, targets, options.loss);
    const Matrix q = expansionNormsSq(a, c, bundle);
    const Matrix norms = used.array().square() * q.array();

    const Vector f = kt.values() * a;
    const double primal = blockNormRegularizer(norms, p) +
                          options.C * lossAtBestBias(f, targets, options.loss, sol.bias);
    const double dual = lossDualTerm(sol.alpha, targets, options.loss) - dualRegularizer(q, p);
    const double gap = (primal - dual) / std::max(1.0, std::abs(primal));

    report.outerIterations = outer + 1;
    report.primalHistory.push_back(primal);
    report.dualHistory.push_back(dual);
    report.gapHistory.push_back(gap);

    model.weights.beta = used;
    model.alpha = sol.alpha;
    model.bias = sol.bias;
    model.weightNormsSq = norms;

    if (gap <= options.gapTolerance) {
      report.converged = true;
      break;
    }
    WeightUpdate update = updateBeta(norms, p);
    for (int j : update.resetClusters)
      if (std::find(report.resetClusters.begin(), report.resetClusters.end(), j) ==
          report.resetClusters.end())
        report.resetClusters.push_back(j);
    beta = std::move(update.weights.beta);
  }
  return result;
}

TrainResult trainMkl(const KernelBundle& bundle, const Vector& targets, const TrainOptions& options) {
  const Index n = bundle.points();
  return trainClmkl(bundle, targets, LikelihoodMatrix::uniform(n, 1), LikelihoodModel::global(n),
                    options);
}

TrainResult trainUniform(const KernelBundle& bundle, const Vector& targets, const TrainOptions& options) {
  checkP(options.p);
  if (targets.size() != bundle.points())
    throw DimensionMismatch("target count differs from the kernel size");
  checkTargets(targets, options.loss);
  const Index n = bundle.points();
  const LikelihoodMatrix c = LikelihoodMatrix::uniform(n, 1);

  TrainResult result;
  ClmklModel& model = result.model;
  model.algorithm = Algorithm::unifSvm;
  model.targets = targets;
  model.p = options.p;
  model.C = options.C;
  model.loss = options.loss;
  model.likelihood = LikelihoodModel::global(n);
  model.trainLikelihoods = c.values();
  model.kernelNames = bundle.names();
  model.weights.beta = Matrix::Constant(1, static_cast<Index>(bundle.count()),
                                        1.0 / static_cast<double>(bundle.count()));

  const GramMatrix kt = sumUniform(bundle);
  const DualSolution sol = solveInner(kt, targets, options);
  const Vector a = expansionCoefficients(sol.alpha, targets, options.loss);
  model.alpha = sol.alpha;
  model.bias = sol.bias;
  model.weightNormsSq = weightNormsSq(a, c, model.weights.beta, bundle);

  // Fixed weights: the primal is 1/2 a'K a + C * loss and the dual is the
  // plain SVM dual on the averaged kernel.
  const Vector f = kt.values() * a;
  const double primal = 0.5 * a.dot(f) + options.C * lossAtBestBias(f, targets, options.loss, sol.bias);
  const double dual = sol.objective;
  result.report.outerIterations = 1;
  result.report.primalHistory.push_back(primal);
  result.report.dualHistory.push_back(dual);
  result.report.gapHistory.push_back((primal - dual) / std::max(1.0, std::abs(primal)));
  result.report.converged = true;
  return result;
}

Matrix representerWeights(const Vector& expansion, const LikelihoodMatrix& c,
                          const KernelBundle& bundle, double p) {
  checkP(p);
  const Matrix q = expansionNormsSq(expansion, c, bundle);
  Matrix out(q.rows(), q.cols());
  for (Index j = 0; j < q.rows(); ++j) {
    const double s = q.row(j).maxCoeff();
    if (!(s > 0.0))
      throw InvalidArgument("expansion vanishes in cluster " + std::to_string(j) +
                            "; the representer multipliers are undefined");
    if (p == 1.0) {
      const double cutoff = s * (1.0 - 1e-12);
      const auto ties = (q.row(j).array() >= cutoff).count();
      for (Index m = 0; m < q.cols(); ++m)
        out(j, m) = q(j, m) >= cutoff ? 1.0 / static_cast<double>(ties) : 0.0;
      continue;
    }
    const double e = p / (p - 1.0);
    double sum = 0.0;
    for (Index m = 0; m < q.cols(); ++m) sum += std::pow(q(j, m) / s, e);
    const double scale = std::pow(sum, -1.0 / p);
    for (Index m = 0; m < q.cols(); ++m) out(j, m) = scale * std::pow(q(j, m) / s, 1.0 / (p - 1.0));
  }
  return out;
}

LikelihoodMatrix testLikelihoods(const LikelihoodModel& model, const CrossKernelMatrix* clusterCross,
                                 Index testPoints) {
  if (model.clusters() == 1) return LikelihoodMatrix::uniform(testPoints, 1);
  if (clusterCross == nullptr)
    throw InvalidArgument("a clustering-kernel cross matrix is required for multi-cluster models");
  if (clusterCross->testPoints() != testPoints)
    throw DimensionMismatch("clustering cross kernel has a different number of test points");
  return likelihoods(crossDistanceSq(*clusterCross, model), model.tau);
}

Vector predict(const ClmklModel& model, const std::vector<CrossKernelMatrix>& cross,
               const CrossKernelMatrix* clusterCross) {
  const auto M = static_cast<Index>(model.weights.beta.cols());
  if (static_cast<Index>(cross.size()) != M)
    throw DimensionMismatch("expected " + std::to_string(M) + " cross kernels, got " +
                            std::to_string(cross.size()));
  const Index nTest = cross.front().testPoints();
  for (const auto& x : cross) {
    if (x.trainPoints() != model.trainPoints())
      throw DimensionMismatch("cross kernel has " + std::to_string(x.trainPoints()) +
                              " training columns, model was trained on " +
                              std::to_string(model.trainPoints()));
    if (x.testPoints() != nTest) throw DimensionMismatch("cross kernels differ in test point count");
  }
  const LikelihoodMatrix cTest = testLikelihoods(model.likelihood, clusterCross, nTest);
  const Vector a = model.expansion();
  const int l = model.clusters();
  Matrix coef(model.trainPoints(), l);
  Vector f = Vector::Constant(nTest, model.bias);
  for (Index m = 0; m < M; ++m) {
    for (int j = 0; j < l; ++j)
      coef.col(j) = model.weights.beta(j, m) * a.cwiseProduct(model.trainLikelihoods.col(j));
    const Matrix proj = cross[static_cast<std::size_t>(m)].values * coef;
    f += proj.cwiseProduct(cTest.values()).rowwise().sum();
  }
  return f;
}

std::vector<int> OneVsAllModel::decide(const Matrix& decisions) const {
  std::vector<int> out(static_cast<std::size_t>(decisions.rows()));
  for (Index i = 0; i < decisions.rows(); ++i) {
    Index best = 0;
    for (Index k = 1; k < decisions.cols(); ++k)
      if (decisions(i, k) > decisions(i, best)) best = k;
    out[static_cast<std::size_t>(i)] = classes[static_cast<std::size_t>(best)];
  }
  return out;
}

OneVsAllModel trainOneVsAll(const KernelBundle& bundle, const std::vector<int>& labels,
                            const LikelihoodMatrix& c, const LikelihoodModel& likelihood,
                            Algorithm algorithm, const TrainOptions& options) {
  if (static_cast<Index>(labels.size()) != bundle.points())
    throw DimensionMismatch("label count differs from the kernel size");
  const std::set<int> distinct(labels.begin(), labels.end());
  if (distinct.size() < 2) throw InvalidArgument("one-vs-all needs at least two classes");
  OneVsAllModel out;
  out.classes.assign(distinct.begin(), distinct.end());
  TrainOptions binary = options;
  binary.loss = Loss::hinge();
  for (int cls : out.classes) {
    Vector y(bundle.points());
    for (Index i = 0; i < y.size(); ++i) y(i) = labels[static_cast<std::size_t>(i)] == cls ? 1.0 : -1.0;
    TrainResult r;
    switch (algorithm) {
      case Algorithm::clmkl: r = trainClmkl(bundle, y, c, likelihood, binary); break;
      case Algorithm::mkl: r = trainMkl(bundle, y, binary); break;
      case Algorithm::unifSvm: r = trainUniform(bundle, y, binary); break;
    }
    out.models.push_back(std::move(r.model));
    out.reports.push_back(std::move(r.report));
  }
  return out;
}

Matrix predictOneVsAll(const OneVsAllModel& model, const std::vector<CrossKernelMatrix>& cross,
                       const CrossKernelMatrix* clusterCross) {
  if (model.models.empty()) throw InvalidArgument("one-vs-all model is empty");
  const Index nTest = cross.empty() ? 0 : cross.front().testPoints();
  Matrix out(nTest, static_cast<Index>(model.models.size()));
  for (std::size_t k = 0; k < model.models.size(); ++k)
    out.col(static_cast<Index>(k)) = predict(model.models[k], cross, clusterCross);
  return out;
}

}  // namespace clmkl

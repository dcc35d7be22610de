#include "clmkl/lmkl.hpp"

#include "clmkl/error.hpp"

#include <cmath>
#include <limits>

namespace clmkl {

namespace {

void softmaxRows(Matrix& scores) {
  for (Index i = 0; i < scores.rows(); ++i) {
    const double top = scores.row(i).maxCoeff();
    scores.row(i) = (scores.row(i).array() - top).exp();
    scores.row(i) /= scores.row(i).sum();
  }
}

void checkGating(const Matrix& eta, const KernelBundle& bundle) {
  if (eta.rows() != bundle.points() || eta.cols() != static_cast<Index>(bundle.count()))
    throw DimensionMismatch("gating matrix must be n x M");
}

}  // namespace

GatingState GatingState::zero(Index points, std::size_t kernels, std::string clusteringKernelId) {
  return {Matrix::Zero(points, static_cast<Index>(kernels)),
          Vector::Zero(static_cast<Index>(kernels)), std::move(clusteringKernelId)};
}

Matrix gatingValues(const GatingState& state, const GramMatrix& k0) {
  if (state.coefficients.rows() != k0.size())
    throw DimensionMismatch("gating coefficients do not match the clustering kernel");
  Matrix scores = k0.values() * state.coefficients;
  scores.rowwise() += state.bias.transpose();
  softmaxRows(scores);
  return scores;
}

Matrix gatingValues(const GatingState& state, const CrossKernelMatrix& k0Cross) {
  if (state.coefficients.rows() != k0Cross.trainPoints())
    throw DimensionMismatch("gating coefficients do not match the clustering cross kernel");
  Matrix scores = k0Cross.values * state.coefficients;
  scores.rowwise() += state.bias.transpose();
  softmaxRows(scores);
  return scores;
}

GramMatrix gatedKernel(const Matrix& eta, const KernelBundle& bundle) {
  checkGating(eta, bundle);
  const Index n = bundle.points();
  Matrix out = Matrix::Zero(n, n);
  for (std::size_t m = 0; m < bundle.count(); ++m) {
    const Matrix& k = bundle[m].values();
    const auto e = eta.col(static_cast<Index>(m));
    for (Index b = 0; b < n; ++b) {
      const double eb = e(b);
      for (Index a = b; a < n; ++a) out(a, b) += e(a) * k(a, b) * eb;
    }
  }
  for (Index b = 0; b < n; ++b)
    for (Index a = b + 1; a < n; ++a) out(b, a) = out(a, b);
  return GramMatrix(std::move(out));
}

double gatingObjective(const Vector& alpha, const Vector& labels, const Matrix& eta,
                       const KernelBundle& bundle) {
  checkGating(eta, bundle);
  const Vector ay = alpha.cwiseProduct(labels);
  double quad = 0.0;
  for (std::size_t m = 0; m < bundle.count(); ++m) {
    const Vector u = ay.cwiseProduct(eta.col(static_cast<Index>(m)));
    quad += u.dot(bundle[m].values() * u);
  }
  return alpha.sum() - 0.5 * quad;
}

GatingGradient gatingGradient(const Vector& alpha, const Vector& labels, const Matrix& eta,
                              const KernelBundle& bundle) {
  checkGating(eta, bundle);
  if (alpha.size() != bundle.points() || labels.size() != bundle.points())
    throw DimensionMismatch("alpha and labels must have one entry per point");
  const Index n = bundle.points();
  const auto M = static_cast<Index>(bundle.count());
  const Vector ay = alpha.cwiseProduct(labels);
  Matrix b(n, M);
  for (Index m = 0; m < M; ++m)
    b.col(m) = bundle[static_cast<std::size_t>(m)].values() * ay.cwiseProduct(eta.col(m));
  const Vector a = eta.cwiseProduct(b).rowwise().sum();
  GatingGradient grad;
  grad.coefficients.resize(n, M);
  for (Index m = 0; m < M; ++m)
    grad.coefficients.col(m) = -(ay.cwiseProduct(eta.col(m))).cwiseProduct(b.col(m) - a);
  grad.bias = grad.coefficients.colwise().sum().transpose();
  return grad;
}

LmklResult trainLmkl(const KernelBundle& bundle, const GramMatrix& k0, const Vector& labels,
                     const LmklOptions& options, std::string clusteringKernelId) {
  if (k0.size() != bundle.points())
    throw DimensionMismatch("clustering kernel and base kernels differ in point count");
  if (labels.size() != bundle.points()) throw DimensionMismatch("label count differs from kernel size");
  if (options.steps < 1) throw InvalidArgument("LMKL needs at least one step");
  requireBinaryLabels(labels);

  GatingState state = GatingState::zero(bundle.points(), bundle.count(), clusteringKernelId);
  LmklResult result;
  LmklModel& best = result.model;
  double bestObjective = std::numeric_limits<double>::infinity();

  for (int t = 0; t < options.steps; ++t) {
    const Matrix eta = gatingValues(state, k0);
    const GramMatrix kernel = gatedKernel(eta, bundle);
    const DualSolution sol = solveHinge(kernel, labels, options.C, options.solver);
    result.report.objectiveHistory.push_back(sol.objective);
    if (sol.objective < bestObjective) {
      bestObjective = sol.objective;
      result.report.bestIteration = t;
      best.gating = state;
      best.trainGating = eta;
      best.alpha = sol.alpha;
      best.bias = sol.bias;
    }
    if (t + 1 == options.steps) break;

    const GatingGradient grad = gatingGradient(sol.alpha, labels, eta, bundle);
    if (grad.coefficients.isZero(0.0)) break;
    const double current = gatingObjective(sol.alpha, labels, eta, bundle);
    double step = options.initialStep;
    bool accepted = false;
    while (step >= options.minStep) {
      GatingState trial = state;
      trial.coefficients -= step * grad.coefficients;
      trial.bias -= step * grad.bias;
      const double value = gatingObjective(sol.alpha, labels, gatingValues(trial, k0), bundle);
      if (value < current) {
        state = std::move(trial);
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    result.report.stepSizes.push_back(accepted ? step : 0.0);
    if (!accepted) {
      result.report.stalled = true;
      break;
    }
  }
  best.labels = labels;
  best.C = options.C;
  best.kernelNames = bundle.names();
  return result;
}

Vector predictLmkl(const LmklModel& model, const std::vector<CrossKernelMatrix>& cross,
                   const CrossKernelMatrix& k0Cross) {
  const Index M = model.trainGating.cols();
  if (static_cast<Index>(cross.size()) != M)
    throw DimensionMismatch("expected " + std::to_string(M) + " cross kernels, got " +
                            std::to_string(cross.size()));
  const Index nTest = k0Cross.testPoints();
  for (const auto& x : cross)
    if (x.trainPoints() != model.trainPoints() || x.testPoints() != nTest)
      throw DimensionMismatch("cross kernel shape does not match the model");
  const Matrix etaTest = gatingValues(model.gating, k0Cross);
  const Vector ay = model.alpha.cwiseProduct(model.labels);
  Vector f = Vector::Constant(nTest, model.bias);
  for (Index m = 0; m < M; ++m) {
    const Vector proj = cross[static_cast<std::size_t>(m)].values * ay.cwiseProduct(model.trainGating.col(m));
    f += proj.cwiseProduct(etaTest.col(m));
  }
  return f;
}

}  // namespace clmkl

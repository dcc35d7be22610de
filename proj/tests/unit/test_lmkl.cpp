#include "clmkl/error.hpp"
#include "clmkl/lmkl.hpp"

#include "synthetic.hpp"

#include <doctest.h>

#include <cmath>

using namespace clmkl;

namespace {

GramMatrix randomK0(int n, std::mt19937_64& rng) {
  return computeGram(synth::gaussianFeatures(n, 2, rng), KernelSpec::linear());
}

}  // namespace

TEST_CASE("gating values") {
  std::mt19937_64 rng(1);
  const GramMatrix k0 = randomK0(4, rng);
  GatingState s = GatingState::zero(4, 2);
  CHECK((gatingValues(s, k0).array() - 0.5).abs().maxCoeff() < 1e-15);
  s.bias << std::log(3.0), 0.0;
  const Matrix e = gatingValues(s, k0);
  CHECK(e(2, 0) == doctest::Approx(0.75));
  CHECK(e(2, 1) == doctest::Approx(0.25));

  std::normal_distribution<double> normal;
  for (Index i = 0; i < s.coefficients.size(); ++i) s.coefficients.data()[i] = normal(rng);
  const Matrix before = gatingValues(s, k0);
  s.bias.array() += 7.0;
  CHECK((gatingValues(s, k0) - before).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((before.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-14);
}

TEST_CASE("gated kernel") {
  std::mt19937_64 rng(2);
  const KernelBundle one = synth::randomBundle(5, 1, rng);
  CHECK((gatedKernel(Matrix::Ones(5, 1), one).values() - one[0].values()).cwiseAbs().maxCoeff() == 0.0);

  const KernelBundle three = synth::randomBundle(5, 3, rng);
  const Matrix expected = (three[0].values() + three[1].values() + three[2].values()) / 9.0;
  CHECK((gatedKernel(Matrix::Constant(5, 3, 1.0 / 3.0), three).values() - expected).cwiseAbs().maxCoeff() <
        1e-14);

  Matrix k1(2, 2), k2(2, 2);
  k1 << 1, 0.5, 0.5, 1;
  k2 << 2, 0.3, 0.3, 2;
  const KernelBundle b({GramMatrix(k1), GramMatrix(k2)}, {"a", "b"});
  Matrix eta(2, 2);
  eta << 1, 0, 0, 1;
  const GramMatrix g = gatedKernel(eta, b);
  CHECK(g(0, 0) == 1.0);
  CHECK(g(1, 1) == 2.0);
  CHECK(g(0, 1) == 0.0);
}

TEST_CASE("gating gradient degenerate cases") {
  std::mt19937_64 rng(3);
  const KernelBundle b = synth::randomBundle(6, 2, rng);
  const Vector y = synth::randomLabels(6, rng);
  const Matrix eta = Matrix::Constant(6, 2, 0.5);
  const GatingGradient z = gatingGradient(Vector::Zero(6), y, eta, b);
  CHECK(z.coefficients.isZero(0.0));
  CHECK(z.bias.isZero(0.0));
  const KernelBundle one({b[0]}, {"k"});
  const GatingGradient g1 = gatingGradient(Vector::Ones(6), y, Matrix::Ones(6, 1), one);
  CHECK(g1.coefficients.cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("gating gradient matches finite differences") {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 5; ++trial) {
    const int n = 8 + trial;
    const KernelBundle b = synth::randomBundle(n, 3, rng);
    const GramMatrix k0 = randomK0(n, rng);
    const Vector y = synth::randomLabels(n, rng);
    Vector alpha(n);
    for (int i = 0; i < n; ++i) alpha(i) = u(rng);
    GatingState s = GatingState::zero(n, 3);
    for (Index i = 0; i < s.coefficients.size(); ++i) s.coefficients.data()[i] = 0.3 * normal(rng);
    for (Index m = 0; m < 3; ++m) s.bias(m) = 0.3 * normal(rng);

    // The gradient is with respect to v_m = sum_i r(i, m) phi_0(x_i); along
    // r + h * d the directional derivative is <g, K0 d>.
    const GatingGradient g = gatingGradient(alpha, y, gatingValues(s, k0), b);
    Matrix d(n, 3);
    for (Index i = 0; i < d.size(); ++i) d.data()[i] = normal(rng);
    Vector db(3);
    for (Index m = 0; m < 3; ++m) db(m) = normal(rng);
    const double h = 1e-5;
    GatingState plus = s, minus = s;
    plus.coefficients += h * d;
    minus.coefficients -= h * d;
    plus.bias += h * db;
    minus.bias -= h * db;
    const double fd = (gatingObjective(alpha, y, gatingValues(plus, k0), b) -
                       gatingObjective(alpha, y, gatingValues(minus, k0), b)) /
                      (2 * h);
    const double analytic = (g.coefficients.cwiseProduct(k0.values() * d)).sum() + g.bias.dot(db);
    CHECK(std::abs(fd - analytic) <= 1e-4 * std::max(1e-8, std::abs(analytic)));
  }
}

TEST_CASE("lmkl with one kernel is the plain SVM") {
  std::mt19937_64 rng(5);
  const KernelBundle b = synth::randomBundle(25, 1, rng);
  const GramMatrix k0 = randomK0(25, rng);
  const Vector y = synth::randomLabels(25, rng);
  LmklOptions o;
  o.steps = 5;
  const LmklResult r = trainLmkl(b, k0, y, o);
  const DualSolution s = solveHinge(b[0], y, 1.0);
  CHECK((r.model.alpha - s.alpha).cwiseAbs().maxCoeff() < 1e-12);
  const CrossKernelMatrix cross(b[0].values(), b[0].diagonal());
  const Vector f = predictLmkl(r.model, {cross}, CrossKernelMatrix(k0.values(), k0.diagonal()));
  const Vector g = b[0].values() * s.alpha.cwiseProduct(y) + Vector::Constant(25, s.bias);
  CHECK((f - g).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("lmkl on two regimes") {
  const synth::TwoRegime d = synth::twoRegime(120, 10, 7);
  const synth::RegimeKernels k = synth::regimeKernels(d);
  LmklOptions o;
  o.C = 10.0;
  o.steps = 30;
  const LmklResult r = trainLmkl(k.bundle, k.k0, d.yTrain, o);
  for (double j : r.report.objectiveHistory) CHECK(std::isfinite(j));
  // Objective of the returned iterate is the smallest seen.
  const double best = *std::min_element(r.report.objectiveHistory.begin(), r.report.objectiveHistory.end());
  CHECK(r.report.objectiveHistory[static_cast<std::size_t>(r.report.bestIteration)] == best);

  double onFirst = 0.0, onSecond = 0.0;
  int nFirst = 0, nSecond = 0;
  for (int i = 0; i < 120; ++i) {
    if (d.regimeTrain[static_cast<std::size_t>(i)] == 0) {
      onFirst += r.model.trainGating(i, 0);
      ++nFirst;
    } else {
      onSecond += r.model.trainGating(i, 1);
      ++nSecond;
    }
  }
  CHECK(onFirst / nFirst > 0.6);
  CHECK(onSecond / nSecond > 0.6);

  // Training points fed back reproduce the in-sample decisions.
  const Vector fTrain = predictLmkl(r.model, {CrossKernelMatrix(k.bundle[0].values(), k.bundle[0].diagonal()),
                                              CrossKernelMatrix(k.bundle[1].values(), k.bundle[1].diagonal())},
                                    CrossKernelMatrix(k.k0.values(), k.k0.diagonal()));
  const GramMatrix gk = gatedKernel(r.model.trainGating, k.bundle);
  const Vector inSample =
      gk.values() * r.model.alpha.cwiseProduct(r.model.labels) + Vector::Constant(120, r.model.bias);
  CHECK((fTrain - inSample).cwiseAbs().maxCoeff() < 1e-10);

  LmklModel zero = r.model;
  zero.alpha.setZero();
  const Vector fz = predictLmkl(zero, k.cross, k.k0Cross);
  CHECK((fz.array() - zero.bias).abs().maxCoeff() == 0.0);
}

#include "clmkl/bounds.hpp"
#include "clmkl/clustering.hpp"
#include "clmkl/error.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace clmkl;

namespace {

BoundInputs randomInputs(int n, int M, int l, double p, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.1, 1.0);
  BoundInputs in;
  in.kernelDiagonals.resize(M, n);
  for (Index i = 0; i < in.kernelDiagonals.size(); ++i) in.kernelDiagonals.data()[i] = u(rng);
  Matrix c(n, l);
  for (Index i = 0; i < c.size(); ++i) c.data()[i] = u(rng);
  c = c.array().colwise() / c.rowwise().sum().array();
  in.likelihoods = c;
  in.radius = 2.0;
  in.p = p;
  in.kernelBound = 1.0;
  return in;
}

}  // namespace

TEST_CASE("optimal t") {
  CHECK(optimalT(1, 2.0) == 2.0);
  CHECK(optimalT(std::exp(2.0) + 1e-9 > 7.389 ? 7 : 7, 1.0) == doctest::Approx(2 * std::log(7.0)));
  CHECK(optimalT(1000, 2.0) == 4.0);
  CHECK(maxT(1.0) == kUnboundedTCap);
  CHECK(maxT(2.0) == 4.0);
  CHECK((boundRegime(1000, 2.0) == BoundRegime::polynomialM));
  CHECK((boundRegime(1000, 1.0) == BoundRegime::logM));
  CHECK(toString(BoundRegime::logM) == "log-M");
}

TEST_CASE("exact bound with one kernel") {
  std::mt19937_64 rng(1);
  const BoundInputs in = randomInputs(10, 1, 2, 2.0, rng);
  const ExactBound e = rademacherBoundExact(in);
  CHECK(e.t == 2.0);
  double s = 0.0;
  for (Index i = 0; i < 10; ++i)
    for (Index j = 0; j < 2; ++j) s += in.likelihoods(i, j) * in.likelihoods(i, j) * in.kernelDiagonals(0, i);
  CHECK(e.value == doctest::Approx(std::sqrt(2.0) / 10.0 * std::sqrt(2.0 * s)));
}

TEST_CASE("hard versus uniform assignment differ by sqrt(l)") {
  std::mt19937_64 rng(2);
  for (int l : {2, 3, 5}) {
    BoundInputs in = randomInputs(30, 4, l, 2.0, rng);
    std::vector<int> labels;
    for (int i = 0; i < 30; ++i) labels.push_back(i % l);
    in.likelihoods = LikelihoodMatrix::hard(labels, l).values();
    const double hard = rademacherBoundSimplified(in);
    in.likelihoods = LikelihoodMatrix::uniform(30, l).values();
    const double uniform = rademacherBoundSimplified(in);
    CHECK(hard / uniform == doctest::Approx(std::sqrt(static_cast<double>(l))).epsilon(1e-12));
  }
}

TEST_CASE("p = 1 with M = e^2 uses t = 4") {
  // M must be an integer; the regime is determined by 2 ln M against the cap.
  CHECK(2.0 * std::log(std::exp(2.0)) == doctest::Approx(4.0));
  const std::size_t M = 7;
  CHECK(optimalT(M, 1.0) == doctest::Approx(2 * std::log(7.0)));
  std::mt19937_64 rng(3);
  BoundInputs in = randomInputs(20, 7, 2, 1.0, rng);
  const double t = optimalT(M, 1.0);
  const double expected = std::sqrt(in.radius * in.kernelBound) / 20.0 *
                          std::sqrt(t * std::pow(7.0, 2.0 / t) * likelihoodMass(in.likelihoods));
  CHECK(rademacherBoundSimplified(in) == doctest::Approx(expected));
  // At the interior optimum t M^(2/t) = 2 e ln M.
  CHECK(t * std::pow(7.0, 2.0 / t) == doctest::Approx(2.0 * std::exp(1.0) * std::log(7.0)));
}

TEST_CASE("p = 2 with many kernels has M^(1/4) dependence") {
  std::mt19937_64 rng(4);
  BoundInputs a = randomInputs(10, 100, 1, 2.0, rng);
  a.kernelDiagonals.setConstant(0.5);
  BoundInputs b = a;
  b.kernelDiagonals = Matrix::Constant(1600, 10, 0.5);
  CHECK(optimalT(100, 2.0) == 4.0);
  CHECK(rademacherBoundSimplified(b) / rademacherBoundSimplified(a) == doctest::Approx(std::pow(16.0, 0.25)));
}

TEST_CASE("simplified bound properties") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const BoundInputs in = randomInputs(15, 1 + trial % 6, 1 + trial % 3, trial % 2 == 0 ? 1.0 : 1.7, rng);
    CHECK(rademacherBoundExact(in).value <= rademacherBoundSimplified(in) + 1e-12);
  }
  BoundInputs in = randomInputs(15, 3, 1, 2.0, rng);
  in.likelihoods = Matrix::Ones(15, 1);
  CHECK(likelihoodMass(in.likelihoods) == 15.0);

  // Doubling n with the same per-point statistics.
  BoundInputs twice = in;
  twice.kernelDiagonals.resize(3, 30);
  twice.kernelDiagonals << in.kernelDiagonals, in.kernelDiagonals;
  twice.likelihoods = Matrix::Ones(30, 1);
  CHECK(rademacherBoundSimplified(twice) / rademacherBoundSimplified(in) == doctest::Approx(1 / std::sqrt(2.0)));

  in.kernelBound = 0.5;
  in.kernelDiagonals(0, 0) = 0.9;
  CHECK_THROWS_AS(rademacherBoundSimplified(in), InvalidArgument);
}

TEST_CASE("bounds are invariant to permutations") {
  std::mt19937_64 rng(6);
  const BoundInputs in = randomInputs(12, 4, 3, 1.5, rng);
  BoundInputs perm = in;
  perm.kernelDiagonals = in.kernelDiagonals.colwise().reverse().rowwise().reverse();
  perm.likelihoods = in.likelihoods.colwise().reverse();
  CHECK(rademacherBoundExact(perm).value == doctest::Approx(rademacherBoundExact(in).value));
  CHECK(rademacherBoundSimplified(perm) == doctest::Approx(rademacherBoundSimplified(in)));
}

TEST_CASE("generalization bound") {
  std::mt19937_64 rng(7);
  BoundInputs in = randomInputs(50, 3, 2, 2.0, rng);
  in.delta = 0.5;
  const BoundReport r = computeBounds(in, 0.0);
  CHECK(r.confidenceTerm == doctest::Approx(std::sqrt(std::log(4.0) / 100.0)));
  CHECK(r.genBound == doctest::Approx(r.confidenceTerm + 2 * r.rademacherSimplified));
  CHECK(generalizationBound(in, 0.1) == doctest::Approx(r.genBound + 0.1));
  CHECK_THROWS_AS(generalizationBound(in, -0.1), InvalidArgument);

  BoundInputs bigger = in;
  bigger.kernelDiagonals.resize(3, 100);
  bigger.kernelDiagonals << in.kernelDiagonals, in.kernelDiagonals;
  bigger.likelihoods.resize(100, 2);
  bigger.likelihoods << in.likelihoods, in.likelihoods;
  CHECK(generalizationBound(bigger, 0.0) < generalizationBound(in, 0.0));

  in.delta = 2.0;
  CHECK_THROWS_AS(in.validate(), InvalidArgument);
  in.delta = 0.05;
  in.radius = 0.0;
  CHECK_THROWS_AS(in.validate(), InvalidArgument);
}

TEST_CASE("radius estimate") {
  Matrix w(2, 2);
  w << 1, 4, 0, 0;
  // sum_j (sum_m N^(p/(p+1)))^((p+1)/p) with p = 1: (1 + 2)^2 = 9.
  CHECK(estimateRadius(w, 1.0) == doctest::Approx(9.0));
  CHECK(estimateRadius(Matrix::Zero(2, 3), 2.0) == 0.0);
}

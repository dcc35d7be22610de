#include "clmkl/clustering.hpp"
#include "clmkl/error.hpp"

#include "oracles.hpp"
#include "synthetic.hpp"

#include <doctest.h>

#include <cmath>

using namespace clmkl;

namespace {

GramMatrix linear1d(const std::vector<double>& xs) {
  Matrix x(static_cast<Index>(xs.size()), 1);
  for (std::size_t i = 0; i < xs.size(); ++i) x(static_cast<Index>(i)) = xs[i];
  return computeGram(x, KernelSpec::linear());
}

// Exhaustive minimum of the clustering error over all 2-partitions.
double bestTwoPartitionError(const GramMatrix& k, std::vector<int>& bestLabels) {
  const auto n = static_cast<int>(k.size());
  double best = INFINITY;
  for (int mask = 1; mask < (1 << n) - 1; ++mask) {
    std::vector<int> labels(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) labels[static_cast<std::size_t>(i)] = (mask >> i) & 1;
    const double e = clusteringError(k, labels, 2);
    if (e < best) {
      best = e;
      bestLabels = labels;
    }
  }
  return best;
}

}  // namespace

TEST_CASE("k-means with one cluster") {
  const GramMatrix k = linear1d({1, 2, 4, 7});
  const ClusterAssignment a = kernelKMeans(k, {1, 3, 100, 0});
  const double expected = k.trace() - k.values().sum() / 4.0;
  CHECK(a.clusteringError == doctest::Approx(expected));
  for (int l : a.labels) CHECK(l == 0);
}

TEST_CASE("k-means separates two blobs") {
  const GramMatrix k = linear1d({0, 0.1, 0.2, 10, 10.1, 10.2});
  const ClusterAssignment a = kernelKMeans(k, {2, 10, 100, 42});
  std::vector<int> oracleLabels;
  const double best = bestTwoPartitionError(k, oracleLabels);
  CHECK(a.clusteringError == doctest::Approx(best));
  CHECK(oracle::adjustedRandIndex(a.labels, {0, 0, 0, 1, 1, 1}) == doctest::Approx(1.0));
  CHECK(oracle::adjustedRandIndex(oracleLabels, {0, 0, 0, 1, 1, 1}) == doctest::Approx(1.0));
}

TEST_CASE("k-means with l = n") {
  const GramMatrix k = linear1d({0, 1, 3, 6, 10});
  const ClusterAssignment a = kernelKMeans(k, {5, 4, 100, 1});
  CHECK(a.clusteringError == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("k-means error trace is nonincreasing and seeding is deterministic") {
  std::mt19937_64 rng(7);
  const Matrix x = synth::gaussianFeatures(60, 2, rng);
  const GramMatrix k = computeGram(x, KernelSpec::gaussian(1.0));
  const ClusterAssignment a = kernelKMeans(k, {4, 5, 100, 123});
  REQUIRE(a.errorTrace.size() >= 2);
  for (std::size_t t = 1; t < a.errorTrace.size(); ++t)
    CHECK(a.errorTrace[t] <= a.errorTrace[t - 1] + 1e-10);
  CHECK(a.errorTrace.back() == doctest::Approx(a.clusteringError));
  const ClusterAssignment b = kernelKMeans(k, {4, 5, 100, 123});
  CHECK(a.labels == b.labels);
  for (int j = 0; j < 4; ++j) CHECK(std::count(a.labels.begin(), a.labels.end(), j) > 0);
  CHECK_THROWS_AS(kernelKMeans(k, {0, 5, 100, 1}), InvalidArgument);
  CHECK_THROWS_AS(kernelKMeans(k, {61, 5, 100, 1}), InvalidArgument);
}

TEST_CASE("feature-space distances") {
  // Linear kernel on {0, 2, 4}; clusters {0} and {2, 4}.
  const GramMatrix k = linear1d({0, 2, 4});
  ClusterAssignment a;
  a.labels = {0, 1, 1};
  a.clusters = 2;
  const LikelihoodModel m = LikelihoodModel::build(k, a, "k0");
  const Matrix d = trainDistanceSq(k, m);
  CHECK(d(0, 0) == doctest::Approx(0.0));
  CHECK(d(0, 1) == doctest::Approx(9.0));
  CHECK(d(1, 1) == doctest::Approx(1.0));
  CHECK(d(2, 0) == doctest::Approx(16.0));

  // Unseen point x = 5 through the cross path.
  Matrix row(1, 3);
  row << 0, 10, 20;
  const Matrix dc = crossDistanceSq(CrossKernelMatrix(row, Vector::Constant(1, 25.0)), m);
  CHECK(dc(0, 0) == doctest::Approx(25.0));
  CHECK(dc(0, 1) == doctest::Approx(4.0));
}

TEST_CASE("distances on blob data favor the containing cluster") {
  const GramMatrix k = linear1d({0, 0.1, 0.2, 10, 10.1, 10.2});
  const ClusterAssignment a = kernelKMeans(k, {2, 10, 100, 42});
  const LikelihoodModel m = LikelihoodModel::build(k, a, "k0");
  const Matrix d = trainDistanceSq(k, m);
  for (Index i = 0; i < 6; ++i) {
    const int own = a.labels[static_cast<std::size_t>(i)];
    CHECK(d(i, own) < d(i, 1 - own));
  }
}

TEST_CASE("likelihood model validation") {
  LikelihoodModel m = LikelihoodModel::global(3);
  CHECK_NOTHROW(m.validate());
  m.memberSets = {{0, 1}, {1, 2}};
  m.intraClusterTerm = Vector::Zero(2);
  CHECK_THROWS_AS(m.validate(), InvalidArgument);
  m = LikelihoodModel::global(3);
  m.tau = -1.0;
  CHECK_THROWS_AS(m.validate(), InvalidArgument);
}

TEST_CASE("likelihoods") {
  Matrix d(1, 2);
  d << 0, 1;
  const LikelihoodMatrix c = likelihoods(d, std::log(3.0));
  CHECK(c(0, 0) == doctest::Approx(0.75));
  CHECK(c(0, 1) == doctest::Approx(0.25));

  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0, 5);
  Matrix r(20, 3);
  for (Index i = 0; i < r.size(); ++i) r.data()[i] = u(rng);
  const LikelihoodMatrix zero = likelihoods(r, 0.0);
  CHECK((zero.values().array() - 1.0 / 3.0).abs().maxCoeff() < 1e-15);
  const LikelihoodMatrix hard = likelihoods(r, kHardAssignment);
  for (Index i = 0; i < 20; ++i) {
    Index arg;
    r.row(i).minCoeff(&arg);
    CHECK(hard(i, arg) == 1.0);
    CHECK(hard.values().row(i).sum() == 1.0);
  }
  for (double tau : {0.0, 0.1, 1.0, 50.0, 1e6, kHardAssignment}) {
    const LikelihoodMatrix x = likelihoods(r, tau);
    CHECK((x.values().rowwise().sum().array() - 1.0).abs().maxCoeff() <= 1e-10);
  }
  // Ties at tau = inf go to the lowest index.
  Matrix tie(1, 3);
  tie << 2, 1, 1;
  CHECK(likelihoods(tie, kHardAssignment)(0, 1) == 1.0);
  CHECK_THROWS_AS(likelihoods(r, -0.5), InvalidArgument);
}

TEST_CASE("hard and uniform likelihood mass") {
  const LikelihoodMatrix h = LikelihoodMatrix::hard({0, 1, 2, 1, 0}, 3);
  CHECK(h.values().squaredNorm() == doctest::Approx(5.0));
  const LikelihoodMatrix u = LikelihoodMatrix::uniform(5, 3);
  CHECK(u.values().squaredNorm() == doctest::Approx(5.0 / 3.0));
  CHECK_THROWS_AS(LikelihoodMatrix(Matrix::Constant(2, 2, 0.7)), InvalidArgument);
}

TEST_CASE("average evenness") {
  Matrix d(1, 2);
  d << 0, 1;
  CHECK(averageEvenness(d, 0.0) == doctest::Approx(1.0));
  CHECK(averageEvenness(d, kHardAssignment) == doctest::Approx(0.5));
  CHECK(averageEvenness(d, std::log(2.0)) == doctest::Approx(0.75));

  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0, 3);
  Matrix r(30, 4);
  for (Index i = 0; i < r.size(); ++i) r.data()[i] = u(rng);
  double prev = averageEvenness(r, 0.0);
  for (double e = -6; e <= 9; e += 0.5) {
    const double ae = averageEvenness(r, std::pow(10.0, e));
    CHECK(ae <= prev + 1e-12);
    CHECK(ae >= 0.25 - 1e-12);
    prev = ae;
  }
}

TEST_CASE("tau calibration") {
  Matrix d(1, 2);
  d << 0, 1;
  const TauCalibration one = calibrateTau(d, 1.0);
  CHECK(one.tau == 0.0);
  const TauCalibration c = calibrateTau(d, 0.75);
  CHECK(std::abs(c.evenness - 0.75) <= 1e-3);
  CHECK(std::abs(averageEvenness(d, c.tau) - 0.75) <= 1e-3);
  CHECK(c.tau == doctest::Approx(std::log(2.0)).epsilon(5e-3));

  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0, 3);
  Matrix r(25, 3);
  for (Index i = 0; i < r.size(); ++i) r.data()[i] = u(rng);
  CHECK(calibrateTau(r, 0.8).tau < calibrateTau(r, 0.5).tau);

  const TauCalibration low = calibrateTau(r, 0.2);
  CHECK_FALSE(low.reachable);
  CHECK(std::isinf(low.tau));
  // Identical distances: evenness is 1 for every tau.
  const TauCalibration flat = calibrateTau(Matrix::Ones(4, 2), 0.7);
  CHECK_FALSE(flat.reachable);
}

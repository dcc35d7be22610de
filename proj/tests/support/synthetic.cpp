#include "synthetic.hpp"

namespace synth {

Matrix gaussianFeatures(int n, int d, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix x(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) x(i, j) = normal(rng);
  return x;
}

KernelBundle randomBundle(int n, int M, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> width(0.5, 3.0);
  std::uniform_int_distribution<int> dim(2, 5);
  std::vector<GramMatrix> kernels;
  std::vector<std::string> names;
  for (int m = 0; m < M; ++m) {
    const Matrix x = gaussianFeatures(n, dim(rng), rng);
    const clmkl::KernelSpec spec =
        m % 3 == 2 ? clmkl::KernelSpec::linear() : clmkl::KernelSpec::gaussian(width(rng));
    kernels.push_back(clmkl::computeGram(x, spec));
    names.push_back("k" + std::to_string(m));
  }
  return KernelBundle(std::move(kernels), std::move(names));
}

Vector randomLabels(int n, std::mt19937_64& rng) {
  std::bernoulli_distribution coin(0.5);
  Vector y(n);
  for (int i = 0; i < n; ++i) y(i) = coin(rng) ? 1.0 : -1.0;
  y(0) = 1.0;
  y(n - 1) = -1.0;
  return y;
}

namespace {

void sample(int n, std::mt19937_64& rng, double labelNoise, Matrix& x, Vector& y, std::vector<int>& regime) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::bernoulli_distribution coin(0.5);
  std::bernoulli_distribution flip(labelNoise);
  x.resize(n, 3);
  y.resize(n);
  regime.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const bool first = coin(rng);
    x(i, 0) = (first ? 3.0 : -3.0) + 0.5 * normal(rng);
    x(i, 1) = normal(rng);
    x(i, 2) = normal(rng);
    const double informative = first ? x(i, 1) : x(i, 2);
    y(i) = informative >= 0.0 ? 1.0 : -1.0;
    if (flip(rng)) y(i) = -y(i);
    regime[static_cast<std::size_t>(i)] = first ? 0 : 1;
  }
}

}  // namespace

TwoRegime twoRegime(int nTrain, int nTest, std::uint64_t seed, double labelNoise) {
  std::mt19937_64 rng(seed);
  TwoRegime d;
  std::vector<int> ignored;
  sample(nTrain, rng, labelNoise, d.train, d.yTrain, d.regimeTrain);
  sample(nTest, rng, labelNoise, d.test, d.yTest, ignored);
  return d;
}

RegimeKernels regimeKernels(const TwoRegime& data) {
  const clmkl::KernelSpec g = clmkl::KernelSpec::gaussian(0.5);
  const clmkl::KernelSpec lin = clmkl::KernelSpec::linear();
  const Matrix uTrain = data.train.col(1);
  const Matrix vTrain = data.train.col(2);
  const Matrix zTrain = data.train.col(0);
  const Matrix uTest = data.test.col(1);
  const Matrix vTest = data.test.col(2);
  const Matrix zTest = data.test.col(0);
  RegimeKernels k{KernelBundle({clmkl::computeGram(uTrain, g), clmkl::computeGram(vTrain, g)}, {"u", "v"}),
                  clmkl::computeGram(zTrain, lin),
                  {clmkl::computeCross(uTest, uTrain, g), clmkl::computeCross(vTest, vTrain, g)},
                  clmkl::computeCross(zTest, zTrain, lin)};
  return k;
}

}  // namespace synth

#include "clmkl/evaluation.hpp"

#include "clmkl/error.hpp"
#include "clmkl/random.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

namespace clmkl {

double accuracy(const Vector& predictions, const Vector& labels) {
  if (predictions.size() != labels.size()) throw DimensionMismatch("prediction and label counts differ");
  if (predictions.size() == 0) throw InvalidArgument("accuracy of an empty set is undefined");
  Index hits = 0;
  for (Index i = 0; i < labels.size(); ++i) hits += predictions(i) == labels(i) ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

double auc(const Vector& scores, const Vector& labels) {
  if (scores.size() != labels.size()) throw DimensionMismatch("score and label counts differ");
  std::vector<Index> order(static_cast<std::size_t>(scores.size()));
  std::iota(order.begin(), order.end(), Index{0});
  std::sort(order.begin(), order.end(), [&](Index a, Index b) { return scores(a) < scores(b); });
  double positives = 0.0;
  double negatives = 0.0;
  for (Index i = 0; i < labels.size(); ++i) {
    if (labels(i) == 1.0) positives += 1.0;
    else if (labels(i) == -1.0) negatives += 1.0;
    else throw InvalidArgument("AUC needs labels -1/+1");
  }
  if (positives == 0.0 || negatives == 0.0) throw InvalidArgument("AUC needs both classes present");

  // Sum of midranks of the positives.
  double rankSum = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && scores(order[j + 1]) == scores(order[i])) ++j;
    const double midrank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k)
      if (labels(order[k]) == 1.0) rankSum += midrank;
    i = j + 1;
  }
  return (rankSum - positives * (positives + 1.0) / 2.0) / (positives * negatives);
}

std::string toString(Metric metric) { return metric == Metric::accuracy ? "accuracy" : "auc"; }

Metric parseMetric(const std::string& text) {
  if (text == "accuracy") return Metric::accuracy;
  if (text == "auc") return Metric::auc;
  throw InvalidArgument("unknown metric '" + text + "' (expected accuracy or auc)");
}

std::vector<double> Grid::defaultCs() {
  std::vector<double> out;
  for (int k = -2; k <= 4; ++k) out.push_back(std::pow(10.0, 0.5 * k));
  return out;
}

std::vector<double> Grid::evennessTargets(double lo, double hi, int count) {
  if (count < 1) throw InvalidArgument("need at least one evenness target");
  if (count == 1) return {lo};
  std::vector<double> out;
  for (int k = 0; k < count; ++k) out.push_back(lo + (hi - lo) * k / (count - 1));
  return out;
}

Grid Grid::defaults(double evennessLo, double evennessHi) {
  return {defaultCs(), {2.0}, evennessTargets(evennessLo, evennessHi), {3}};
}

void Grid::validate() const {
  if (Cs.empty() || ps.empty() || evenness.empty() || ls.empty())
    throw InvalidArgument("every grid list must be nonempty");
  for (double c : Cs)
    if (!(c > 0.0)) throw InvalidArgument("grid C values must be positive");
  for (double p : ps)
    if (!(p >= 1.0)) throw InvalidArgument("grid p values must be >= 1");
  for (int l : ls) {
    if (l < 1) throw InvalidArgument("grid l values must be >= 1");
    for (double e : evenness)
      if (l > 1 && (!(e > 1.0 / l) || e > 1.0))
        throw InvalidArgument("evenness targets must lie in (1/l, 1] for every l in the grid");
  }
}

std::vector<GridPoint> expandGrid(const Grid& grid, Method method) {
  grid.validate();
  const bool usesClusters = method == Method::clmkl;
  const bool usesP = method == Method::clmkl || method == Method::mkl;
  const std::vector<int> ls = usesClusters ? grid.ls : std::vector<int>{1};
  const std::vector<double> ps = usesP ? grid.ps : std::vector<double>{grid.ps.front()};
  std::vector<GridPoint> out;
  for (int l : ls) {
    const std::vector<double> es = l > 1 ? grid.evenness : std::vector<double>{1.0};
    for (double e : es)
      for (double p : ps)
        for (double c : grid.Cs) out.push_back({c, p, e, l});
  }
  return out;
}

namespace {

void shuffle(std::vector<Index>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(uniformIndex(rng, i));
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace

std::vector<std::vector<Index>> stratifiedFolds(const Vector& labels, int folds, std::uint64_t seed) {
  if (folds < 2) throw InvalidArgument("need at least two folds");
  std::map<double, std::vector<Index>> byClass;
  for (Index i = 0; i < labels.size(); ++i) byClass[labels(i)].push_back(i);
  for (const auto& [cls, members] : byClass)
    if (static_cast<int>(members.size()) < folds)
      throw InvalidArgument("class " + std::to_string(cls) + " has " + std::to_string(members.size()) +
                            " members, fewer than the " + std::to_string(folds) + " folds");
  std::mt19937_64 rng(deriveSeed(seed, SeedStream::crossValidationFolds, 0));
  std::vector<std::vector<Index>> out(static_cast<std::size_t>(folds));
  std::size_t next = 0;
  for (auto& [cls, members] : byClass) {
    shuffle(members, rng);
    for (Index i : members) {
      out[next].push_back(i);
      next = (next + 1) % out.size();
    }
  }
  for (auto& f : out) std::sort(f.begin(), f.end());
  return out;
}

std::vector<std::vector<Index>> randomFolds(Index points, int folds, std::uint64_t seed) {
  if (folds < 2) throw InvalidArgument("need at least two folds");
  if (points < folds) throw InvalidArgument("fewer points than folds");
  std::vector<Index> all(static_cast<std::size_t>(points));
  std::iota(all.begin(), all.end(), Index{0});
  std::mt19937_64 rng(deriveSeed(seed, SeedStream::crossValidationFolds, 0));
  shuffle(all, rng);
  std::vector<std::vector<Index>> out(static_cast<std::size_t>(folds));
  for (std::size_t i = 0; i < all.size(); ++i) out[i % out.size()].push_back(all[i]);
  for (auto& f : out) std::sort(f.begin(), f.end());
  return out;
}

FittedModel fitSplit(const KernelBundle& bundle, const GramMatrix* clusterKernel, const Vector& targets,
                     std::span<const Index> trainIdx, const FitOptions& options) {
  const KernelBundle train = bundle.submatrices(trainIdx);
  std::optional<GramMatrix> k0;
  if (clusterKernel != nullptr) k0 = clusterKernel->submatrix(trainIdx);
  Vector y(static_cast<Index>(trainIdx.size()));
  for (std::size_t i = 0; i < trainIdx.size(); ++i) y(static_cast<Index>(i)) = targets(trainIdx[i]);
  return fitModel(train, k0 ? &*k0 : nullptr, y, options);
}

double evaluateSplit(const KernelBundle& bundle, const GramMatrix* clusterKernel, const Vector& targets,
                     std::span<const Index> trainIdx, std::span<const Index> testIdx,
                     const FitOptions& options, Metric metric, bool* converged) {
  const FittedModel model = fitSplit(bundle, clusterKernel, targets, trainIdx, options);
  if (converged != nullptr) *converged = model.converged();
  std::vector<CrossKernelMatrix> cross;
  for (const auto& k : bundle.kernels()) cross.push_back(CrossKernelMatrix::fromGram(k, testIdx, trainIdx));
  std::optional<CrossKernelMatrix> k0Cross;
  if (model.needsClusterKernel()) k0Cross = CrossKernelMatrix::fromGram(*clusterKernel, testIdx, trainIdx);
  const Matrix decisions = predictFitted(model, cross, k0Cross ? &*k0Cross : nullptr);
  Vector truth(static_cast<Index>(testIdx.size()));
  for (std::size_t i = 0; i < testIdx.size(); ++i) truth(static_cast<Index>(i)) = targets(testIdx[i]);

  if (model.isRegression()) return -(decisions.col(0) - truth).cwiseAbs().mean();
  if (metric == Metric::auc) {
    if (decisions.cols() != 1) throw InvalidArgument("AUC is only defined for binary problems");
    return auc(decisions.col(0), truth);
  }
  return accuracy(labelsFromDecisions(model, decisions), truth);
}

CvResult crossValidate(const KernelBundle& bundle, const GramMatrix* clusterKernel, const Vector& targets,
                       const Grid& grid, const CvOptions& options) {
  const bool regression = options.base.loss.kind == LossKind::epsInsensitive;
  const auto folds = regression ? randomFolds(bundle.points(), options.folds, options.seed)
                                : stratifiedFolds(targets, options.folds, options.seed);
  const std::vector<GridPoint> points = expandGrid(grid, options.base.method);

  std::vector<std::vector<Index>> trainSets;
  for (const auto& test : folds) {
    std::vector<Index> train;
    std::size_t t = 0;
    for (Index i = 0; i < bundle.points(); ++i) {
      if (t < test.size() && test[t] == i) {
        ++t;
        continue;
      }
      train.push_back(i);
    }
    trainSets.push_back(std::move(train));
  }

  CvResult result;
  std::vector<std::vector<double>> perFold(points.size());
  for (std::size_t g = 0; g < points.size(); ++g) {
    FitOptions fo = options.base;
    fo.C = points[g].C;
    fo.p = points[g].p;
    fo.clusters = points[g].clusters;
    fo.tau.reset();
    fo.evenness.reset();
    if (points[g].clusters > 1) fo.evenness = points[g].evenness;
    double sum = 0.0;
    for (std::size_t f = 0; f < folds.size(); ++f) {
      bool converged = true;
      const double value = evaluateSplit(bundle, clusterKernel, targets, trainSets[f], folds[f], fo,
                                         options.metric, &converged);
      result.rows.push_back({g, points[g], static_cast<int>(f), value, converged});
      perFold[g].push_back(value);
      sum += value;
    }
    result.meanMetric.push_back(sum / static_cast<double>(folds.size()));
  }

  std::size_t best = 0;
  for (std::size_t g = 1; g < points.size(); ++g) {
    const double a = result.meanMetric[g];
    const double b = result.meanMetric[best];
    if (a > b || (a == b && (points[g].C < points[best].C ||
                             (points[g].C == points[best].C && points[g].p < points[best].p))))
      best = g;
  }
  result.bestIndex = best;
  result.best = points[best];
  result.bestMean = result.meanMetric[best];
  result.bestPerFold = perFold[best];
  return result;
}

std::string cvCsv(const CvResult& result) {
  std::ostringstream os;
  os.precision(17);
  os << "grid_index,C,p,l,evenness,fold,metric,converged\n";
  for (const auto& r : result.rows)
    os << r.gridIndex << ',' << r.point.C << ',' << r.point.p << ',' << r.point.clusters << ','
       << r.point.evenness << ',' << r.fold << ',' << r.metric << ',' << (r.converged ? 1 : 0) << '\n';
  return os.str();
}

}  // namespace clmkl

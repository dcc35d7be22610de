#pragma once

#include "clmkl/kernel.hpp"
#include "clmkl/pipeline.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace clmkl {

/// Fraction of exact matches. Throws on empty or mismatched input.
double accuracy(const Vector& predictions, const Vector& labels);

/// Mann-Whitney estimate P(s+ > s-) + P(s+ = s-)/2 for +1/-1 labels.
/// Throws InvalidArgument unless both classes are present.
double auc(const Vector& scores, const Vector& labels);

enum class Metric { accuracy, auc };

std::string toString(Metric metric);
Metric parseMetric(const std::string& text);

struct Grid {
  std::vector<double> Cs;
  std::vector<double> ps;
  std::vector<double> evenness;
  std::vector<int> ls;

  /// 10^-1, 10^-0.5, ..., 10^2
  static std::vector<double> defaultCs();
  /// `count` linearly spaced points over [lo, hi].
  static std::vector<double> evennessTargets(double lo, double hi, int count = 8);
  static Grid defaults(double evennessLo = 0.4, double evennessHi = 0.7);

  /// Throws InvalidArgument on empty lists or out-of-range values.
  void validate() const;
};

struct GridPoint {
  double C = 1.0;
  double p = 2.0;
  double evenness = 1.0;
  int clusters = 1;
};

/// Grid points relevant to `method`, in (l, evenness, p, C) order. Only
/// clmkl uses l and evenness; lmkl and unif-svm ignore p.
std::vector<GridPoint> expandGrid(const Grid& grid, Method method);

/// Stratified k-fold split: returns the test indices of each fold, sorted.
/// Throws InvalidArgument if some class has fewer members than folds.
std::vector<std::vector<Index>> stratifiedFolds(const Vector& labels, int folds, std::uint64_t seed);

/// Plain (unstratified) k-fold split for regression targets.
std::vector<std::vector<Index>> randomFolds(Index points, int folds, std::uint64_t seed);

struct CvOptions {
  int folds = 10;
  std::uint64_t seed = 0;
  Metric metric = Metric::accuracy;
  /// Everything except C, p, l and evenness, which come from the grid.
  FitOptions base;
};

struct CvRow {
  std::size_t gridIndex = 0;
  GridPoint point;
  int fold = 0;
  double metric = 0.0;
  bool converged = true;
};

struct CvResult {
  GridPoint best;
  std::size_t bestIndex = 0;
  double bestMean = 0.0;
  std::vector<double> meanMetric;  // per expanded grid point
  std::vector<double> bestPerFold;
  std::vector<CvRow> rows;
};

/// Trains on `trainIdx` and scores on `testIdx`. Normalization, clustering
/// and tau calibration see only the training block of each kernel.
double evaluateSplit(const KernelBundle& bundle, const GramMatrix* clusterKernel, const Vector& targets,
                     std::span<const Index> trainIdx, std::span<const Index> testIdx,
                     const FitOptions& options, Metric metric, bool* converged = nullptr);

/// Model trained on the training split only, exposed for leakage checks.
FittedModel fitSplit(const KernelBundle& bundle, const GramMatrix* clusterKernel, const Vector& targets,
                     std::span<const Index> trainIdx, const FitOptions& options);

/// Grid search with k-fold cross-validation; the best mean metric wins, ties
/// going to smaller C, then smaller p. Regression (eps-insensitive loss) is
/// scored by negative mean absolute error.
CvResult crossValidate(const KernelBundle& bundle, const GramMatrix* clusterKernel, const Vector& targets,
                       const Grid& grid, const CvOptions& options);

/// Header and rows of the CV report:
/// grid_index,C,p,l,evenness,fold,metric,converged
std::string cvCsv(const CvResult& result);

}  // namespace clmkl

#pragma once

#include "clmkl/kernel.hpp"

#include <vector>

namespace oracle {

using clmkl::Matrix;
using clmkl::Vector;

struct QpSolution {
  Vector alpha;
  double objective = 0.0;
  /// Number of active-set patterns whose KKT system gave a feasible point.
  int feasiblePatterns = 0;
};

/// max sum(a) - 1/2 a' (yy' .* K) a  s.t.  0 <= a <= C, y'a = 0,
/// by enumerating every lower/free/upper pattern and solving its KKT system.
/// Exponential in n; meant for n <= 8.
QpSolution bruteForceHinge(const Matrix& K, const Vector& y, double C);

/// max -eps |a|_1 + y'a - 1/2 a'Ka  s.t.  -C <= a <= C, sum(a) = 0,
/// enumerating the five sign/bound states of every coordinate.
QpSolution bruteForceEps(const Matrix& K, const Vector& y, double C, double eps);

double hingeObjective(const Matrix& K, const Vector& y, const Vector& alpha);
double epsObjective(const Matrix& K, const Vector& y, const Vector& alpha, double eps);

/// Euclidean projection onto {x >= 0, sum x^p <= 1}.
Vector projectLpBall(const Vector& v, double p);

/// sum_m n_m / beta_m
double weightObjective(const Vector& normsSq, const Vector& beta);

/// Minimizes sum_m n_m / beta_m over the nonnegative l_p unit ball with
/// spectral projected gradient, starting from the uniform point.
Vector projectedGradientBeta(const Vector& normsSq, double p, int maxIterations = 200000);

double adjustedRandIndex(const std::vector<int>& a, const std::vector<int>& b);

/// P(s+ > s-) + P(s+ = s-)/2 over all positive/negative pairs.
double pairwiseAuc(const Vector& scores, const Vector& labels);

}  // namespace oracle

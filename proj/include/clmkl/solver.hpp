#pragma once

#include "clmkl/kernel.hpp"

#include <functional>

namespace clmkl {

/// Dual variables of a single-kernel SVM. For classification `alpha` holds
/// the box-constrained multipliers in [0, C] (the expansion uses alpha_i y_i);
/// for regression it holds alpha+_i - alpha-_i in [-C, C].
struct DualSolution {
  Vector alpha;
  double bias = 0.0;
  double objective = 0.0;
  long iterations = 0;
};

struct SolverOptions {
  /// Maximal KKT violation m(alpha) - M(alpha) accepted at termination.
  double tolerance = 1e-6;
  long maxIterations = 10'000'000;
  /// Called after every pair update with the current dual objective.
  /// Evaluating the objective costs O(n) per call.
  std::function<void(long iteration, double objective)> onIteration;
};

/// max sum(a) - 1/2 a' (yy' .* K) a  s.t. 0 <= a <= C, y'a = 0.
DualSolution solveHinge(const GramMatrix& kernel, const Vector& labels, double C,
                        const SolverOptions& options = {});

/// max -1/2 b'Kb + y'b - eps |b|_1  s.t. -C <= b <= C, sum(b) = 0,
/// with b = alpha+ - alpha- and alpha+ alpha- = 0.
DualSolution solveEpsInsensitive(const GramMatrix& kernel, const Vector& targets, double C,
                                 double epsilon, const SolverOptions& options = {});

/// Dual objective at a feasible alpha; throws InvalidArgument when alpha
/// violates the box or equality constraint by more than 1e-8 * C * n.
double dualObjectiveHinge(const GramMatrix& kernel, const Vector& labels, const Vector& alpha,
                          double C);
double dualObjectiveEps(const GramMatrix& kernel, const Vector& targets, const Vector& alpha,
                        double C, double epsilon);

/// Decision values sum_i coef_i k(x, x_i) + bias for rows of a cross kernel.
Vector decisionValues(const Matrix& crossValues, const Vector& expansion, double bias);

/// Throws InvalidArgument unless every label is exactly +1 or -1 and both
/// classes occur.
void requireBinaryLabels(const Vector& labels);

}  // namespace clmkl

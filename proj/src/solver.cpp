#include "clmkl/solver.hpp"

#include "clmkl/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace clmkl {

namespace {

// min 1/2 a'Qa + p'a  s.t. y'a = 0, 0 <= a <= C, where
// Q_st = y_s y_t K(point_s, point_t). Classification uses one variable per
// point; regression uses two (alpha+ with y = +1, alpha- with y = -1).
class SmoProblem {
 public:
  SmoProblem(const Matrix& kernel, std::vector<Index> point, Vector sign, Vector linear, double C)
      : kernel_(kernel),
        point_(std::move(point)),
        sign_(std::move(sign)),
        linear_(std::move(linear)),
        C_(C),
        alpha_(Vector::Zero(sign_.size())),
        grad_(linear_) {}

  long solve(const SolverOptions& options) {
    const Index size = sign_.size();
    long iter = 0;
    while (true) {
      Index up = -1;
      Index low = -1;
      double gmax = -std::numeric_limits<double>::infinity();
      double gmin = std::numeric_limits<double>::infinity();
      for (Index t = 0; t < size; ++t) {
        const double v = -sign_(t) * grad_(t);
        if (inUp(t) && v > gmax) {
          gmax = v;
          up = t;
        }
        if (inLow(t) && v < gmin) {
          gmin = v;
          low = t;
        }
      }
      if (up < 0 || low < 0 || gmax - gmin <= options.tolerance) break;
      if (iter >= options.maxIterations)
        throw SolverError("SMO did not reach tolerance " + std::to_string(options.tolerance) +
                          " within " + std::to_string(options.maxIterations) +
                          " pair updates (violation " + std::to_string(gmax - gmin) + ")");
      step(up, low);
      ++iter;
      if (options.onIteration) options.onIteration(iter, objective());
    }
    return iter;
  }

  // Dual (maximization) objective: -(1/2 a'Qa + p'a).
  double objective() const { return -0.5 * alpha_.dot(grad_ + linear_); }

  double bias() const {
    double ub = std::numeric_limits<double>::infinity();
    double lb = -std::numeric_limits<double>::infinity();
    double sum = 0.0;
    Index free = 0;
    for (Index t = 0; t < sign_.size(); ++t) {
      const double yg = sign_(t) * grad_(t);
      if (alpha_(t) >= C_) {
        if (sign_(t) < 0) ub = std::min(ub, yg);
        else lb = std::max(lb, yg);
      } else if (alpha_(t) <= 0.0) {
        if (sign_(t) > 0) ub = std::min(ub, yg);
        else lb = std::max(lb, yg);
      } else {
        sum += yg;
        ++free;
      }
    }
    const double rho = free > 0 ? sum / static_cast<double>(free) : 0.5 * (ub + lb);
    return -rho;
  }

  const Vector& alpha() const { return alpha_; }

 private:
  bool inUp(Index t) const { return sign_(t) > 0 ? alpha_(t) < C_ : alpha_(t) > 0.0; }
  bool inLow(Index t) const { return sign_(t) > 0 ? alpha_(t) > 0.0 : alpha_(t) < C_; }

  double q(Index s, Index t) const {
    return sign_(s) * sign_(t) * kernel_(point_[static_cast<std::size_t>(s)],
                                         point_[static_cast<std::size_t>(t)]);
  }

  // Moves alpha_i by +y_i t and alpha_j by -y_j t, which keeps y'a fixed.
  void step(Index i, Index j) {
    const double slope = sign_(i) * grad_(i) - sign_(j) * grad_(j);  // < 0
    const double curvature = q(i, i) + q(j, j) - 2.0 * sign_(i) * sign_(j) * q(i, j);
    const double roomI = sign_(i) > 0 ? C_ - alpha_(i) : alpha_(i);
    const double roomJ = sign_(j) > 0 ? alpha_(j) : C_ - alpha_(j);
    const double room = std::min(roomI, roomJ);
    double t = room;
    if (curvature > 0.0) t = std::min(room, -slope / curvature);

    const double oldI = alpha_(i);
    const double oldJ = alpha_(j);
    if (t == roomI)
      alpha_(i) = sign_(i) > 0 ? C_ : 0.0;
    else
      alpha_(i) = std::clamp(oldI + sign_(i) * t, 0.0, C_);
    if (t == roomJ)
      alpha_(j) = sign_(j) > 0 ? 0.0 : C_;
    else
      alpha_(j) = std::clamp(oldJ - sign_(j) * t, 0.0, C_);

    const double di = alpha_(i) - oldI;
    const double dj = alpha_(j) - oldJ;
    for (Index s = 0; s < grad_.size(); ++s) grad_(s) += q(s, i) * di + q(s, j) * dj;
  }

  const Matrix& kernel_;
  std::vector<Index> point_;
  Vector sign_;
  Vector linear_;
  double C_;
  Vector alpha_;
  Vector grad_;
};

void requirePositiveC(double C) {
  if (!(C > 0.0) || !std::isfinite(C)) throw InvalidArgument("C must be positive and finite");
}

double feasibilitySlack(double C, Index n) { return 1e-8 * C * static_cast<double>(n) + 1e-14; }

}  // namespace

void requireBinaryLabels(const Vector& labels) {
  bool pos = false;
  bool neg = false;
  for (Index i = 0; i < labels.size(); ++i) {
    if (labels(i) == 1.0) pos = true;
    else if (labels(i) == -1.0) neg = true;
    else throw InvalidArgument("binary labels must be +1 or -1");
  }
  if (!pos || !neg) throw InvalidArgument("both classes must be present in the training labels");
}

DualSolution solveHinge(const GramMatrix& kernel, const Vector& labels, double C,
                        const SolverOptions& options) {
  const Index n = kernel.size();
  if (labels.size() != n) throw DimensionMismatch("label count differs from kernel size");
  if (n < 2) throw InvalidArgument("SVM training needs at least two points");
  requirePositiveC(C);
  requireBinaryLabels(labels);

  std::vector<Index> point(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) point[static_cast<std::size_t>(i)] = i;
  SmoProblem problem(kernel.values(), std::move(point), labels, Vector::Constant(n, -1.0), C);
  DualSolution out;
  out.iterations = problem.solve(options);
  out.alpha = problem.alpha();
  out.bias = problem.bias();
  out.objective = problem.objective();
  return out;
}

DualSolution solveEpsInsensitive(const GramMatrix& kernel, const Vector& targets, double C,
                                 double epsilon, const SolverOptions& options) {
  const Index n = kernel.size();
  if (targets.size() != n) throw DimensionMismatch("target count differs from kernel size");
  if (n < 2) throw InvalidArgument("SVR training needs at least two points");
  requirePositiveC(C);
  if (!(epsilon >= 0.0)) throw InvalidArgument("epsilon must be nonnegative");
  if (!targets.allFinite()) throw InvalidArgument("regression targets must be finite");

  std::vector<Index> point(static_cast<std::size_t>(2 * n));
  Vector sign(2 * n);
  Vector linear(2 * n);
  for (Index i = 0; i < n; ++i) {
    point[static_cast<std::size_t>(i)] = i;
    point[static_cast<std::size_t>(n + i)] = i;
    sign(i) = 1.0;
    sign(n + i) = -1.0;
    linear(i) = epsilon - targets(i);
    linear(n + i) = epsilon + targets(i);
  }
  SmoProblem problem(kernel.values(), std::move(point), std::move(sign), std::move(linear), C);
  DualSolution out;
  out.iterations = problem.solve(options);
  // Cancelling alpha+ against alpha- keeps the equality and box constraints
  // and can only raise the objective, so complementarity holds exactly.
  out.alpha = problem.alpha().head(n) - problem.alpha().tail(n);
  out.bias = problem.bias();
  out.objective = dualObjectiveEps(kernel, targets, out.alpha, C, epsilon);
  return out;
}

double dualObjectiveHinge(const GramMatrix& kernel, const Vector& labels, const Vector& alpha,
                          double C) {
  const Index n = kernel.size();
  if (labels.size() != n || alpha.size() != n)
    throw DimensionMismatch("alpha, labels and kernel must agree in size");
  const double slack = feasibilitySlack(C, n);
  if ((alpha.array() < -slack).any() || (alpha.array() > C + slack).any())
    throw InvalidArgument("alpha violates the box constraint 0 <= alpha <= C");
  if (std::abs(alpha.dot(labels)) > slack)
    throw InvalidArgument("alpha violates the equality constraint sum alpha_i y_i = 0");
  const Vector a = alpha.cwiseProduct(labels);
  return alpha.sum() - 0.5 * a.dot(kernel.values() * a);
}

double dualObjectiveEps(const GramMatrix& kernel, const Vector& targets, const Vector& alpha,
                        double C, double epsilon) {
  const Index n = kernel.size();
  if (targets.size() != n || alpha.size() != n)
    throw DimensionMismatch("alpha, targets and kernel must agree in size");
  const double slack = feasibilitySlack(C, n);
  if ((alpha.array().abs() > C + slack).any())
    throw InvalidArgument("alpha violates the box constraint |alpha| <= C");
  if (std::abs(alpha.sum()) > slack)
    throw InvalidArgument("alpha violates the equality constraint sum alpha_i = 0");
  return -0.5 * alpha.dot(kernel.values() * alpha) + alpha.dot(targets) -
         epsilon * alpha.cwiseAbs().sum();
}

Vector decisionValues(const Matrix& crossValues, const Vector& expansion, double bias) {
  if (crossValues.cols() != expansion.size())
    throw DimensionMismatch("cross kernel columns differ from the training size");
  return (crossValues * expansion).array() + bias;
}

}  // namespace clmkl

#pragma once

#include "clmkl/kernel.hpp"
#include "clmkl/solver.hpp"

#include <string>
#include <vector>

namespace clmkl {

/// Softmax gating eta_m(x) proportional to exp(<v_m, phi_0(x)> + v_m0), with
/// each v_m kept as coefficients over the training points:
/// v_m = sum_i r(i, m) phi_0(x_i).
struct GatingState {
  Matrix coefficients;  // n x M, r(i, m)
  Vector bias;          // M, v_m0
  std::string clusteringKernelId;

  static GatingState zero(Index points, std::size_t kernels, std::string clusteringKernelId = {});
};

struct LmklModel {
  GatingState gating;
  /// Gating values on the training points, n x M.
  Matrix trainGating;
  Vector alpha;
  Vector labels;
  double bias = 0.0;
  double C = 1.0;
  std::vector<std::string> kernelNames;

  Index trainPoints() const { return alpha.size(); }
};

struct LmklOptions {
  double C = 1.0;
  /// Outer iterations, each one SVM solve followed by one gradient step.
  int steps = 50;
  /// Backtracking starts here and halves until J decreases.
  double initialStep = 1.0;
  double minStep = 1e-10;
  SolverOptions solver;
};

struct LmklReport {
  /// SVM dual optimum J(v) at every outer iteration.
  std::vector<double> objectiveHistory;
  std::vector<double> stepSizes;
  int bestIteration = 0;
  /// True when the line search found no decreasing step before the budget ran out.
  bool stalled = false;
};

struct LmklResult {
  LmklModel model;
  LmklReport report;
};

/// n x M gating values on the training points from the clustering kernel k0.
Matrix gatingValues(const GatingState& state, const GramMatrix& k0);

/// Gating values of unseen points from their k0 cross evaluations.
Matrix gatingValues(const GatingState& state, const CrossKernelMatrix& k0Cross);

/// sum_m eta_m(x_i) k_m(x_i, x_i') eta_m(x_i').
GramMatrix gatedKernel(const Matrix& eta, const KernelBundle& bundle);

/// J = sum_i alpha_i - 1/2 sum_{i,i'} alpha_i alpha_i' y_i y_i' k_eta(x_i, x_i').
double gatingObjective(const Vector& alpha, const Vector& labels, const Matrix& eta,
                       const KernelBundle& bundle);

/// Gradient of J with alpha held fixed. `coefficients` represents dJ/dv_m in
/// the phi_0 expansion: g(i, m) = -alpha_i y_i eta_m(x_i) [B(i, m) - A(i)],
/// B(i, m) = sum_i' alpha_i' y_i' k_m(x_i, x_i') eta_m(x_i'),
/// A(i) = sum_m eta_m(x_i) B(i, m). `bias` is dJ/dv_m0 = sum_i g(i, m).
struct GatingGradient {
  Matrix coefficients;
  Vector bias;
};

GatingGradient gatingGradient(const Vector& alpha, const Vector& labels, const Matrix& eta,
                              const KernelBundle& bundle);

/// Alternates SVM solves on the gated kernel with a backtracking gradient
/// step on the gating parameters; returns the iterate with the smallest J.
LmklResult trainLmkl(const KernelBundle& bundle, const GramMatrix& k0, const Vector& labels,
                     const LmklOptions& options, std::string clusteringKernelId = {});

/// f(x) = sum_i alpha_i y_i sum_m eta_m(x_i) k_m(x_i, x) eta_m(x) + b.
Vector predictLmkl(const LmklModel& model, const std::vector<CrossKernelMatrix>& cross,
                   const CrossKernelMatrix& k0Cross);

}  // namespace clmkl

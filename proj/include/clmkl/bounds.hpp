#pragma once

#include "clmkl/kernel.hpp"

#include <string>

namespace clmkl {

/// Upper end of the t range used when p = 1 (where 2p/(p-1) is infinite).
inline constexpr double kUnboundedTCap = 1e6;

struct BoundInputs {
  /// M x n self-evaluations k_m(x_i, x_i).
  Matrix kernelDiagonals;
  /// n x l cluster likelihoods c_j(x_i).
  Matrix likelihoods;
  /// Radius D of the hypothesis class sum_j |w_j|^2_{2, 2p/(p+1)} <= D.
  double radius = 1.0;
  double p = 2.0;
  /// Uniform bound B >= k_m(x, x).
  double kernelBound = 1.0;
  /// B_l: bound on the loss.
  double lossBound = 1.0;
  /// Lipschitz constant of the loss. Recorded for completeness; it does not
  /// enter the bound as stated.
  double lipschitz = 1.0;
  double delta = 0.05;

  Index points() const { return kernelDiagonals.cols(); }
  Index kernels() const { return kernelDiagonals.rows(); }

  /// Throws InvalidArgument on D <= 0, B <= 0, delta outside (0, 1), p < 1
  /// or inconsistent shapes.
  void validate() const;
};

enum class BoundRegime { logM, polynomialM };

std::string toString(BoundRegime regime);

struct BoundReport {
  double rademacherExact = 0.0;
  double rademacherSimplified = 0.0;
  /// Minimizer of t M^(2/t) over [2, 2p/(p-1)].
  double optimalT = 2.0;
  /// t attaining the exact bound among the candidates evaluated.
  double exactT = 2.0;
  /// sum_j sum_i c_j(x_i)^2
  double likelihoodMass = 0.0;
  double confidenceTerm = 0.0;
  double genBound = 0.0;
  BoundRegime regime = BoundRegime::logM;
};

/// Upper end 2p/(p-1) of the t range, capped at kUnboundedTCap.
double maxT(double p);

/// clamp(2 ln M, [2, maxT(p)]).
double optimalT(std::size_t kernels, double p);

BoundRegime boundRegime(std::size_t kernels, double p);

/// sum_j sum_i c_j(x_i)^2
double likelihoodMass(const Matrix& likelihoods);

struct ExactBound {
  double value = 0.0;
  double t = 2.0;
};

/// (sqrt(D)/n) inf_t (t sum_j |(sum_i c_j^2(x_i) k_m(x_i,x_i))_m|_{t/2})^(1/2),
/// with the infimum taken over t in {2, clamp(2 ln M), maxT(p)}.
ExactBound rademacherBoundExact(const BoundInputs& inputs);

/// (sqrt(D B)/n) inf_t (t M^(2/t) sum_j sum_i c_j^2(x_i))^(1/2). Throws
/// InvalidArgument if any diagonal exceeds B.
double rademacherBoundSimplified(const BoundInputs& inputs);

/// E_z + B_l sqrt(log(2/delta)/(2n)) + 2 * simplified Rademacher bound.
double generalizationBound(const BoundInputs& inputs, double empiricalRisk);

BoundReport computeBounds(const BoundInputs& inputs, double empiricalRisk);

/// Hypothesis radius sum_j (sum_m |w_jm|^(2p/(p+1)))^((p+1)/p) of a trained
/// model, from its beta-scaled weight norms.
double estimateRadius(const Matrix& weightNormsSq, double p);

}  // namespace clmkl

#include "clmkl/bounds.hpp"

#include "clmkl/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace clmkl {

namespace {

// |x|_r computed as s * (sum (x/s)^r)^(1/r) to survive large r.
double scaledNorm(const Vector& x, double r) {
  const double s = x.maxCoeff();
  if (!(s > 0.0)) return 0.0;
  double sum = 0.0;
  for (Index m = 0; m < x.size(); ++m) sum += std::pow(x(m) / s, r);
  return s * std::pow(sum, 1.0 / r);
}

}  // namespace

void BoundInputs::validate() const {
  if (!(radius > 0.0)) throw InvalidArgument("radius D must be positive");
  if (!(kernelBound > 0.0)) throw InvalidArgument("kernel bound B must be positive");
  if (!(delta > 0.0 && delta < 1.0)) throw InvalidArgument("delta must lie in (0, 1)");
  if (!(p >= 1.0) || !std::isfinite(p)) throw InvalidArgument("p must be a finite value >= 1");
  if (!(lossBound >= 0.0)) throw InvalidArgument("loss bound must be nonnegative");
  if (kernelDiagonals.rows() < 1 || kernelDiagonals.cols() < 1)
    throw InvalidArgument("need at least one kernel and one point");
  if (likelihoods.rows() != kernelDiagonals.cols())
    throw DimensionMismatch("likelihoods must have one row per point");
  if ((kernelDiagonals.array() < 0.0).any())
    throw InvalidArgument("kernel self-evaluations must be nonnegative");
}

std::string toString(BoundRegime regime) {
  return regime == BoundRegime::logM ? "log-M" : "polynomial-M";
}

double maxT(double p) {
  if (p == 1.0) return kUnboundedTCap;
  return std::min(kUnboundedTCap, 2.0 * p / (p - 1.0));
}

double optimalT(std::size_t kernels, double p) {
  const double unconstrained = 2.0 * std::log(static_cast<double>(kernels));
  return std::clamp(unconstrained, 2.0, maxT(p));
}

BoundRegime boundRegime(std::size_t kernels, double p) {
  return 2.0 * std::log(static_cast<double>(kernels)) <= maxT(p) ? BoundRegime::logM
                                                                 : BoundRegime::polynomialM;
}

double likelihoodMass(const Matrix& likelihoods) { return likelihoods.squaredNorm(); }

ExactBound rademacherBoundExact(const BoundInputs& inputs) {
  inputs.validate();
  const Index n = inputs.points();
  const Index l = inputs.likelihoods.cols();
  // s(j, m) = sum_i c_j^2(x_i) k_m(x_i, x_i)
  const Matrix s = inputs.likelihoods.array().square().matrix().transpose() *
                   inputs.kernelDiagonals.transpose();
  const auto M = static_cast<std::size_t>(inputs.kernels());
  const std::array<double, 3> candidates = {2.0, optimalT(M, inputs.p), maxT(inputs.p)};
  ExactBound best;
  best.value = std::numeric_limits<double>::infinity();
  for (double t : candidates) {
    double total = 0.0;
    for (Index j = 0; j < l; ++j) total += scaledNorm(s.row(j).transpose(), t / 2.0);
    const double value = std::sqrt(inputs.radius) / static_cast<double>(n) * std::sqrt(t * total);
    if (value < best.value) {
      best.value = value;
      best.t = t;
    }
  }
  return best;
}

double rademacherBoundSimplified(const BoundInputs& inputs) {
  inputs.validate();
  if (inputs.kernelDiagonals.maxCoeff() > inputs.kernelBound)
    throw InvalidArgument("a kernel self-evaluation exceeds the bound B");
  const auto M = static_cast<double>(inputs.kernels());
  const double t = optimalT(static_cast<std::size_t>(inputs.kernels()), inputs.p);
  const double mass = likelihoodMass(inputs.likelihoods);
  return std::sqrt(inputs.radius * inputs.kernelBound) / static_cast<double>(inputs.points()) *
         std::sqrt(t * std::pow(M, 2.0 / t) * mass);
}

double generalizationBound(const BoundInputs& inputs, double empiricalRisk) {
  if (!(empiricalRisk >= 0.0)) throw InvalidArgument("empirical risk must be nonnegative");
  const auto n = static_cast<double>(inputs.points());
  const double confidence = inputs.lossBound * std::sqrt(std::log(2.0 / inputs.delta) / (2.0 * n));
  return empiricalRisk + confidence + 2.0 * rademacherBoundSimplified(inputs);
}

BoundReport computeBounds(const BoundInputs& inputs, double empiricalRisk) {
  BoundReport report;
  const ExactBound exact = rademacherBoundExact(inputs);
  report.rademacherExact = exact.value;
  report.exactT = exact.t;
  report.rademacherSimplified = rademacherBoundSimplified(inputs);
  const auto M = static_cast<std::size_t>(inputs.kernels());
  report.optimalT = optimalT(M, inputs.p);
  report.regime = boundRegime(M, inputs.p);
  report.likelihoodMass = likelihoodMass(inputs.likelihoods);
  report.confidenceTerm = inputs.lossBound *
                          std::sqrt(std::log(2.0 / inputs.delta) / (2.0 * static_cast<double>(inputs.points())));
  report.genBound = generalizationBound(inputs, empiricalRisk);
  return report;
}

double estimateRadius(const Matrix& weightNormsSq, double p) {
  if (!(p >= 1.0)) throw InvalidArgument("p must be >= 1");
  const double e = p / (p + 1.0);
  double total = 0.0;
  for (Index j = 0; j < weightNormsSq.rows(); ++j) {
    const Vector row = weightNormsSq.row(j).transpose();
    total += scaledNorm(row.cwiseMax(0.0), e);
  }
  return total;
}

}  // namespace clmkl

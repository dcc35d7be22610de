#pragma once

#include "clmkl/clustering.hpp"
#include "clmkl/kernel.hpp"
#include "clmkl/solver.hpp"

#include <string>
#include <vector>

namespace clmkl {

enum class LossKind { hinge, epsInsensitive };

struct Loss {
  LossKind kind = LossKind::hinge;
  double epsilon = 0.0;

  static Loss hinge() { return {}; }
  static Loss epsInsensitive(double epsilon) { return {LossKind::epsInsensitive, epsilon}; }

  double operator()(double decision, double target) const;
};

/// l x M nonnegative kernel weights with sum_m beta_jm^p <= 1 per cluster.
struct KernelWeights {
  Matrix beta;

  /// Every weight set to (1/M)^(1/p), the starting point of training.
  static KernelWeights uniform(int clusters, std::size_t kernels, double p);

  /// Throws InvalidArgument on negative entries or a violated norm bound.
  void validate(double p) const;
};

enum class Algorithm { clmkl, mkl, unifSvm };

std::string toString(Algorithm algorithm);
Algorithm parseAlgorithm(const std::string& text);

/// Everything needed to evaluate
///   f(x) = sum_j c_j(x) sum_m beta_jm sum_i a_i c_j(x_i) k_m(x_i, x) + b
/// on new points.
struct ClmklModel {
  Algorithm algorithm = Algorithm::clmkl;
  KernelWeights weights;
  /// Dual variables as returned by the inner solver; see expansion().
  Vector alpha;
  /// Training labels (+1/-1) or regression targets.
  Vector targets;
  double bias = 0.0;
  double p = 2.0;
  double C = 1.0;
  Loss loss;
  LikelihoodModel likelihood;
  /// c_j(x_i) over the training points.
  Matrix trainLikelihoods;
  /// |w_j^(m)|^2 with w_j^(m) = beta_jm sum_i a_i c_j(x_i) phi_m(x_i), i.e.
  /// already scaled by beta_jm^2. Divide by beta_jm before using the
  /// sum |w|^2 / (2 beta) form of the regularizer.
  Matrix weightNormsSq;
  std::vector<std::string> kernelNames;

  /// a_i = alpha_i y_i for the hinge loss, alpha_i for the eps-insensitive loss.
  Vector expansion() const;
  int clusters() const { return static_cast<int>(weights.beta.rows()); }
  Index trainPoints() const { return alpha.size(); }
};

struct TrainReport {
  int outerIterations = 0;
  std::vector<double> primalHistory;
  std::vector<double> dualHistory;
  std::vector<double> gapHistory;
  bool converged = false;
  /// Clusters whose weight row was reset to uniform because every norm was 0.
  std::vector<int> resetClusters;
};

struct TrainOptions {
  double p = 2.0;
  double C = 1.0;
  Loss loss;
  /// Stop once (primal - dual) / max(1, |primal|) <= gapTolerance.
  double gapTolerance = 1e-3;
  int maxOuterIterations = 200;
  /// Lower clamp applied to every weight before it enters the composite kernel.
  double weightFloor = 1e-12;
  SolverOptions solver;
};

struct TrainResult {
  ClmklModel model;
  TrainReport report;
};

/// k~(x_i, x_i') = sum_j sum_m beta_jm c_j(x_i) c_j(x_i') k_m(x_i, x_i').
GramMatrix compositeKernel(const Matrix& beta, const LikelihoodMatrix& c, const KernelBundle& bundle);

/// Expansion coefficients a_i of the dual variables for the given loss.
Vector expansionCoefficients(const Vector& alpha, const Vector& targets, const Loss& loss);

/// l x M quadratic forms |sum_i a_i c_j(x_i) phi_m(x_i)|^2.
Matrix expansionNormsSq(const Vector& expansion, const LikelihoodMatrix& c, const KernelBundle& bundle);

/// l x M values |w_j^(m)|^2 = beta_jm^2 |sum_i a_i c_j(x_i) phi_m(x_i)|^2;
/// round-off negatives are clamped to 0.
Matrix weightNormsSq(const Vector& expansion, const LikelihoodMatrix& c, const Matrix& beta,
                     const KernelBundle& bundle);

struct WeightUpdate {
  KernelWeights weights;
  std::vector<int> resetClusters;
};

/// Closed-form minimizer of sum_m |w_jm|^2 / beta_jm over the l_p ball:
///   beta_jm = |w_jm|^(2/(p+1)) / (sum_k |w_jk|^(2p/(p+1)))^(1/p).
/// A cluster whose norms are all zero gets the uniform row (1/M)^(1/p).
WeightUpdate updateBeta(const Matrix& weightNormsSq, double p);

/// Block-norm regularizer 1/2 sum_j (sum_m |w_jm|^(2p/(p+1)))^((p+1)/p).
double blockNormRegularizer(const Matrix& weightNormsSq, double p);

/// 1/2 sum_j |(sum_i a_i c_j(x_i) phi_m(x_i))_m|^2_{2, 2p/(p-1)}; for p = 1
/// the inner norm is the maximum over kernels.
double dualRegularizer(const Matrix& expansionNormsSq, double p);

/// Primal objective of the model's (w, b) in block-norm form:
///   1/2 sum_j (sum_m |w_jm|^(2p/(p+1)))^((p+1)/p) + C sum_i loss(f(x_i), y_i).
double primalObjective(const ClmklModel& model, const KernelBundle& bundle);

/// Dual objective -C sum_i loss*(-alpha_i/C, y_i) - 1/2 sum_j |...|^2_{2,2p/(p-1)}
/// at a feasible alpha (hinge: alpha in [0, C] with sum alpha_i y_i = 0).
double dualObjective(const Vector& alpha, const Vector& targets, const LikelihoodMatrix& c,
                     const KernelBundle& bundle, double p, double C, const Loss& loss);

/// Alternates an SVM solve on the composite kernel with the closed-form
/// weight update until the relative duality gap drops below the tolerance.
/// `c` must hold the likelihood model's values on the training points.
TrainResult trainClmkl(const KernelBundle& bundle, const Vector& targets, const LikelihoodMatrix& c,
                       const LikelihoodModel& likelihood, const TrainOptions& options);

/// Global l_p-norm MKL: the single-cluster case with c == 1.
TrainResult trainMkl(const KernelBundle& bundle, const Vector& targets, const TrainOptions& options);

/// SVM on the uniform kernel combination (1/M) sum_m K_m, expressed as a
/// single-cluster model with every weight equal to 1/M.
TrainResult trainUniform(const KernelBundle& bundle, const Vector& targets, const TrainOptions& options);

/// Per-(j, m) multipliers of sum_i a_i c_j(x_i) phi_m(x_i) in the optimal
/// primal variable recovered from a dual point:
///   [sum_m' Q_jm'^(p/(p-1))]^(-1/p) Q_jm^(1/(p-1)),  Q = expansionNormsSq.
/// For p = 1 the limit puts 1/k on the k kernels attaining max_m Q_jm.
Matrix representerWeights(const Vector& expansion, const LikelihoodMatrix& c,
                          const KernelBundle& bundle, double p);

/// In-sample decision values on the training points.
Vector inSampleDecision(const ClmklModel& model, const KernelBundle& bundle);

/// Decision values on unseen points. `cross` is ordered like
/// model.kernelNames; `clusterCross` holds the clustering kernel between the
/// new and training points and may be omitted for single-cluster models.
Vector predict(const ClmklModel& model, const std::vector<CrossKernelMatrix>& cross,
               const CrossKernelMatrix* clusterCross);

/// Cluster likelihoods of unseen points under a likelihood model.
LikelihoodMatrix testLikelihoods(const LikelihoodModel& model, const CrossKernelMatrix* clusterCross,
                                 Index testPoints);

/// Sign convention for hinge predictions: 0 maps to +1.
inline double labelFromDecision(double decision) { return decision >= 0.0 ? 1.0 : -1.0; }

struct OneVsAllModel {
  std::vector<int> classes;  // ascending
  std::vector<ClmklModel> models;
  std::vector<TrainReport> reports;

  /// Class with the largest decision value, lowest class index on ties.
  std::vector<int> decide(const Matrix& decisions) const;
};

/// One binary model per class (that class +1, rest -1) sharing the
/// clustering and likelihoods. `trainer` selects clmkl, mkl or unif-svm.
OneVsAllModel trainOneVsAll(const KernelBundle& bundle, const std::vector<int>& labels,
                            const LikelihoodMatrix& c, const LikelihoodModel& likelihood,
                            Algorithm algorithm, const TrainOptions& options);

/// n_test x K decision matrix, one column per class.
Matrix predictOneVsAll(const OneVsAllModel& model, const std::vector<CrossKernelMatrix>& cross,
                       const CrossKernelMatrix* clusterCross);

}  // namespace clmkl

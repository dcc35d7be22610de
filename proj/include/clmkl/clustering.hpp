#pragma once

#include "clmkl/kernel.hpp"

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

namespace clmkl {

/// Hard partition of the training points. Cluster indices are 0-based.
struct ClusterAssignment {
  std::vector<int> labels;
  int clusters = 0;
  /// Sum over points of the squared feature-space distance to the mean of
  /// the assigned cluster.
  double clusteringError = 0.0;
  /// Clustering error at the start of every iteration of the winning
  /// restart, followed by the final value.
  std::vector<double> errorTrace;
};

struct KMeansOptions {
  int clusters = 2;
  int restarts = 10;
  int maxIterations = 100;
  std::uint64_t seed = 0;
};

/// Kernel k-means over a precomputed Gram matrix, keeping the restart with
/// the smallest clustering error. Each restart starts from l distinct points
/// drawn uniformly; clusters that go empty receive the point farthest from
/// its own center.
ClusterAssignment kernelKMeans(const GramMatrix& k0, const KMeansOptions& options);

double clusteringError(const GramMatrix& k0, const std::vector<int>& labels, int clusters);

/// Soft cluster membership c_j(x) proportional to exp(-tau * dist^2(x, S_j)),
/// kept in a form that can be evaluated on unseen points from their
/// clustering-kernel cross evaluations.
struct LikelihoodModel {
  std::vector<std::vector<Index>> memberSets;
  double tau = 0.0;  // +infinity means hard assignment
  std::string clusteringKernelId;
  /// (1/|S_j|^2) sum_{i,i' in S_j} k0(x_i, x_i')
  Vector intraClusterTerm;
  Index trainPoints = 0;

  static LikelihoodModel build(const GramMatrix& k0, const ClusterAssignment& assignment,
                               std::string clusteringKernelId, double tau = 0.0);

  /// A single cluster holding every point; its likelihood is 1 everywhere.
  static LikelihoodModel global(Index trainPoints, std::string clusteringKernelId = {});

  int clusters() const { return static_cast<int>(memberSets.size()); }

  /// Throws InvalidArgument unless member sets partition [0, trainPoints),
  /// tau >= 0 and the intra-cluster terms are (numerically) nonnegative.
  void validate() const;
};

/// dist^2(x, S_j) for every cluster j, from the row k0(x, x_i) over the
/// training points and the self-evaluation k0(x, x). Round-off negatives
/// are clamped to 0.
Vector featureDistanceSq(const Eigen::Ref<const Vector>& pointRow, double selfValue,
                         const LikelihoodModel& model);

/// n x l distances of the training points (rows of k0).
Matrix trainDistanceSq(const GramMatrix& k0, const LikelihoodModel& model);

/// n_test x l distances of unseen points.
Matrix crossDistanceSq(const CrossKernelMatrix& cross, const LikelihoodModel& model);

/// n x l matrix of c_j(x_i); entries in [0, 1], rows summing to 1.
class LikelihoodMatrix {
 public:
  explicit LikelihoodMatrix(Matrix values);

  static LikelihoodMatrix uniform(Index points, int clusters);
  static LikelihoodMatrix hard(const std::vector<int>& labels, int clusters);

  const Matrix& values() const { return values_; }
  Index points() const { return values_.rows(); }
  int clusters() const { return static_cast<int>(values_.cols()); }
  double operator()(Index i, Index j) const { return values_(i, j); }

  LikelihoodMatrix rows(std::span<const Index> indices) const;

 private:
  Matrix values_;
};

inline constexpr double kHardAssignment = std::numeric_limits<double>::infinity();

/// Softmax of -tau * distSq per row with max-subtraction; tau = +infinity
/// yields the indicator of the nearest cluster (lowest index on ties).
LikelihoodMatrix likelihoods(const Matrix& distSq, double tau);

/// AE(tau) = (1/(n l)) sum_i sum_j exp(-tau d_ij) / max_j' exp(-tau d_ij').
double averageEvenness(const Matrix& distSq, double tau);

struct TauCalibration {
  double tau = 0.0;
  double evenness = 1.0;
  /// False when the target lies outside the achievable range; tau is then
  /// the nearest endpoint (0 or +infinity).
  bool reachable = true;
  int iterations = 0;
};

/// Binary search for tau with |AE(tau) - target| <= tol. The upper bracket
/// starts at 1 and doubles until AE drops below the target.
TauCalibration calibrateTau(const Matrix& distSq, double targetEvenness, double tol = 1e-3);

}  // namespace clmkl

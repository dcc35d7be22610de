#include "clmkl/clustering.hpp"

#include "clmkl/error.hpp"
#include "clmkl/random.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace clmkl {

namespace {

// Per-cluster sizes, within-cluster kernel sums and point-to-cluster sums
// for a labelling; dist(i, j) = K_ii - 2 T_ij / |S_j| + W_j / |S_j|^2.
struct ClusterStats {
  std::vector<Index> sizes;
  Vector within;
  Matrix pointSums;

  ClusterStats(const Matrix& k, const std::vector<int>& labels, int clusters)
      : sizes(static_cast<std::size_t>(clusters), 0),
        within(Vector::Zero(clusters)),
        pointSums(Matrix::Zero(k.rows(), clusters)) {
    const Index n = k.rows();
    for (Index b = 0; b < n; ++b) ++sizes[static_cast<std::size_t>(labels[b])];
    for (Index b = 0; b < n; ++b) {
      const int cb = labels[b];
      for (Index i = 0; i < n; ++i) pointSums(i, cb) += k(i, b);
    }
    for (Index i = 0; i < n; ++i) within(labels[i]) += pointSums(i, labels[i]);
  }

  double distance(const Matrix& k, Index i, int j) const {
    const auto size = static_cast<double>(sizes[static_cast<std::size_t>(j)]);
    if (size == 0.0) return std::numeric_limits<double>::infinity();
    const double d = k(i, i) - 2.0 * pointSums(i, j) / size + within(j) / (size * size);
    return std::max(d, 0.0);
  }
};

double errorOf(const Matrix& k, const std::vector<int>& labels, int clusters) {
  const ClusterStats stats(k, labels, clusters);
  double err = 0.0;
  for (Index i = 0; i < k.rows(); ++i) err += stats.distance(k, i, labels[i]);
  return err;
}

// Moves the point farthest from its center into each empty cluster.
void repairEmptyClusters(const Matrix& k, std::vector<int>& labels, int clusters) {
  for (int j = 0; j < clusters; ++j) {
    const ClusterStats stats(k, labels, clusters);
    if (stats.sizes[static_cast<std::size_t>(j)] > 0) continue;
    Index farthest = -1;
    double best = -1.0;
    for (Index i = 0; i < k.rows(); ++i) {
      if (stats.sizes[static_cast<std::size_t>(labels[i])] < 2) continue;
      const double d = stats.distance(k, i, labels[i]);
      if (d > best) {
        best = d;
        farthest = i;
      }
    }
    if (farthest >= 0) labels[farthest] = j;
  }
}

struct RestartResult {
  std::vector<int> labels;
  double error = 0.0;
  std::vector<double> trace;
};

RestartResult runRestart(const Matrix& k, int clusters, int maxIterations, std::uint64_t seed) {
  const Index n = k.rows();
  std::mt19937_64 rng(seed);
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  for (int j = 0; j < clusters; ++j) {
    const auto pick = static_cast<std::size_t>(j) +
                      uniformIndex(rng, static_cast<std::uint64_t>(n - j));
    std::swap(order[static_cast<std::size_t>(j)], order[pick]);
  }

  RestartResult result;
  result.labels.assign(static_cast<std::size_t>(n), 0);
  for (Index i = 0; i < n; ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (int j = 0; j < clusters; ++j) {
      const Index c = order[static_cast<std::size_t>(j)];
      const double d = k(i, i) - 2.0 * k(i, c) + k(c, c);
      if (d < best) {
        best = d;
        result.labels[i] = j;
      }
    }
  }
  repairEmptyClusters(k, result.labels, clusters);

  for (int iter = 0; iter < maxIterations; ++iter) {
    const ClusterStats stats(k, result.labels, clusters);
    double err = 0.0;
    for (Index i = 0; i < n; ++i) err += stats.distance(k, i, result.labels[i]);
    result.trace.push_back(err);

    bool changed = false;
    std::vector<int> next = result.labels;
    for (Index i = 0; i < n; ++i) {
      int best = next[i];
      double bestDist = stats.distance(k, i, best);
      for (int j = 0; j < clusters; ++j) {
        const double d = stats.distance(k, i, j);
        if (d < bestDist) {
          bestDist = d;
          best = j;
        }
      }
      if (best != next[i]) {
        next[i] = best;
        changed = true;
      }
    }
    if (!changed) break;
    repairEmptyClusters(k, next, clusters);
    result.labels = std::move(next);
  }
  result.error = errorOf(k, result.labels, clusters);
  result.trace.push_back(result.error);
  return result;
}

}  // namespace

double clusteringError(const GramMatrix& k0, const std::vector<int>& labels, int clusters) {
  if (static_cast<Index>(labels.size()) != k0.size())
    throw DimensionMismatch("label count differs from the Gram matrix size");
  return errorOf(k0.values(), labels, clusters);
}

ClusterAssignment kernelKMeans(const GramMatrix& k0, const KMeansOptions& options) {
  const Index n = k0.size();
  if (options.clusters < 1) throw InvalidArgument("cluster count must be >= 1");
  if (options.clusters > n)
    throw InvalidArgument("cluster count " + std::to_string(options.clusters) +
                          " exceeds the number of points " + std::to_string(n));
  if (options.restarts < 1) throw InvalidArgument("k-means needs at least one restart");
  if (options.maxIterations < 1) throw InvalidArgument("k-means needs at least one iteration");

  RestartResult best;
  bool have = false;
  for (int r = 0; r < options.restarts; ++r) {
    RestartResult run = runRestart(k0.values(), options.clusters, options.maxIterations,
                                   deriveSeed(options.seed, SeedStream::kMeansRestart,
                                              static_cast<std::uint64_t>(r)));
    if (!have || run.error < best.error) {
      best = std::move(run);
      have = true;
    }
  }
  ClusterAssignment out;
  out.labels = std::move(best.labels);
  out.clusters = options.clusters;
  out.clusteringError = best.error;
  out.errorTrace = std::move(best.trace);
  return out;
}

LikelihoodModel LikelihoodModel::build(const GramMatrix& k0, const ClusterAssignment& assignment,
                                       std::string clusteringKernelId, double tau) {
  if (static_cast<Index>(assignment.labels.size()) != k0.size())
    throw DimensionMismatch("cluster assignment and clustering kernel differ in size");
  LikelihoodModel model;
  model.tau = tau;
  model.clusteringKernelId = std::move(clusteringKernelId);
  model.trainPoints = k0.size();
  model.memberSets.resize(static_cast<std::size_t>(assignment.clusters));
  for (Index i = 0; i < k0.size(); ++i) {
    const int j = assignment.labels[i];
    if (j < 0 || j >= assignment.clusters) throw InvalidArgument("cluster label out of range");
    model.memberSets[static_cast<std::size_t>(j)].push_back(i);
  }
  model.intraClusterTerm = Vector::Zero(assignment.clusters);
  for (int j = 0; j < assignment.clusters; ++j) {
    const auto& members = model.memberSets[static_cast<std::size_t>(j)];
    if (members.empty()) throw InvalidArgument("cluster " + std::to_string(j) + " is empty");
    double sum = 0.0;
    for (Index a : members)
      for (Index b : members) sum += k0(a, b);
    const auto size = static_cast<double>(members.size());
    model.intraClusterTerm(j) = sum / (size * size);
  }
  model.validate();
  return model;
}

LikelihoodModel LikelihoodModel::global(Index trainPoints, std::string clusteringKernelId) {
  LikelihoodModel model;
  model.trainPoints = trainPoints;
  model.clusteringKernelId = std::move(clusteringKernelId);
  model.memberSets.resize(1);
  model.memberSets[0].resize(static_cast<std::size_t>(trainPoints));
  std::iota(model.memberSets[0].begin(), model.memberSets[0].end(), Index{0});
  model.intraClusterTerm = Vector::Zero(1);
  return model;
}

void LikelihoodModel::validate() const {
  if (memberSets.empty()) throw InvalidArgument("likelihood model needs at least one cluster");
  if (!(tau >= 0.0)) throw InvalidArgument("tau must be nonnegative");
  if (intraClusterTerm.size() != static_cast<Index>(memberSets.size()))
    throw DimensionMismatch("one intra-cluster term per cluster is required");
  std::vector<char> seen(static_cast<std::size_t>(trainPoints), 0);
  Index covered = 0;
  for (const auto& set : memberSets) {
    if (set.empty()) throw InvalidArgument("likelihood model has an empty cluster");
    for (Index i : set) {
      if (i < 0 || i >= trainPoints) throw InvalidArgument("cluster member index out of range");
      if (seen[static_cast<std::size_t>(i)]) throw InvalidArgument("cluster member sets overlap");
      seen[static_cast<std::size_t>(i)] = 1;
      ++covered;
    }
  }
  if (covered != trainPoints) throw InvalidArgument("cluster member sets do not cover all points");
  if ((intraClusterTerm.array() < -1e-10).any())
    throw InvalidArgument("negative intra-cluster term; is the clustering kernel PSD?");
}

Vector featureDistanceSq(const Eigen::Ref<const Vector>& pointRow, double selfValue,
                         const LikelihoodModel& model) {
  if (pointRow.size() != model.trainPoints)
    throw DimensionMismatch("kernel row has " + std::to_string(pointRow.size()) +
                            " entries, model was trained on " + std::to_string(model.trainPoints));
  const int l = model.clusters();
  Vector dist(l);
  for (int j = 0; j < l; ++j) {
    const auto& members = model.memberSets[static_cast<std::size_t>(j)];
    double sum = 0.0;
    for (Index i : members) sum += pointRow(i);
    const double d = selfValue - 2.0 * sum / static_cast<double>(members.size()) +
                     model.intraClusterTerm(j);
    dist(j) = std::max(d, 0.0);
  }
  return dist;
}

Matrix trainDistanceSq(const GramMatrix& k0, const LikelihoodModel& model) {
  Matrix dist(k0.size(), model.clusters());
  for (Index i = 0; i < k0.size(); ++i)
    dist.row(i) = featureDistanceSq(k0.values().col(i), k0(i, i), model).transpose();
  return dist;
}

Matrix crossDistanceSq(const CrossKernelMatrix& cross, const LikelihoodModel& model) {
  Matrix dist(cross.testPoints(), model.clusters());
  for (Index a = 0; a < cross.testPoints(); ++a)
    dist.row(a) =
        featureDistanceSq(cross.values.row(a).transpose(), cross.diagTest(a), model).transpose();
  return dist;
}

LikelihoodMatrix::LikelihoodMatrix(Matrix values) : values_(std::move(values)) {
  if (values_.cols() < 1) throw InvalidArgument("likelihood matrix needs at least one cluster");
  if (!values_.allFinite()) throw InvalidArgument("likelihood matrix has non-finite entries");
  for (Index i = 0; i < values_.rows(); ++i) {
    if ((values_.row(i).array() < 0.0).any() || (values_.row(i).array() > 1.0).any())
      throw InvalidArgument("likelihood entries must lie in [0, 1]");
    if (std::abs(values_.row(i).sum() - 1.0) > 1e-10)
      throw InvalidArgument("likelihood row " + std::to_string(i) + " does not sum to 1");
  }
}

LikelihoodMatrix LikelihoodMatrix::uniform(Index points, int clusters) {
  return LikelihoodMatrix(Matrix::Constant(points, clusters, 1.0 / clusters));
}

LikelihoodMatrix LikelihoodMatrix::hard(const std::vector<int>& labels, int clusters) {
  Matrix m = Matrix::Zero(static_cast<Index>(labels.size()), clusters);
  for (std::size_t i = 0; i < labels.size(); ++i) m(static_cast<Index>(i), labels[i]) = 1.0;
  return LikelihoodMatrix(std::move(m));
}

LikelihoodMatrix LikelihoodMatrix::rows(std::span<const Index> indices) const {
  Matrix m(static_cast<Index>(indices.size()), values_.cols());
  for (std::size_t a = 0; a < indices.size(); ++a) m.row(static_cast<Index>(a)) = values_.row(indices[a]);
  return LikelihoodMatrix(std::move(m));
}

LikelihoodMatrix likelihoods(const Matrix& distSq, double tau) {
  if (!(tau >= 0.0)) throw InvalidArgument("tau must be nonnegative");
  const Index n = distSq.rows();
  const Index l = distSq.cols();
  Matrix c(n, l);
  for (Index i = 0; i < n; ++i) {
    Index nearest = 0;
    const double dmin = distSq.row(i).minCoeff(&nearest);
    if (std::isinf(tau)) {
      c.row(i).setZero();
      c(i, nearest) = 1.0;
      continue;
    }
    double total = 0.0;
    for (Index j = 0; j < l; ++j) {
      c(i, j) = std::exp(-tau * (distSq(i, j) - dmin));
      total += c(i, j);
    }
    c.row(i) /= total;
  }
  return LikelihoodMatrix(std::move(c));
}

double averageEvenness(const Matrix& distSq, double tau) {
  if (!(tau >= 0.0)) throw InvalidArgument("tau must be nonnegative");
  const Index n = distSq.rows();
  const Index l = distSq.cols();
  double total = 0.0;
  for (Index i = 0; i < n; ++i) {
    const double dmin = distSq.row(i).minCoeff();
    for (Index j = 0; j < l; ++j) {
      const double gap = distSq(i, j) - dmin;
      if (std::isinf(tau))
        total += gap == 0.0 ? 1.0 : 0.0;
      else
        total += std::exp(-tau * gap);
    }
  }
  return total / (static_cast<double>(n) * static_cast<double>(l));
}

TauCalibration calibrateTau(const Matrix& distSq, double targetEvenness, double tol) {
  if (distSq.rows() < 1 || distSq.cols() < 1) throw InvalidArgument("empty distance matrix");
  if (!(tol > 0.0)) throw InvalidArgument("tolerance must be positive");
  TauCalibration out;
  if (targetEvenness >= 1.0) {
    out.tau = 0.0;
    out.evenness = averageEvenness(distSq, 0.0);
    out.reachable = targetEvenness - out.evenness <= tol;
    return out;
  }
  const double floorEvenness = averageEvenness(distSq, kHardAssignment);
  if (targetEvenness <= floorEvenness) {
    out.tau = kHardAssignment;
    out.evenness = floorEvenness;
    out.reachable = floorEvenness - targetEvenness <= tol;
    return out;
  }

  double lo = 0.0;
  double hi = 1.0;
  double aeHi = averageEvenness(distSq, hi);
  while (aeHi >= targetEvenness) {
    lo = hi;
    hi *= 2.0;
    ++out.iterations;
    if (!std::isfinite(hi)) {
      out.tau = kHardAssignment;
      out.evenness = floorEvenness;
      out.reachable = false;
      return out;
    }
    aeHi = averageEvenness(distSq, hi);
  }
  if (std::abs(aeHi - targetEvenness) <= tol) {
    out.tau = hi;
    out.evenness = aeHi;
    return out;
  }
  // AE is decreasing: AE(lo) >= target > AE(hi).
  for (int step = 0; step < 200; ++step) {
    ++out.iterations;
    const double mid = 0.5 * (lo + hi);
    const double ae = averageEvenness(distSq, mid);
    out.tau = mid;
    out.evenness = ae;
    if (std::abs(ae - targetEvenness) <= tol) return out;
    if (ae > targetEvenness)
      lo = mid;
    else
      hi = mid;
    if (hi - lo <= std::numeric_limits<double>::epsilon() * hi) break;
  }
  out.reachable = std::abs(out.evenness - targetEvenness) <= tol;
  return out;
}

}  // namespace clmkl

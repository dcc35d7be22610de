#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

namespace oracle {

namespace {

// Solves the KKT system of a quadratic with free set `freeIdx`, fixed values
// in `alpha` elsewhere, gradient g(a) = lin - H a and one equality e'a = 0
// with multiplier b: H_FF a_F + b e_F = lin_F - H_FB a_B, e_F' a_F = -e_B' a_B.
bool solveFace(const Matrix& H, const Vector& lin, const Vector& e, const std::vector<int>& freeIdx,
               Vector& alpha) {
  const int f = static_cast<int>(freeIdx.size());
  const Eigen::Index n = alpha.size();
  std::vector<bool> isFree(static_cast<std::size_t>(n), false);
  for (int i : freeIdx) isFree[static_cast<std::size_t>(i)] = true;
  double fixedSum = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    if (!isFree[static_cast<std::size_t>(i)]) fixedSum += e(i) * alpha(i);
  if (f == 0) return std::abs(fixedSum) <= 1e-10;

  Matrix A = Matrix::Zero(f + 1, f + 1);
  Vector rhs(f + 1);
  for (int r = 0; r < f; ++r) {
    const int i = freeIdx[static_cast<std::size_t>(r)];
    double s = lin(i);
    for (Eigen::Index k = 0; k < n; ++k)
      if (!isFree[static_cast<std::size_t>(k)]) s -= H(i, k) * alpha(k);
    rhs(r) = s;
    for (int c = 0; c < f; ++c) A(r, c) = H(i, freeIdx[static_cast<std::size_t>(c)]);
    A(r, f) = e(i);
    A(f, r) = e(i);
  }
  rhs(f) = -fixedSum;
  const Vector x = A.completeOrthogonalDecomposition().solve(rhs);
  if ((A * x - rhs).norm() > 1e-9 * std::max(1.0, rhs.norm())) return false;
  for (int r = 0; r < f; ++r) alpha(freeIdx[static_cast<std::size_t>(r)]) = x(r);
  return true;
}

}  // namespace

double hingeObjective(const Matrix& K, const Vector& y, const Vector& alpha) {
  const Vector ay = alpha.cwiseProduct(y);
  return alpha.sum() - 0.5 * ay.dot(K * ay);
}

double epsObjective(const Matrix& K, const Vector& y, const Vector& alpha, double eps) {
  return -eps * alpha.cwiseAbs().sum() + y.dot(alpha) - 0.5 * alpha.dot(K * alpha);
}

QpSolution bruteForceHinge(const Matrix& K, const Vector& y, double C) {
  const auto n = static_cast<int>(K.rows());
  if (n > 10) throw std::invalid_argument("brute force is limited to n <= 10");
  const Matrix H = (y * y.transpose()).cwiseProduct(K);
  const Vector ones = Vector::Ones(n);
  QpSolution best;
  best.objective = -std::numeric_limits<double>::infinity();
  long total = 1;
  for (int i = 0; i < n; ++i) total *= 3;
  for (long code = 0; code < total; ++code) {
    Vector alpha = Vector::Zero(n);
    std::vector<int> freeIdx;
    long c = code;
    for (int i = 0; i < n; ++i, c /= 3) {
      const int state = static_cast<int>(c % 3);
      if (state == 1) freeIdx.push_back(i);
      else if (state == 2) alpha(i) = C;
    }
    if (!solveFace(H, ones, y, freeIdx, alpha)) continue;
    bool feasible = true;
    for (int i : freeIdx)
      if (alpha(i) < -1e-12 || alpha(i) > C + 1e-12) feasible = false;
    if (!feasible) continue;
    alpha = alpha.cwiseMax(0.0).cwiseMin(C);
    ++best.feasiblePatterns;
    const double obj = hingeObjective(K, y, alpha);
    if (obj > best.objective) {
      best.objective = obj;
      best.alpha = alpha;
    }
  }
  return best;
}

QpSolution bruteForceEps(const Matrix& K, const Vector& y, double C, double eps) {
  const auto n = static_cast<int>(K.rows());
  if (n > 8) throw std::invalid_argument("brute force is limited to n <= 8");
  const Vector ones = Vector::Ones(n);
  QpSolution best;
  best.objective = -std::numeric_limits<double>::infinity();
  long total = 1;
  for (int i = 0; i < n; ++i) total *= 5;
  for (long code = 0; code < total; ++code) {
    Vector alpha = Vector::Zero(n);
    Vector lin = y;
    std::vector<int> freeIdx;
    std::vector<int> sign(static_cast<std::size_t>(n), 0);
    long c = code;
    for (int i = 0; i < n; ++i, c /= 5) {
      switch (static_cast<int>(c % 5)) {
        case 0: alpha(i) = -C; break;
        case 1: freeIdx.push_back(i); sign[static_cast<std::size_t>(i)] = -1; lin(i) = y(i) + eps; break;
        case 2: break;
        case 3: freeIdx.push_back(i); sign[static_cast<std::size_t>(i)] = 1; lin(i) = y(i) - eps; break;
        case 4: alpha(i) = C; break;
      }
    }
    if (!solveFace(K, lin, ones, freeIdx, alpha)) continue;
    bool feasible = true;
    for (int i : freeIdx) {
      const double a = alpha(i) * sign[static_cast<std::size_t>(i)];
      if (a < -1e-12 || a > C + 1e-12) feasible = false;
    }
    if (!feasible) continue;
    alpha = alpha.cwiseMax(-C).cwiseMin(C);
    ++best.feasiblePatterns;
    const double obj = epsObjective(K, y, alpha, eps);
    if (obj > best.objective) {
      best.objective = obj;
      best.alpha = alpha;
    }
  }
  return best;
}

Vector projectLpBall(const Vector& v, double p) {
  const Vector vp = v.cwiseMax(0.0);
  if (vp.array().pow(p).sum() <= 1.0) return vp;
  // x_m(lambda) solves x + lambda p x^(p-1) = v_m on [0, v_m]; sum x^p
  // decreases in lambda.
  auto coordinate = [&](double vm, double lambda) {
    if (vm <= 0.0) return 0.0;
    if (p == 1.0) return std::max(vm - lambda, 0.0);
    double lo = 0.0;
    double hi = vm;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      if (mid + lambda * p * std::pow(mid, p - 1.0) > vm) hi = mid;
      else lo = mid;
    }
    return 0.5 * (lo + hi);
  };
  auto mass = [&](double lambda) {
    double s = 0.0;
    for (Eigen::Index m = 0; m < vp.size(); ++m) s += std::pow(coordinate(vp(m), lambda), p);
    return s;
  };
  double lo = 0.0;
  double hi = 1.0;
  while (mass(hi) > 1.0) hi *= 2.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (mass(mid) > 1.0) lo = mid;
    else hi = mid;
  }
  Vector out(vp.size());
  for (Eigen::Index m = 0; m < vp.size(); ++m) out(m) = coordinate(vp(m), hi);
  return out;
}

double weightObjective(const Vector& normsSq, const Vector& beta) {
  double s = 0.0;
  for (Eigen::Index m = 0; m < beta.size(); ++m) {
    if (normsSq(m) == 0.0) continue;
    if (beta(m) <= 0.0) return std::numeric_limits<double>::infinity();
    s += normsSq(m) / beta(m);
  }
  return s;
}

Vector projectedGradientBeta(const Vector& normsSq, double p, int maxIterations) {
  const Eigen::Index M = normsSq.size();
  Vector beta = Vector::Constant(M, std::pow(1.0 / static_cast<double>(M), 1.0 / p));
  double obj = weightObjective(normsSq, beta);
  auto gradient = [&](const Vector& b) {
    Vector g(M);
    for (Eigen::Index m = 0; m < M; ++m) g(m) = normsSq(m) == 0.0 ? 0.0 : -normsSq(m) / (b(m) * b(m));
    return g;
  };
  Vector g = gradient(beta);
  double step = 1e-2 / std::max(1e-12, g.cwiseAbs().maxCoeff());
  for (int it = 0; it < maxIterations; ++it) {
    Vector next;
    double nextObj = 0.0;
    double t = step;
    bool moved = false;
    for (int bt = 0; bt < 80; ++bt, t *= 0.5) {
      next = projectLpBall(beta - t * g, p);
      nextObj = weightObjective(normsSq, next);
      if (nextObj <= obj - 1e-4 * g.dot(beta - next) || nextObj < obj) {
        moved = true;
        break;
      }
    }
    if (!moved) break;
    const Vector gNext = gradient(next);
    const Vector s = next - beta;
    const Vector r = gNext - g;
    const double sr = s.dot(r);
    step = sr > 0.0 ? std::clamp(s.squaredNorm() / sr, 1e-14, 1e14) : t * 2.0;
    const double change = obj - nextObj;
    beta = next;
    g = gNext;
    obj = nextObj;
    if (change <= 1e-15 * std::max(1.0, obj)) break;
  }
  return beta;
}

double adjustedRandIndex(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("label vectors differ in length");
  std::map<std::pair<int, int>, double> table;
  std::map<int, double> rowSum;
  std::map<int, double> colSum;
  for (std::size_t i = 0; i < a.size(); ++i) {
    table[{a[i], b[i]}] += 1.0;
    rowSum[a[i]] += 1.0;
    colSum[b[i]] += 1.0;
  }
  auto choose2 = [](double x) { return x * (x - 1.0) / 2.0; };
  double index = 0.0;
  for (const auto& [k, v] : table) index += choose2(v);
  double sa = 0.0;
  double sb = 0.0;
  for (const auto& [k, v] : rowSum) sa += choose2(v);
  for (const auto& [k, v] : colSum) sb += choose2(v);
  const double expected = sa * sb / choose2(static_cast<double>(a.size()));
  const double maximum = 0.5 * (sa + sb);
  if (maximum == expected) return 1.0;
  return (index - expected) / (maximum - expected);
}

double pairwiseAuc(const Vector& scores, const Vector& labels) {
  double wins = 0.0;
  double pairs = 0.0;
  for (Eigen::Index i = 0; i < scores.size(); ++i) {
    if (labels(i) != 1.0) continue;
    for (Eigen::Index j = 0; j < scores.size(); ++j) {
      if (labels(j) != -1.0) continue;
      pairs += 1.0;
      if (scores(i) > scores(j)) wins += 1.0;
      else if (scores(i) == scores(j)) wins += 0.5;
    }
  }
  return wins / pairs;
}

}  // namespace oracle

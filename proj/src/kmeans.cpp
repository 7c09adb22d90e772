#include "gsnav/kmeans.hpp"

#include "gsnav/common.hpp"

#include <limits>
#include <random>

namespace gsnav {

namespace {

double assign(const Eigen::MatrixXd& points, const Eigen::MatrixXd& centroids,
              std::vector<int>& assignment) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    int best_c = 0;
    for (Eigen::Index c = 0; c < centroids.rows(); ++c) {
      const double d = (points.row(i) - centroids.row(c)).squaredNorm();
      if (d < best) {
        best = d;
        best_c = static_cast<int>(c);
      }
    }
    assignment[i] = best_c;
    total += best;
  }
  return total;
}

}  // namespace

KMeansResult kmeans(const Eigen::MatrixXd& points, const KMeansParams& params) {
  const Eigen::Index n = points.rows(), dim = points.cols();
  if (n == 0) throw PreconditionError("kmeans: no points");
  if (params.k < 1) throw ValidationError("kmeans: k must be positive");
  const int k = static_cast<int>(std::min<Eigen::Index>(params.k, n));

  std::mt19937_64 rng(params.seed);
  Eigen::MatrixXd centroids(k, dim);
  std::uniform_int_distribution<Eigen::Index> first(0, n - 1);
  centroids.row(0) = points.row(first(rng));
  std::vector<double> d2(n);
  for (Eigen::Index i = 0; i < n; ++i) d2[i] = (points.row(i) - centroids.row(0)).squaredNorm();
  for (int c = 1; c < k; ++c) {
    double sum = 0.0;
    for (double x : d2) sum += x;
    Eigen::Index chosen = 0;
    if (sum > 0.0) {
      std::discrete_distribution<Eigen::Index> pick(d2.begin(), d2.end());
      chosen = pick(rng);
    } else {
      chosen = first(rng);  // every point already coincides with a centroid
    }
    centroids.row(c) = points.row(chosen);
    for (Eigen::Index i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], (points.row(i) - centroids.row(c)).squaredNorm());
    }
  }

  KMeansResult res;
  res.assignment.assign(n, 0);
  res.objective.push_back(assign(points, centroids, res.assignment));
  for (int it = 0; it < params.max_iters; ++it) {
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, dim);
    std::vector<int> counts(k, 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      sums.row(res.assignment[i]) += points.row(i);
      ++counts[res.assignment[i]];
    }
    for (int c = 0; c < k; ++c) {
      if (counts[c] > 0) centroids.row(c) = sums.row(c) / counts[c];
    }
    std::vector<int> next(n);
    const double obj = assign(points, centroids, next);
    res.objective.push_back(obj);
    const bool changed = next != res.assignment;
    res.assignment = std::move(next);
    if (!changed) break;
  }

  std::vector<int> counts(k, 0), remap(k, -1);
  for (int a : res.assignment) ++counts[a];
  int kept = 0;
  for (int c = 0; c < k; ++c) {
    if (counts[c] > 0) remap[c] = kept++;
  }
  res.centroids.resize(kept, dim);
  for (int c = 0; c < k; ++c) {
    if (remap[c] >= 0) res.centroids.row(remap[c]) = centroids.row(c);
  }
  for (int& a : res.assignment) a = remap[a];
  return res;
}

}  // namespace gsnav

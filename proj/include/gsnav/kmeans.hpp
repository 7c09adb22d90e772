#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <vector>

namespace gsnav {

struct KMeansParams {
  int k = 8;
  int max_iters = 100;
  std::uint64_t seed = 0;
};

struct KMeansResult {
  Eigen::MatrixXd centroids;    // k' x dim, empty clusters removed
  std::vector<int> assignment;  // row -> centroid index
  // Within-cluster sum of squares after the seeding and after every
  // assignment/update round.
  std::vector<double> objective;
};

// Lloyd iterations from a k-means++ seeding. Rows are points. k is reduced to
// the number of points when larger. Assignment ties go to the lower index;
// a cluster that loses all points keeps its centroid until the end, where it
// is dropped.
KMeansResult kmeans(const Eigen::MatrixXd& points, const KMeansParams& params);

}  // namespace gsnav

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "tabctx/encoding.hpp"
#include "tabctx/random.hpp"

namespace tabctx {

struct KMeansParams {
    std::size_t iterations = 100;
    // Rows per mini-batch; the effective size is min(batch_size, n).
    std::size_t batch_size = 1024;
};

struct KMeansResult {
    Matrix centroids;                     // k x d
    std::vector<std::size_t> assignment;  // nearest centroid per point
};

// k-means++ seeding: first centre uniform, then D^2-weighted draws. When every
// remaining point coincides with a chosen centre the draw falls back to the
// lowest-index point not yet chosen, so k distinct points are always used.
Matrix kmeanspp_seed(const Matrix& points, std::size_t k, Rng& rng);

// Mini-batch k-means with per-centre learning rate 1/count.
KMeansResult minibatch_kmeans(const Matrix& points, std::size_t k, const KMeansParams& params,
                              std::uint64_t seed);

// Index of the nearest centroid (lowest index on ties) and its squared distance.
std::pair<std::size_t, double> nearest_centroid(const Matrix& centroids, const double* point);

double squared_distance(const double* a, const double* b, Eigen::Index d);

}  // namespace tabctx

#include "tabctx/kmeans.hpp"

#include <limits>
#include <stdexcept>

namespace tabctx {

double squared_distance(const double* a, const double* b, Eigen::Index d) {
    double s = 0.0;
    for (Eigen::Index j = 0; j < d; ++j) {
        const double t = a[j] - b[j];
        s += t * t;
    }
    return s;
}

std::pair<std::size_t, double> nearest_centroid(const Matrix& centroids, const double* point) {
    const auto d = centroids.cols();
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (Eigen::Index c = 0; c < centroids.rows(); ++c) {
        const double dist = squared_distance(centroids.row(c).data(), point, d);
        if (dist < best_d) {
            best_d = dist;
            best = static_cast<std::size_t>(c);
        }
    }
    return {best, best_d};
}

Matrix kmeanspp_seed(const Matrix& points, std::size_t k, Rng& rng) {
    const auto n = static_cast<std::size_t>(points.rows());
    const auto d = points.cols();
    if (k == 0 || k > n) throw std::invalid_argument("kmeanspp_seed: need 1 <= k <= n");
    Matrix centres(static_cast<Eigen::Index>(k), d);
    std::vector<std::uint8_t> chosen(n, 0);
    std::vector<double> dist2(n, std::numeric_limits<double>::infinity());

    std::size_t pick = static_cast<std::size_t>(rng.below(n));
    for (std::size_t c = 0;; ++c) {
        chosen[pick] = 1;
        centres.row(static_cast<Eigen::Index>(c)) = points.row(static_cast<Eigen::Index>(pick));
        if (c + 1 == k) break;
        double total = 0.0;
        const double* centre = centres.row(static_cast<Eigen::Index>(c)).data();
        for (std::size_t i = 0; i < n; ++i) {
            if (chosen[i]) {
                dist2[i] = 0.0;
                continue;
            }
            const double dd = squared_distance(points.row(static_cast<Eigen::Index>(i)).data(), centre, d);
            if (dd < dist2[i]) dist2[i] = dd;
            total += dist2[i];
        }
        if (total > 0.0) {
            const double target = rng.uniform01() * total;
            double acc = 0.0;
            pick = n;
            std::size_t last_positive = n;
            for (std::size_t i = 0; i < n; ++i) {
                if (dist2[i] <= 0.0) continue;
                last_positive = i;
                acc += dist2[i];
                if (acc > target) {
                    pick = i;
                    break;
                }
            }
            if (pick == n) pick = last_positive;
        } else {
            pick = 0;
            while (chosen[pick]) ++pick;
        }
    }
    return centres;
}

KMeansResult minibatch_kmeans(const Matrix& points, std::size_t k, const KMeansParams& params,
                              std::uint64_t seed) {
    const auto n = static_cast<std::size_t>(points.rows());
    Rng rng(seed);
    KMeansResult out;
    out.centroids = kmeanspp_seed(points, k, rng);
    const std::size_t batch = std::min(params.batch_size == 0 ? n : params.batch_size, n);
    std::vector<double> counts(k, 0.0);
    std::vector<std::size_t> idx(batch), near(batch);
    for (std::size_t it = 0; it < params.iterations; ++it) {
        for (std::size_t b = 0; b < batch; ++b) {
            idx[b] = static_cast<std::size_t>(rng.below(n));
            near[b] = nearest_centroid(out.centroids, points.row(static_cast<Eigen::Index>(idx[b])).data()).first;
        }
        for (std::size_t b = 0; b < batch; ++b) {
            const auto c = static_cast<Eigen::Index>(near[b]);
            counts[near[b]] += 1.0;
            const double eta = 1.0 / counts[near[b]];
            out.centroids.row(c) = (1.0 - eta) * out.centroids.row(c) + eta * points.row(static_cast<Eigen::Index>(idx[b]));
        }
    }
    out.assignment.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        out.assignment[i] = nearest_centroid(out.centroids, points.row(static_cast<Eigen::Index>(i)).data()).first;
    return out;
}

}  // namespace tabctx

#include <doctest.h>

#include <set>

#include <tabctx/kmeans.hpp>
#include <tabctx/random.hpp>

using namespace tabctx;

namespace {

Matrix blobs(std::size_t per_blob, const std::vector<std::pair<double, double>>& centres, std::uint64_t seed) {
    Rng rng(seed);
    Matrix m(static_cast<Eigen::Index>(per_blob * centres.size()), 2);
    Eigen::Index r = 0;
    for (const auto& [cx, cy] : centres)
        for (std::size_t i = 0; i < per_blob; ++i, ++r) {
            m(r, 0) = cx + 0.1 * rng.normal();
            m(r, 1) = cy + 0.1 * rng.normal();
        }
    return m;
}

}  // namespace

TEST_CASE("nearest_centroid breaks ties toward the lower index") {
    Matrix c(2, 1);
    c << -1, 1;
    const double p = 0.0;
    CHECK(nearest_centroid(c, &p).first == 0);
    const double q = 0.75;
    const auto [idx, d2] = nearest_centroid(c, &q);
    CHECK(idx == 1);
    CHECK(d2 == doctest::Approx(0.0625));
}

TEST_CASE("k-means++ seeding picks distinct points, even for duplicates") {
    Matrix dup = Matrix::Zero(5, 2);
    Rng rng(1);
    const auto c = kmeanspp_seed(dup, 3, rng);
    CHECK(c.rows() == 3);

    const auto b = blobs(10, {{0, 0}, {10, 10}, {-10, 10}}, 2);
    Rng rng2(3);
    const auto seeds = kmeanspp_seed(b, 3, rng2);
    std::set<std::size_t> blob_of;
    for (Eigen::Index i = 0; i < 3; ++i) {
        const double x = seeds(i, 0), y = seeds(i, 1);
        blob_of.insert(y < 5 ? 0 : (x > 0 ? 1 : 2));
    }
    CHECK(blob_of.size() == 3);  // D^2 weighting all but guarantees one seed per far blob
}

TEST_CASE("mini-batch k-means recovers separated blobs") {
    const auto b = blobs(10, {{0, 0}, {8, 8}}, 4);
    const auto r = minibatch_kmeans(b, 2, {}, 5);
    REQUIRE(r.assignment.size() == 20);
    for (std::size_t i = 1; i < 10; ++i) CHECK(r.assignment[i] == r.assignment[0]);
    for (std::size_t i = 11; i < 20; ++i) CHECK(r.assignment[i] == r.assignment[10]);
    CHECK(r.assignment[0] != r.assignment[10]);
}

TEST_CASE("mini-batch k-means is deterministic in its seed") {
    const auto b = blobs(50, {{0, 0}, {3, 1}, {1, 4}}, 6);
    const auto r1 = minibatch_kmeans(b, 4, {20, 32}, 11);
    const auto r2 = minibatch_kmeans(b, 4, {20, 32}, 11);
    CHECK(r1.assignment == r2.assignment);
    CHECK(r1.centroids == r2.centroids);
}

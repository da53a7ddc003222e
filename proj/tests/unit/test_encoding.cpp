#include <doctest.h>

#include <cmath>
#include <cstring>

#include <tabctx/encoding.hpp>
#include <tabctx/error.hpp>
#include <tabctx/random.hpp>

using namespace tabctx;

namespace {

std::vector<RowId> all_ids(const Table& t) { return t.row_ids(); }

Table mixed_table(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> a(n), b(n);
    std::vector<std::string> c(n), h(n);
    for (std::size_t i = 0; i < n; ++i) {
        a[i] = rng.normal() * 3 + 1;
        b[i] = static_cast<double>(rng.below(5));
        c[i] = std::string(1, static_cast<char>('A' + rng.below(3)));
        h[i] = "lvl" + std::to_string(rng.below(50));
    }
    auto col_b = Column::numeric("b", b);
    col_b.missing[0] = 1;
    return Table({Column::numeric("a", a), col_b, Column::categorical("c", c), Column::categorical("h", h)});
}

}  // namespace

TEST_CASE("population standardization of [0, 10]") {
    const Table t({Column::numeric("x", {0, 10})});
    const auto e = encode(t, {}, all_ids(t));
    CHECK(e.values(0, 0) == -1.0);
    CHECK(e.values(1, 0) == 1.0);
}

TEST_CASE("one-hot for low-cardinality categoricals") {
    const Table t({Column::categorical("c", {"A", "B", "A"})});
    const auto e = encode(t, {}, all_ids(t));
    REQUIRE(e.n_features() == 2);
    CHECK(e.feature_names == std::vector<std::string>{"c=A", "c=B"});
    CHECK(e.values(0, 0) == 1.0);
    CHECK(e.values(0, 1) == 0.0);
    CHECK(e.values(1, 1) == 1.0);
}

TEST_CASE("constant numeric column encodes to zeros") {
    const Table t({Column::numeric("k", {4, 4, 4})});
    const auto e = encode(t, {}, all_ids(t));
    for (int i = 0; i < 3; ++i) CHECK(e.values(i, 0) == 0.0);
}

TEST_CASE("frequency encoding above the cap") {
    EncodingPolicy p;
    p.one_hot_cap = 2;
    const Table t({Column::categorical("c", {"A", "B", "C", "A"})});
    const auto e = encode(t, p, all_ids(t));
    REQUIRE(e.n_features() == 1);
    CHECK(e.feature_names[0] == "c#freq");
    // Fit-pool relative frequency of the row's category.
    CHECK(e.values(0, 0) == 0.5);
    CHECK(e.values(1, 0) == 0.25);
    CHECK(e.values(3, 0) == 0.5);
}

TEST_CASE("statistics come from the fit pool only; unseen categories map to zeros") {
    const Table t({Column::numeric("x", {0, 2, 100}), Column::categorical("c", {"A", "B", "Z"})},
                  {RowId{1}, RowId{2}, RowId{3}});
    const std::vector<RowId> pool{RowId{1}, RowId{2}};
    const auto e = encode(t, {}, pool);
    CHECK(e.values(0, 0) == -1.0);
    CHECK(e.values(1, 0) == 1.0);
    CHECK(e.values(2, 0) == 99.0);
    CHECK(e.values(2, 1) == 0.0);
    CHECK(e.values(2, 2) == 0.0);
    CHECK_THROWS_AS(encode(t, {}, std::vector<RowId>{}), ConfigError);
}

TEST_CASE("missing numerics carry the sentinel, never NaN") {
    auto col = Column::numeric("x", {1, 3, 0});
    col.missing[2] = 1;
    const Table t({col});
    const auto e = encode(t, {}, all_ids(t));
    // Fit values are {1, 3, -1}: mean 1, std sqrt(8/3).
    CHECK(e.values(2, 0) == doctest::Approx(-2.0 / std::sqrt(8.0 / 3.0)));
    CHECK(e.values.allFinite());
}

TEST_CASE("fit-pool standardized features have mean 0 and std 1") {
    const auto t = mixed_table(500, 3);
    const auto e = encode(t, {}, all_ids(t));
    const auto& enc = *e.encoder;
    for (std::size_t j = 0; j < enc.n_features(); ++j) {
        if (enc.features()[j].kind != FeatureKind::Standardized) continue;
        const auto col = e.values.col(static_cast<Eigen::Index>(j));
        const double mean = col.mean();
        const double sd = std::sqrt((col.array() - mean).square().mean());
        CHECK(std::abs(mean) < 1e-9);
        CHECK(std::abs(sd - 1.0) < 1e-9);
    }
}

TEST_CASE("encoding is deterministic and commutes with row selection") {
    const auto t = mixed_table(300, 9);
    const auto e1 = encode(t, {}, all_ids(t));
    const auto e2 = encode(t, {}, all_ids(t));
    REQUIRE(e1.values.size() == e2.values.size());
    CHECK(std::memcmp(e1.values.data(), e2.values.data(), sizeof(double) * static_cast<std::size_t>(e1.values.size())) == 0);

    Rng rng(4);
    const auto rows = rng.sample_without_replacement(t.n_rows(), 40);
    const auto sliced = e1.take(rows);
    const auto reencoded = apply_encoding(e1.encoder, t.take(rows));
    CHECK(sliced.row_ids == reencoded.row_ids);
    CHECK(std::memcmp(sliced.values.data(), reencoded.values.data(),
                      sizeof(double) * static_cast<std::size_t>(sliced.values.size())) == 0);
}

TEST_CASE("select_features keeps names aligned") {
    const auto t = mixed_table(50, 2);
    const auto e = encode(t, {}, all_ids(t));
    const std::vector<std::size_t> keep{2, 0};
    const auto s = e.select_features(keep);
    CHECK(s.feature_names == std::vector<std::string>{e.feature_names[2], e.feature_names[0]});
    CHECK(s.values(7, 0) == e.values(7, 2));
}

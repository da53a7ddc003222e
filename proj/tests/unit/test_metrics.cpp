#include <doctest.h>

#include <cmath>

#include <boost/multiprecision/cpp_int.hpp>

#include <tabctx/error.hpp>
#include <tabctx/metrics.hpp>
#include <tabctx/random.hpp>

using namespace tabctx;

namespace {

double brute_auc(const std::vector<double>& s, const std::vector<int>& y) {
    double num = 0;
    long pairs = 0;
    for (std::size_t i = 0; i < s.size(); ++i)
        for (std::size_t j = 0; j < s.size(); ++j)
            if (y[i] == 1 && y[j] == 0) {
                ++pairs;
                num += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
            }
    return num / static_cast<double>(pairs);
}

// MCC from exact integer arithmetic, rounded once at the end.
double exact_mcc(const ConfusionCounts& c) {
    using boost::multiprecision::cpp_int;
    const cpp_int tp = c.tp, fp = c.fp, fn = c.fn, tn = c.tn;
    const cpp_int num = tp * tn - fp * fn;
    const cpp_int den2 = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn);
    if (den2 == 0) return 0.0;
    // num / sqrt(den2) = sign(num) * sqrt(num^2 / den2); scale for precision.
    const cpp_int scale = cpp_int(1) << 200;
    const cpp_int q = (num * num * scale) / den2;
    const double r = std::sqrt(static_cast<double>(q) / static_cast<double>(scale));
    return num < 0 ? -r : r;
}

}  // namespace

TEST_CASE("roc_auc examples") {
    CHECK(roc_auc(std::vector<double>{0.1, 0.4, 0.35, 0.8}, std::vector<int>{0, 0, 1, 1}) == 0.75);
    CHECK(roc_auc(std::vector<double>{0.3, 0.3, 0.3}, std::vector<int>{0, 1, 0}) == 0.5);
    CHECK(roc_auc(std::vector<double>{0.1, 0.2, 0.8, 0.9}, std::vector<int>{0, 0, 1, 1}) == 1.0);
    CHECK_THROWS_AS(roc_auc(std::vector<double>{0.1, 0.2}, std::vector<int>{1, 1}), UndefinedMetricError);
}

TEST_CASE("roc_auc equals the all-pairs oracle, ties included") {
    Rng rng(2024);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t n = 2 + rng.below(120);
        std::vector<double> s(n);
        std::vector<int> y(n);
        for (std::size_t i = 0; i < n; ++i) {
            s[i] = static_cast<double>(rng.below(10)) / 10.0;
            y[i] = static_cast<int>(rng.below(2));
        }
        y[0] = 0;
        y[1] = 1;
        REQUIRE(std::abs(roc_auc(s, y) - brute_auc(s, y)) < 1e-12);
    }
}

TEST_CASE("roc_auc complement symmetry and monotone invariance") {
    Rng rng(5);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 10 + rng.below(50);
        std::vector<double> s(n), neg(n), mono(n);
        std::vector<int> y(n);
        for (std::size_t i = 0; i < n; ++i) {
            s[i] = static_cast<double>(rng.below(8));
            neg[i] = -s[i];
            mono[i] = std::exp(s[i] / 3.0) + 7.0;
            y[i] = static_cast<int>(rng.below(2));
        }
        y[0] = 0;
        y[1] = 1;
        CHECK(std::abs(roc_auc(s, y) + roc_auc(neg, y) - 1.0) < 1e-12);
        CHECK(roc_auc(s, y) == roc_auc(mono, y));
    }
}

TEST_CASE("confusion uses a strict threshold") {
    const std::vector<int> y{1, 1, 0, 0};
    auto c = confusion(std::vector<double>{0.3, 0.3, 0.3, 0.3}, y);
    CHECK(c.tp == 0);
    CHECK(c.fn == 2);
    c = confusion(std::vector<double>{0.5, 0.5, 0.5, 0.5}, y);
    CHECK(c.tp == 0);
    CHECK(c.fp == 0);
    c = confusion(std::vector<double>{1, 1, 0, 0}, y);
    CHECK(c == ConfusionCounts{2, 0, 0, 2});
}

TEST_CASE("mcc examples") {
    CHECK(mcc({0, 0, 8, 92}) == 0.0);
    CHECK(mcc({5, 0, 0, 7}) == 1.0);
    CHECK(mcc({3, 1, 2, 4}) == doctest::Approx(10.0 / std::sqrt(600.0)).epsilon(1e-15));
}

TEST_CASE("mcc matches the exact-rational oracle, including huge counts") {
    Rng rng(31);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::uint64_t scale = trial % 2 ? 1000 : 4000000000ULL;
        ConfusionCounts c{rng.below(scale), rng.below(scale), rng.below(scale), rng.below(scale)};
        REQUIRE(std::abs(mcc(c) - exact_mcc(c)) < 1e-12);
    }
}

TEST_CASE("mcc is symmetric under a simultaneous class swap") {
    Rng rng(8);
    for (int trial = 0; trial < 200; ++trial) {
        ConfusionCounts c{rng.below(50), rng.below(50), rng.below(50), rng.below(50)};
        const ConfusionCounts swapped{c.tn, c.fn, c.fp, c.tp};
        CHECK(std::abs(mcc(c) - mcc(swapped)) < 1e-15);
    }
}

TEST_CASE("bundle: all-majority prediction on an 8% minority") {
    std::vector<int> y(100, 0);
    for (int i = 0; i < 8; ++i) y[i] = 1;
    std::vector<double> s(100, 0.1);
    s[0] = 0.2;  // keep the AUC defined and non-trivial
    const auto b = bundle(s, y);
    CHECK(b.accuracy == doctest::Approx(0.92));
    CHECK(b.default_recall == 0.0);
    CHECK(b.default_precision == 0.0);
    CHECK(b.default_f1 == 0.0);
    CHECK(b.balanced_accuracy == 0.5);
    CHECK(b.mcc == 0.0);
}

TEST_CASE("bundle: perfect predictor") {
    const auto b = bundle(std::vector<double>{0.9, 0.8, 0.1, 0.2}, std::vector<int>{1, 1, 0, 0});
    CHECK(b.auc == 1.0);
    CHECK(b.accuracy == 1.0);
    CHECK(b.default_recall == 1.0);
    CHECK(b.default_precision == 1.0);
    CHECK(b.default_f1 == 1.0);
    CHECK(b.balanced_accuracy == 1.0);
    CHECK(b.mcc == 1.0);
}

TEST_CASE("bundle consistency and ranges on random inputs") {
    Rng rng(17);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 2 + rng.below(200);
        std::vector<double> s(n);
        std::vector<int> y(n);
        for (std::size_t i = 0; i < n; ++i) {
            s[i] = rng.uniform01();
            y[i] = static_cast<int>(rng.below(2));
        }
        y[0] = 0;
        y[1] = 1;
        const auto b = bundle(s, y);
        const auto& c = b.counts;
        REQUIRE(c.total() == n);
        CHECK(std::abs(b.accuracy - static_cast<double>(c.tp + c.tn) / static_cast<double>(n)) <= 1e-15);
        for (double v : {b.auc, b.accuracy, b.default_recall, b.default_precision, b.default_f1, b.balanced_accuracy}) {
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
        }
        CHECK(b.mcc >= -1.0);
        CHECK(b.mcc <= 1.0);
    }
}

TEST_CASE("random scores on balanced labels give AUC near 0.5") {
    Rng rng(99);
    const int trials = 100, n = 200;
    double sum = 0;
    for (int t = 0; t < trials; ++t) {
        std::vector<double> s(n);
        std::vector<int> y(n);
        for (int i = 0; i < n; ++i) {
            s[i] = rng.uniform01();
            y[i] = i % 2;
        }
        sum += roc_auc(s, y);
    }
    // Null sd of one AUC with 100/100 classes: sqrt((n1+n0+1)/(12 n1 n0)).
    const double sd = std::sqrt(201.0 / (12.0 * 100 * 100)) / std::sqrt(trials);
    CHECK(std::abs(sum / trials - 0.5) < 5 * sd);
}

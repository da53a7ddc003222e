#include <doctest.h>

#include <algorithm>
#include <set>
#include <sstream>

#include <tabctx/csv.hpp>
#include <tabctx/error.hpp>
#include <tabctx/ingest.hpp>
#include <tabctx/random.hpp>

#include "helpers.hpp"

using namespace tabctx;

namespace {

Column with_missing(Column c, std::initializer_list<std::size_t> rows) {
    for (auto r : rows) c.missing[r] = 1;
    return c;
}

Table dated(const std::vector<std::string>& dates, const std::vector<int>& y) {
    std::ostringstream csv;
    csv << "d,y\n";
    for (std::size_t i = 0; i < dates.size(); ++i) csv << dates[i] << ',' << y[i] << '\n';
    CsvOptions opt;
    opt.label = "y";
    opt.schema.date_format = "%Y-%m-%d";
    std::istringstream in(csv.str());
    return read_csv(in, opt);
}

}  // namespace

TEST_CASE("numeric sentinel imputation") {
    const Table t({with_missing(Column::numeric("a", {5, 0}), {1})});
    const auto u = impute(t, {{"a", NumericSentinel{-1}}});
    CHECK(u.column("a").numbers == std::vector<double>{5, -1});
    CHECK_FALSE(u.column("a").any_missing());
}

TEST_CASE("category token imputation") {
    const Table t({with_missing(Column::categorical("c", {""}), {0})});
    const auto u = impute(t, {{"c", CategoryToken{"MISSING"}}});
    CHECK(u.column("c").strings == std::vector<std::string>{"MISSING"});
    CHECK_FALSE(u.column("c").is_missing(0));
}

TEST_CASE("missing indicator reflects the original missingness") {
    const Table t({with_missing(Column::numeric("a", {5, 0}), {1})});
    // Indicator declared after the sentinel rule still sees the missing entry.
    const auto u = impute(t, {{"a", NumericSentinel{-1}}, {"a", AddMissingIndicator{}}});
    CHECK(u.column("a_missing").numbers == std::vector<double>{0, 1});
    CHECK(u.column("a").numbers == std::vector<double>{5, -1});
}

TEST_CASE("glob rules and configuration errors") {
    const Table t({with_missing(Column::numeric("ext_1", {1, 0}), {1}),
                   with_missing(Column::numeric("ext_2", {0, 2}), {0}), Column::categorical("name", {"a", "b"})});
    const auto u = impute(t, {{"ext_*", NumericSentinel{-1}}});
    CHECK(u.column("ext_1").numbers[1] == -1);
    CHECK(u.column("ext_2").numbers[0] == -1);

    CHECK_THROWS_AS(impute(t, {{"nope", NumericSentinel{}}}), ConfigError);
    CHECK_THROWS_AS(impute(t, {{"name", NumericSentinel{}}}), ConfigError);
    CHECK_THROWS_AS(impute(t, {{"ext_1", NumericSentinel{}}, {"ext_*", NumericSentinel{-2}}}), ConfigError);
}

TEST_CASE("impute is idempotent") {
    Rng rng(12);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> a(20);
        std::vector<std::string> c(20);
        Column ca = Column::numeric("a", a), cc = Column::categorical("c", c);
        for (int i = 0; i < 20; ++i) {
            ca.numbers[i] = rng.normal();
            cc.strings[i] = rng.below(2) ? "x" : "y";
            if (rng.below(4) == 0) ca.missing[i] = 1;
            if (rng.below(4) == 0) cc.missing[i] = 1;
        }
        const Table t({ca, cc});
        const std::vector<ImputationRule> rules{{"a", NumericSentinel{-1}},
                                                {"*", AddMissingIndicator{}},
                                                {"c", CategoryToken{"MISSING"}}};
        const auto once = impute(t, rules);
        const auto twice = impute(once, rules);
        REQUIRE(once.n_columns() == twice.n_columns());
        for (std::size_t j = 0; j < once.n_columns(); ++j) {
            CHECK(once.columns()[j].name == twice.columns()[j].name);
            CHECK(once.columns()[j].numbers == twice.columns()[j].numbers);
            CHECK(once.columns()[j].strings == twice.columns()[j].strings);
            CHECK(once.columns()[j].missing == twice.columns()[j].missing);
        }
    }
}

TEST_CASE("ratio, difference and flag recipes") {
    const Table t({Column::numeric("credit", {100000, 5, 7}), Column::numeric("income", {50000, 0, -1}),
                   with_missing(Column::numeric("a", {10, 1, 0}), {2}), Column::numeric("b", {3, 1, 1}),
                   Column::categorical("cat", {"x", "y", "z"})});
    const auto u = engineer(t, {{"cti", Ratio{"credit", "income"}},
                                {"diff", Difference{"a", "b"}},
                                {"big", Flag{"credit", CompareOp::Greater, 6}}});
    CHECK(u.column("cti").numbers == std::vector<double>{2.0, -1.0, -1.0});
    CHECK(u.column("diff").numbers[0] == 7);
    CHECK(u.column("diff").numbers[2] == -1);  // missing operand
    CHECK(u.column("big").numbers == std::vector<double>{1, 0, 1});
    CHECK(u.column("credit").numbers == t.column("credit").numbers);

    CHECK_THROWS_AS(engineer(t, {{"credit", Ratio{"a", "b"}}}), ConfigError);
    CHECK_THROWS_AS(engineer(t, {{"r", Ratio{"cat", "b"}}}), ConfigError);
    CHECK_THROWS_AS(engineer(t, {{"r", Ratio{"zzz", "b"}}}), ConfigError);
}

TEST_CASE("temporal split at the cutoff") {
    const auto t = dated({"2019-06-01", "2019-07-01"}, {0, 1});
    const auto s = split(t, Temporal{"d", "2019-06-30"});
    CHECK(s.train.row_ids() == std::vector<RowId>{RowId{0}});
    CHECK(s.test.row_ids() == std::vector<RowId>{RowId{1}});
    // A row exactly at the cutoff belongs to train.
    const auto u = split(dated({"2019-06-30", "2019-07-01"}, {0, 1}), Temporal{"d", "2019-06-30"});
    CHECK(u.train.n_rows() == 1);
    CHECK_THROWS_AS(split(dated({"2019-06-01", "2019-06-02"}, {0, 1}), Temporal{"d", "2019-06-30"}), DataError);
}

TEST_CASE("temporal leakage guard fires on a post-cutoff training row") {
    const auto all = dated({"2019-06-01", "2019-07-01", "2019-08-01"}, {0, 1, 0});
    const std::vector<std::size_t> tr{0, 1}, te{2};
    CHECK_THROWS_AS(check_temporal_split(all.take(tr), all.take(te), Temporal{"d", "2019-06-30"}), LeakageError);
    const std::vector<std::size_t> tr2{0}, te2{1, 2};
    CHECK_NOTHROW(check_temporal_split(all.take(tr2), all.take(te2), Temporal{"d", "2019-06-30"}));
}

TEST_CASE("stratified split uses exact per-class quotas") {
    std::vector<int> y(100, 0);
    std::fill(y.begin() + 80, y.end(), 1);
    const auto t = testutil::labeled(std::vector<double>(100, 1.0), y);
    const auto s = split(t, RandomStratified{0.25, 7});
    CHECK(class_counts(s.test) == ClassCounts{20, 5});
    CHECK(class_counts(s.train) == ClassCounts{60, 15});
    const auto again = split(t, RandomStratified{0.25, 7});
    CHECK(again.test.row_ids() == s.test.row_ids());
    const auto other = split(t, RandomStratified{0.25, 8});
    CHECK(other.test.row_ids() != s.test.row_ids());
}

TEST_CASE("splits partition the rows (property)") {
    Rng rng(77);
    for (int trial = 0; trial < 500; ++trial) {
        const std::size_t n = 4 + rng.below(80);
        std::vector<int> y(n);
        for (auto& v : y) v = static_cast<int>(rng.below(2));
        y[0] = 0;
        y[1] = 1;
        const auto t = testutil::labeled(std::vector<double>(n, 0.0), y);
        const double f = 0.1 + 0.8 * rng.uniform01();
        SplitResult s;
        try {
            s = split(t, RandomStratified{f, rng.next_u64()});
        } catch (const DataError&) {
            continue;  // degenerate partition for tiny n
        }
        std::set<std::uint64_t> tr, te;
        for (auto id : s.train.row_ids()) tr.insert(id.value);
        for (auto id : s.test.row_ids()) te.insert(id.value);
        for (auto v : te) REQUIRE_FALSE(tr.count(v));
        REQUIRE(tr.size() + te.size() == n);
        // Order preserved within each side.
        REQUIRE(std::is_sorted(s.train.row_ids().begin(), s.train.row_ids().end()));
    }
}

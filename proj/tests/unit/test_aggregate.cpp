#include <doctest.h>

#include <cmath>

#include <tabctx/aggregate.hpp>
#include <tabctx/error.hpp>
#include <tabctx/random.hpp>

using namespace tabctx;

namespace {

EvalRecord rec(const std::string& strategy, std::size_t size, std::size_t repeat, std::optional<double> auc,
               const std::string& dataset = "d1", const std::string& predictor = "knn") {
    EvalRecord r;
    r.plan_hash = "0123456789abcdef";
    r.dataset = dataset;
    r.predictor = predictor;
    r.predictor_version = predictor + "/1";
    r.strategy = strategy;
    r.strategy_params = strategy;
    r.context_size = size;
    r.repeat = repeat;
    if (auc) {
        MetricBundle m;
        m.auc = *auc;
        m.mcc = *auc - 0.5;
        r.metrics = m;
    } else {
        r.status = CellStatus::Failed;
        r.reason = "backend died";
    }
    return r;
}

}  // namespace

TEST_CASE("record JSON round trip") {
    auto r = rec("balanced", 1024, 2, 0.75);
    r.metrics->counts = {1, 2, 3, 4};
    r.warnings = {"w"};
    r.seed = 0xFFFFFFFFFFFFFFFFULL;
    const auto back = record_from_json(nlohmann::json::parse(to_jsonl(r)));
    CHECK(to_jsonl(back) == to_jsonl(r));
    CHECK(back.seed == r.seed);
    CHECK(back.metrics->counts == r.metrics->counts);

    const auto failed = rec("balanced", 1024, 2, std::nullopt);
    const auto j = to_json(failed);
    CHECK(j["metrics"].is_null());
    CHECK(record_from_json(nlohmann::json::parse(j.dump())).status == CellStatus::Failed);
}

TEST_CASE("win counts on a hand-built grid") {
    std::vector<EvalRecord> rs = {
        rec("uniform", 1024, 0, 0.80), rec("balanced", 1024, 0, 0.85), rec("hybrid", 1024, 0, 0.85),
        rec("uniform", 1024, 1, 0.90), rec("balanced", 1024, 1, 0.70), rec("hybrid", 1024, 1, 0.80),
        rec("uniform", 2048, 0, 0.50), rec("balanced", 2048, 0, std::nullopt), rec("hybrid", 2048, 0, 0.60),
    };
    const auto w = win_rates(rs);
    REQUIRE(w.strategies == std::vector<std::string>{"uniform", "balanced", "hybrid"});
    // uniform vs balanced: key0 loss, key1 win; key2 not shared.
    CHECK(w.wins[0][1] == 1);
    CHECK(w.wins[1][0] == 1);
    CHECK(w.shared[0][1] == 2);
    // balanced vs hybrid: key0 tie, key1 loss.
    CHECK(w.ties[1][2] == 1);
    CHECK(w.wins[2][1] == 1);
    CHECK(w.complete_keys == 2);
    // key0: balanced and hybrid share first place; key1: uniform.
    CHECK(w.first_place[0] == doctest::Approx(0.5));
    CHECK(w.first_place[1] == doctest::Approx(0.25));
    CHECK(w.first_place[2] == doctest::Approx(0.25));
    CHECK(w.coverage.failed == 1);
    CHECK(w.win_rate(0, 1) == doctest::Approx(0.5));
}

TEST_CASE("wins + losses + ties equals shared keys (random stores)") {
    Rng rng(17);
    const std::vector<std::string> names = {"uniform", "stratified", "balanced", "smote"};
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<EvalRecord> rs;
        for (std::size_t rep = 0; rep < 6; ++rep)
            for (const auto& s : names) {
                if (rng.below(5) == 0) continue;  // absent cell
                const bool fail = rng.below(6) == 0;
                // Coarse grid so that exact ties occur.
                rs.push_back(rec(s, 1024, rep, fail ? std::nullopt : std::optional<double>(0.5 + 0.05 * static_cast<double>(rng.below(4)))));
            }
        const auto w = win_rates(rs);
        double first = 0;
        for (std::size_t i = 0; i < w.strategies.size(); ++i) {
            first += w.first_place[i];
            for (std::size_t j = 0; j < w.strategies.size(); ++j)
                if (i != j) CHECK(w.wins[i][j] + w.wins[j][i] + w.ties[i][j] == w.shared[i][j]);
        }
        if (w.complete_keys) CHECK(first == doctest::Approx(1.0));
    }
}

TEST_CASE("scaling gain example and missing endpoint") {
    std::vector<EvalRecord> rs = {rec("hybrid", 1024, 0, 0.812), rec("hybrid", 1024, 1, 0.812),
                                  rec("hybrid", 50000, 0, 0.846), rec("hybrid", 50000, 1, 0.846),
                                  rec("balanced", 1024, 0, 0.8)};
    const auto g = scaling_gain(rs, "d1", "knn", "hybrid");
    REQUIRE(g);
    CHECK(*g == doctest::Approx(0.034).epsilon(1e-9));
    CHECK_FALSE(scaling_gain(rs, "d1", "knn", "balanced"));
    const auto t = build_report(rs, ReportKind::Scaling);
    CHECK(t.columns[3] == "auc_1024");
    CHECK(t.to_csv().find("hybrid,d1,knn,0.8120,0.8460,0.0340") != std::string::npos);
    CHECK(t.to_text().find("missing endpoint") != std::string::npos);
}

TEST_CASE("strategy means: flat versus seeds-first") {
    // Unequal repeat counts make the two orders differ.
    std::vector<EvalRecord> rs = {rec("uniform", 1024, 0, 0.6), rec("uniform", 1024, 1, 0.8),
                                  rec("uniform", 2048, 0, 0.9)};
    const auto flat = strategy_means(rs, MeanOrder::Flat);
    const auto seeds = strategy_means(rs, MeanOrder::SeedsFirst);
    CHECK(*flat.overall[0] == doctest::Approx((0.6 + 0.8 + 0.9) / 3));
    CHECK(*seeds.overall[0] == doctest::Approx((0.7 + 0.9) / 2));
}

TEST_CASE("failed records are reported, never imputed") {
    std::vector<EvalRecord> rs = {rec("uniform", 1024, 0, 0.7), rec("balanced", 1024, 0, std::nullopt)};
    const auto m = strategy_means(rs);
    REQUIRE(m.strategies.size() == 2);
    CHECK_FALSE(m.overall[1].has_value());
    CHECK(m.coverage.failed == 1);
    const auto t = build_report(rs, ReportKind::StrategyMeans);
    const auto text = t.to_text();
    CHECK(text.find("NA") != std::string::npos);
    CHECK(text.find("1 failed") != std::string::npos);
}

TEST_CASE("empty slices raise") {
    std::vector<EvalRecord> rs = {rec("uniform", 1024, 0, 0.7)};
    ReportOptions o;
    o.dataset = "nope";
    CHECK_THROWS_AS(build_report(rs, ReportKind::WinRates, o), EmptyReportError);
    std::vector<EvalRecord> none;
    CHECK_THROWS_AS(build_report(none, ReportKind::ModelTable), EmptyReportError);
    CHECK(report_kind_from_string("model-table") == ReportKind::ModelTable);
    CHECK_THROWS_AS(report_kind_from_string("bogus"), ConfigError);
}

TEST_CASE("model table averages per predictor") {
    std::vector<EvalRecord> rs = {rec("uniform", 1024, 0, 0.7, "d1", "knn"), rec("uniform", 1024, 1, 0.9, "d1", "knn"),
                                  rec("uniform", 1024, 0, 0.6, "d1", "logistic")};
    const auto rows = model_table(rs);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].predictor == "knn");
    CHECK(rows[0].auc == doctest::Approx(0.8));
    CHECK(rows[0].cells == 2);
}

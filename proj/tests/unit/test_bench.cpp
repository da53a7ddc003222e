#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <tabctx/bench.hpp>
#include <tabctx/error.hpp>

using namespace tabctx;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("tabctx_bench_" + std::to_string(::getpid()));
    fs::create_directories(dir);
    const auto p = dir / name;
    fs::remove(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream o;
    o << in.rdbuf();
    return o.str();
}

// Store contents with the wall-clock field removed.
std::string normalized(const fs::path& p) {
    std::istringstream in(slurp(p));
    std::string line, out;
    while (std::getline(in, line)) {
        auto j = nlohmann::ordered_json::parse(line);
        j.erase("duration_ms");
        out += j.dump() + "\n";
    }
    return out;
}

ExperimentPlan small_plan(const fs::path& store) {
    ExperimentPlan plan;
    DatasetConfig d;
    d.name = "synth";
    d.synthetic = SynthParams{600, 0.1, 2.0, 2, 5};
    plan.datasets.push_back(d);
    PredictorConfig knn;
    knn.name = knn.kind = "knn";
    plan.predictors.push_back(knn);
    plan.strategies = {strategy::Uniform{}, strategy::Balanced{}};
    plan.budgets = {32, 64};
    plan.repeats = 2;
    plan.master_seed = 42;
    plan.store = store;
    return plan;
}

}  // namespace

TEST_CASE("derived seeds are deterministic and distinct across cells") {
    const auto a = derive_seed(1, "d", "knn", "uniform", 1024, 0);
    CHECK(a == derive_seed(1, "d", "knn", "uniform", 1024, 0));
    std::set<std::uint64_t> seen;
    for (std::size_t r = 0; r < 50; ++r)
        for (std::size_t m : {16, 1024})
            for (const char* s : {"uniform", "balanced"}) seen.insert(derive_seed(1, "d", "knn", s, m, r));
    CHECK(seen.size() == 200);
    CHECK(derive_seed(2, "d", "knn", "uniform", 1024, 0) != a);
    // Field boundaries matter.
    CHECK(derive_seed(1, "ab", "c", "uniform", 1, 0) != derive_seed(1, "a", "bc", "uniform", 1, 0));
}

TEST_CASE("synthetic data has the exact minority count") {
    const auto t = synth_dataset({1000, 0.08, 2.0, 3, 1});
    const auto c = class_counts(t);
    CHECK(c.n1 == 80);
    CHECK(c.n0 == 920);
    CHECK(t.n_columns() == 6);
    CHECK(*t.label_name() == kSynthLabel);
    CHECK_THROWS_AS(synth_dataset({5, 0.1, 1, 0, 0}), ConfigError);
    CHECK_THROWS_AS(synth_dataset({100, 0.7, 1, 0, 0}), ConfigError);
}

TEST_CASE("cells enumerate in canonical order") {
    const auto plan = small_plan(scratch("unused.jsonl"));
    const auto cells = enumerate_cells(plan);
    REQUIRE(cells.size() == 8);
    CHECK(cells[0].strategy == 0);
    CHECK(cells[1].repeat == 1);
    CHECK(cells[2].budget == 1);
    CHECK(cells[4].strategy == 1);
    for (std::size_t i = 0; i < cells.size(); ++i) CHECK(cells[i].index == i);
}

TEST_CASE("run, rerun is a no-op, and the store is complete") {
    const auto store = scratch("run.jsonl");
    const auto plan = small_plan(store);
    const auto s = run_plan(plan);
    CHECK(s.executed == 8);
    CHECK(s.failed == 0);
    const auto contents = read_store(store);
    REQUIRE(contents.records.size() == 8);
    for (const auto& r : contents.records) {
        CHECK(r.ok());
        CHECK(r.plan_hash == plan.hash());
        CHECK(r.achieved_n0 + r.achieved_n1 == r.context_size);
    }
    CHECK_THROWS_AS(run_plan(plan), ConfigError);  // existing store without resume
    RunOptions resume;
    resume.resume = true;
    const auto before = slurp(store);
    const auto again = run_plan(plan, resume);
    CHECK(again.executed == 0);
    CHECK(again.already_done == 8);
    CHECK(slurp(store) == before);
}

TEST_CASE("serial, parallel, shuffled and resumed runs agree") {
    const auto serial = scratch("serial.jsonl");
    run_plan(small_plan(serial));

    const auto parallel = scratch("parallel.jsonl");
    RunOptions par;
    par.workers = 4;
    par.shuffle_execution = 99;
    run_plan(small_plan(parallel), par);
    CHECK(normalized(parallel) == normalized(serial));

    const auto resumed = scratch("resumed.jsonl");
    RunOptions stop;
    stop.stop_after = 3;
    const auto first = run_plan(small_plan(resumed), stop);
    CHECK(first.interrupted);
    CHECK(read_store(resumed).records.size() == 3);
    // Simulate a torn write at the kill point.
    {
        std::ofstream out(resumed, std::ios::app | std::ios::binary);
        out << "{\"plan_hash\":\"trunc";
    }
    CHECK(read_store(resumed).torn_tail);
    RunOptions resume;
    resume.resume = true;
    resume.workers = 3;
    const auto second = run_plan(small_plan(resumed), resume);
    CHECK(second.already_done == 3);
    CHECK(second.executed == 5);
    CHECK(normalized(resumed) == normalized(serial));
}

TEST_CASE("a different plan cannot resume a store") {
    const auto store = scratch("mismatch.jsonl");
    run_plan(small_plan(store));
    auto other = small_plan(store);
    other.master_seed = 7;
    RunOptions resume;
    resume.resume = true;
    CHECK_THROWS_AS(run_plan(other, resume), ConfigError);
}

TEST_CASE("infeasible and failing cells are recorded, not fatal") {
    const auto store = scratch("failures.jsonl");
    auto plan = small_plan(store);
    plan.budgets = {32, 5000};  // larger than the training pool: uniform cannot supply it
    PredictorConfig dead;
    dead.name = "dead";
    dead.kind = "external";
    dead.external.name = "dead";
    dead.external.command = std::string(TABCTX_PYTHON) + " " + TABCTX_FIXTURE_DIR + "/echo_backend.py die";
    plan.predictors.push_back(dead);
    const auto s = run_plan(plan);
    CHECK(s.executed == 16);
    const auto rs = read_store(store).records;
    std::size_t skipped = 0, failed = 0;
    for (const auto& r : rs) {
        if (r.context_size == 5000 && r.strategy == "uniform") {
            CHECK(r.status == CellStatus::Skipped);
            ++skipped;
        } else if (r.predictor == "dead") {
            CHECK(r.status == CellStatus::Failed);
            CHECK_FALSE(r.reason.empty());
            ++failed;
        } else {
            CHECK(r.ok());
        }
    }
    CHECK(skipped == 4);
    CHECK(failed == 6);
    CHECK(s.failed == 6);
    CHECK(s.skipped == 4);
}

TEST_CASE("a missing dataset aborts before any cell runs") {
    const auto store = scratch("missing.jsonl");
    auto plan = small_plan(store);
    DatasetConfig d;
    d.name = "absent";
    d.csv.label = "y";
    d.train = "/nonexistent/train.csv";
    d.test = "/nonexistent/test.csv";
    plan.datasets.push_back(d);
    CHECK_THROWS_AS(run_plan(plan), ConfigError);
    CHECK_FALSE(fs::exists(store));
}

TEST_CASE("overlapping train and test ids abort") {
    const auto dir = scratch("leak").parent_path();
    const auto csv = dir / "leak.csv";
    {
        std::ofstream out(csv);
        out << "id,x,y\n1,0.1,0\n2,0.2,1\n3,0.3,0\n4,0.4,1\n";
    }
    DatasetConfig d;
    d.name = "leak";
    d.csv.label = "y";
    d.csv.id_column = "id";
    d.train = csv;
    d.test = csv;
    CHECK_THROWS_AS(prepare_dataset(d, {}), LeakageError);
}

TEST_CASE("plan configuration parsing") {
    const auto doc = nlohmann::json::parse(R"({
        "encoding": {"one_hot_cap": 5},
        "plan": {
            "seed": 3, "repeats": 2, "budgets": [16, 32],
            "strategies": ["uniform", {"name": "hybrid", "rho": 0.25}, {"name": "oversample_plus", "boost": 3}],
            "predictors": ["knn", {"kind": "logistic", "name": "lr", "l2": 0.5}],
            "datasets": [{"name": "s", "synthetic": {"n": 200, "minority_rate": 0.1, "test_fraction": 0.3}},
                         {"name": "f", "train": "a.csv", "test": "b.csv", "label": "y"}],
            "store": "out/results.jsonl"
        }
    })");
    const auto c = parse_config(doc, "/base");
    REQUIRE(c.plan);
    const auto& p = *c.plan;
    CHECK(p.master_seed == 3);
    CHECK(p.budgets == std::vector<std::size_t>{16, 32});
    CHECK(std::get<strategy::Hybrid>(p.strategies[1]).rho == 0.25);
    CHECK(std::get<strategy::OversamplePlus>(p.strategies[2]).boost == 3.0);
    CHECK(p.predictors[1].name == "lr");
    CHECK(p.predictors[1].logistic.l2 == 0.5);
    CHECK(p.datasets[0].synthetic->n == 200);
    CHECK(p.datasets[0].synthetic_test_fraction == 0.3);
    CHECK(p.datasets[1].train == fs::path("/base/a.csv"));
    CHECK(*p.datasets[1].csv.label == "y");
    CHECK(p.store == fs::path("/base/out/results.jsonl"));
    CHECK(p.encoding.one_hot_cap == 5);

    // Hash ignores the store path but not the seed.
    auto q = p;
    q.store = "elsewhere.jsonl";
    CHECK(q.hash() == p.hash());
    q.master_seed = 4;
    CHECK(q.hash() != p.hash());

    CHECK_THROWS_AS(parse_config(nlohmann::json::parse(R"({"plan": {"datasets": [], "bogus": 1}})")), ConfigError);
    CHECK_THROWS_AS(parse_config(nlohmann::json::parse(R"({"plan": {"datasets": [], "predictors": ["nope"]}})")),
                    ConfigError);
    CHECK_THROWS_AS(strategy_from_json(nlohmann::json("no_such_strategy")), ConfigError);
}

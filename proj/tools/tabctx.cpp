#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include <tabctx/aggregate.hpp>
#include <tabctx/bench.hpp>
#include <tabctx/error.hpp>

using namespace tabctx;
namespace fs = std::filesystem;

namespace {

// Exit codes: 0 success, 1 failed cells, 2 usage/config error, 3 data error.
constexpr int kExitFailedCells = 1;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;

Config config_or_default(const std::string& path) {
    if (path.empty()) return {};
    return load_config(path);
}

void write_json(const fs::path& path, const nlohmann::ordered_json& j) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write '" + path.string() + "'");
    out << j.dump(2) << '\n';
}

std::string describe(const ClassCounts& c) {
    return std::to_string(c.total()) + " rows (" + std::to_string(c.n0) + " class 0, " + std::to_string(c.n1) +
           " class 1)";
}

// ---- ingest ---------------------------------------------------------------------------

struct IngestArgs {
    std::string input, config, out_dir = ".";
};

int cmd_ingest(const IngestArgs& a) {
    const auto cfg = config_or_default(a.config);
    if (!cfg.ingest.csv.label) throw ConfigError("ingest needs a label column (ingest.label in the config)");
    const auto table = load_csv(a.input, cfg.ingest.csv);
    const auto parts = run_ingest(table, cfg.ingest);
    fs::create_directories(a.out_dir);
    // Labels are written as 0/1 with the minority class as 1.
    CsvOptions out = cfg.ingest.csv;
    save_csv(fs::path(a.out_dir) / "train.csv", parts.train, out);
    std::printf("train: %s -> %s\n", describe(class_counts(parts.train)).c_str(),
                (fs::path(a.out_dir) / "train.csv").c_str());
    if (parts.test.n_rows() > 0) {
        save_csv(fs::path(a.out_dir) / "test.csv", parts.test, out);
        std::printf("test:  %s -> %s\n", describe(class_counts(parts.test)).c_str(),
                    (fs::path(a.out_dir) / "test.csv").c_str());
    }
    nlohmann::ordered_json schema = nlohmann::ordered_json::array();
    for (const auto& c : parts.train.columns())
        schema.push_back({{"name", c.name}, {"kind", std::string(to_string(c.kind))}});
    write_json(fs::path(a.out_dir) / "schema.json", {{"label", *parts.train.label_name()}, {"columns", schema}});
    return 0;
}

// ---- select-features ------------------------------------------------------------------

struct SelectArgs {
    std::string input, config, out;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> keep_top_k;
};

int cmd_select(const SelectArgs& a) {
    auto cfg = config_or_default(a.config);
    if (!cfg.ingest.csv.label) throw ConfigError("select-features needs a label column (ingest.label in the config)");
    if (a.seed) cfg.selection.seed = *a.seed;
    if (a.keep_top_k) cfg.selection.importance_keep_top_k = a.keep_top_k;
    const auto table = load_csv(a.input, cfg.ingest.csv);
    const auto enc = encode(table, cfg.encoding, table.row_ids());
    const auto labels = table.labels();
    const KnnPredictor knn;
    const auto report = select_features(enc, labels, cfg.selection, knn);
    std::fputs(report.to_text().c_str(), stdout);
    if (!a.out.empty()) write_json(a.out, report.to_json());
    return 0;
}

// ---- sample-context -------------------------------------------------------------------

struct SampleArgs {
    std::string input, config, strategy = "balanced", out;
    std::size_t budget = 1024;
    std::uint64_t seed = 0;
};

int cmd_sample(const SampleArgs& a) {
    const auto cfg = config_or_default(a.config);
    if (!cfg.ingest.csv.label) throw ConfigError("sample-context needs a label column (ingest.label in the config)");
    const auto table = load_csv(a.input, cfg.ingest.csv);
    const auto enc = encode(table, cfg.encoding, table.row_ids());
    const ContextPool pool(table, &enc);
    const auto strategy = a.strategy.starts_with("{") ? strategy_from_json(nlohmann::json::parse(a.strategy))
                                                      : strategy_from_name(a.strategy);
    const auto window = build_context(pool, {strategy, a.budget, a.seed});

    // Real rows index the pool table, synthetic rows follow it.
    const Table source = window.synthetic.n_rows() ? concat_rows(table, window.synthetic) : table;
    const auto index = index_by_id(source);
    std::vector<std::size_t> pos;
    std::vector<std::string> source_ids, synthetic;
    for (const auto& r : window.rows) {
        pos.push_back(index.at(r.id));
        source_ids.push_back(r.synthetic() ? "syn" + std::to_string(r.id.value & ~RowId::kSyntheticBit)
                                           : std::to_string(r.id.value));
        synthetic.push_back(r.synthetic() ? "1" : "0");
    }
    std::vector<Column> cols{Column::categorical("source_id", source_ids), Column::categorical("synthetic", synthetic)};
    for (const auto& c : source.columns()) cols.push_back(c.take(pos));
    const Table out(std::move(cols), {}, table.label_name());

    const fs::path out_path = a.out.empty() ? fs::path("context.csv") : fs::path(a.out);
    if (out_path.has_parent_path()) fs::create_directories(out_path.parent_path());
    CsvOptions csv = cfg.ingest.csv;
    csv.id_column = "position";
    save_csv(out_path, out, csv);

    nlohmann::ordered_json prov;
    prov["input"] = fs::absolute(a.input).string();
    prov["strategy"] = strategy_name(strategy);
    prov["strategy_params"] = strategy_label(strategy);
    prov["budget"] = a.budget;
    prov["seed"] = a.seed;
    prov["rows"] = window.size();
    prov["achieved"] = {{"n0", window.achieved.n0}, {"n1", window.achieved.n1}};
    prov["duplicates"] = window.duplicate_count();
    std::vector<int> labels;
    for (const auto& r : window.rows) labels.push_back(r.label);
    const auto ids = window.ids();
    prov["context_hash"] = context_hash(ids, labels);
    prov["warnings"] = window.warnings;
    nlohmann::ordered_json origins = nlohmann::ordered_json::array();
    for (const auto& r : window.rows)
        if (r.synthetic())
            origins.push_back({{"base", r.origin->base.value},
                               {"neighbor", r.origin->neighbor.value},
                               {"lambda", r.origin->lambda}});
    prov["synthetic_origins"] = origins;
    auto prov_path = out_path;
    prov_path.replace_extension(".provenance.json");
    write_json(prov_path, prov);
    std::printf("%s: %zu rows (%zu class 0, %zu class 1, %zu duplicates) -> %s\n", strategy_label(strategy).c_str(),
                window.size(), window.achieved.n0, window.achieved.n1, window.duplicate_count(), out_path.c_str());
    for (const auto& w : window.warnings) std::printf("warning: %s\n", w.c_str());
    return 0;
}

// ---- bench ----------------------------------------------------------------------------

struct BenchRunArgs {
    std::string plan, store;
    std::optional<std::uint64_t> seed;
    std::size_t workers = 1;
    bool resume = false, allow_failures = false;
};

int cmd_bench_run(const BenchRunArgs& a) {
    auto plan = load_plan(a.plan);
    if (a.seed) plan.master_seed = *a.seed;
    if (!a.store.empty()) plan.store = a.store;
    RunOptions opt;
    opt.workers = a.workers;
    opt.resume = a.resume;
    const auto cells = enumerate_cells(plan).size();
    std::size_t done = 0;
    opt.on_record = [&](const EvalRecord& r) {
        ++done;
        if (r.ok())
            spdlog::info("[{}/{}] {} auc={:.4f} mcc={:.4f}", done, cells, r.cell_key(), r.metrics->auc, r.metrics->mcc);
        else
            spdlog::info("[{}/{}] {} {}: {}", done, cells, r.cell_key(), to_string(r.status), r.reason);
    };
    const auto s = run_plan(plan, opt);
    std::printf("plan %s: %zu cells, %zu already done, %zu executed (%zu failed, %zu skipped) -> %s\n",
                plan.hash().c_str(), s.total_cells, s.already_done, s.executed, s.failed, s.skipped,
                plan.store.c_str());
    if (s.failed > 0 && !a.allow_failures) return kExitFailedCells;
    return 0;
}

struct BenchReportArgs {
    std::string store, kind = "strategy-means", format = "text", order = "flat", out;
    ReportOptions options;
    std::optional<std::size_t> min_size, max_size, size;
};

int cmd_bench_report(BenchReportArgs a) {
    const auto contents = read_store(a.store);
    if (contents.torn_tail) spdlog::warn("ignoring a partially written record at the end of {}", a.store);
    if (a.order == "flat")
        a.options.order = MeanOrder::Flat;
    else if (a.order == "seeds-first")
        a.options.order = MeanOrder::SeedsFirst;
    else
        throw ConfigError("unknown --order '" + a.order + "' (flat, seeds-first)");
    a.options.min_size = a.min_size;
    a.options.max_size = a.max_size;
    a.options.context_size = a.size;
    const auto table = build_report(contents.records, report_kind_from_string(a.kind), a.options);
    const std::string text = a.format == "csv" ? table.to_csv() : table.to_text();
    if (a.out.empty()) {
        std::fputs(text.c_str(), stdout);
    } else {
        std::ofstream out(a.out);
        if (!out) throw ConfigError("cannot write '" + a.out + "'");
        out << text;
    }
    return 0;
}

// ---- synth ----------------------------------------------------------------------------

struct SynthArgs {
    SynthParams params;
    std::string out = "synth.csv";
    std::optional<double> test_fraction;
};

int cmd_synth(const SynthArgs& a) {
    const auto table = synth_dataset(a.params);
    CsvOptions csv;
    csv.label = kSynthLabel;
    if (!a.test_fraction) {
        save_csv(a.out, table, csv);
        std::printf("%s -> %s\n", describe(class_counts(table)).c_str(), a.out.c_str());
        return 0;
    }
    const auto parts = split(table, RandomStratified{*a.test_fraction, a.params.seed});
    fs::path base(a.out);
    auto name = [&](const char* suffix) {
        auto p = base;
        p.replace_filename(base.stem().string() + suffix + base.extension().string());
        return p;
    };
    save_csv(name("_train"), parts.train, csv);
    save_csv(name("_test"), parts.test, csv);
    std::printf("train %s -> %s\ntest  %s -> %s\n", describe(class_counts(parts.train)).c_str(),
                name("_train").c_str(), describe(class_counts(parts.test)).c_str(), name("_test").c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Context-window construction and benchmarking for in-context tabular classifiers"};
    app.require_subcommand(1);
    std::string log_level;  // unset: warn, except bench run shows progress at info
    app.add_option("--log-level", log_level, "trace, debug, info, warn, error or off")
        ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "off"}));
    app.parse_complete_callback([&] { spdlog::set_level(log_level.empty() ? spdlog::level::warn : spdlog::level::from_str(log_level)); });

    int code = 0;

    IngestArgs ingest;
    auto* c_ingest = app.add_subcommand("ingest", "Load a CSV, impute, engineer features and split");
    c_ingest->add_option("input", ingest.input, "CSV file")->required()->check(CLI::ExistingFile);
    c_ingest->add_option("-c,--config", ingest.config, "JSON config (ingest section)")->check(CLI::ExistingFile);
    c_ingest->add_option("-o,--out-dir", ingest.out_dir, "Output directory")->capture_default_str();
    c_ingest->callback([&] { code = cmd_ingest(ingest); });

    SelectArgs select;
    auto* c_select = app.add_subcommand("select-features", "Run the feature-selection pipeline and print its report");
    c_select->add_option("input", select.input, "Training CSV")->required()->check(CLI::ExistingFile);
    c_select->add_option("-c,--config", select.config, "JSON config (ingest, encoding, selection)")
        ->check(CLI::ExistingFile);
    c_select->add_option("-o,--out", select.out, "Write the report as JSON");
    c_select->add_option("--seed", select.seed, "Seed for permutation importance");
    c_select->add_option("--keep-top-k", select.keep_top_k, "Enable importance pruning, keeping this many");
    c_select->callback([&] { code = cmd_select(select); });

    SampleArgs sample;
    auto* c_sample = app.add_subcommand("sample-context", "Build one context window and write it as CSV");
    c_sample->add_option("input", sample.input, "Training CSV")->required()->check(CLI::ExistingFile);
    c_sample->add_option("-c,--config", sample.config, "JSON config (ingest, encoding)")->check(CLI::ExistingFile);
    c_sample->add_option("-s,--strategy", sample.strategy, "Strategy name or JSON object")->capture_default_str();
    c_sample->add_option("-m,--budget", sample.budget, "Context size")->capture_default_str();
    c_sample->add_option("--seed", sample.seed, "Sampling seed")->capture_default_str();
    c_sample->add_option("-o,--out", sample.out, "Output CSV (provenance goes next to it)");
    c_sample->callback([&] { code = cmd_sample(sample); });

    auto* c_bench = app.add_subcommand("bench", "Run experiment plans and report on result stores");
    c_bench->require_subcommand(1);
    BenchRunArgs run;
    auto* c_run = c_bench->add_subcommand("run", "Execute every pending cell of a plan");
    c_run->add_option("plan", run.plan, "JSON config with a plan section")->required()->check(CLI::ExistingFile);
    c_run->add_option("--store", run.store, "Override the results store path");
    c_run->add_option("--seed", run.seed, "Override the master seed");
    c_run->add_option("-j,--workers", run.workers, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);
    c_run->add_flag("--resume", run.resume, "Continue an existing store");
    c_run->add_flag("--allow-failures", run.allow_failures, "Exit 0 even if some cells failed");
    c_run->callback([&] {
        if (log_level.empty()) spdlog::set_level(spdlog::level::info);
        code = cmd_bench_run(run);
    });

    BenchReportArgs report;
    auto* c_report = c_bench->add_subcommand("report", "Aggregate a results store");
    c_report->add_option("store", report.store, "JSONL results store")->required()->check(CLI::ExistingFile);
    c_report->add_option("-k,--kind", report.kind, "strategy-means, win-rates, scaling or model-table")
        ->capture_default_str();
    c_report->add_option("-f,--format", report.format, "text or csv")
        ->capture_default_str()
        ->check(CLI::IsMember({"text", "csv"}));
    c_report->add_option("--order", report.order, "Mean order: flat or seeds-first")->capture_default_str();
    c_report->add_option("--epsilon", report.options.epsilon, "Win tolerance in AUC")->capture_default_str();
    c_report->add_option("--min-size", report.min_size, "Scaling: smaller context size");
    c_report->add_option("--max-size", report.max_size, "Scaling: larger context size");
    c_report->add_option("--dataset", report.options.dataset, "Filter by dataset");
    c_report->add_option("--predictor", report.options.predictor, "Filter by predictor");
    c_report->add_option("--strategy", report.options.strategy, "Filter by strategy");
    c_report->add_option("--size", report.size, "Filter by context size");
    c_report->add_option("-o,--out", report.out, "Write to a file instead of stdout");
    c_report->callback([&] { code = cmd_bench_report(report); });

    SynthArgs synth;
    auto* c_synth = app.add_subcommand("synth", "Generate an imbalanced two-Gaussian dataset");
    c_synth->add_option("-n,--rows", synth.params.n, "Rows")->capture_default_str();
    c_synth->add_option("--rate", synth.params.minority_rate, "Minority rate")->capture_default_str();
    c_synth->add_option("--separation", synth.params.separation, "Distance between class means")
        ->capture_default_str();
    c_synth->add_option("--noise-dims", synth.params.noise_dims, "Pure-noise columns")->capture_default_str();
    c_synth->add_option("--seed", synth.params.seed, "Seed")->capture_default_str();
    c_synth->add_option("--test-fraction", synth.test_fraction, "Also split into _train/_test files");
    c_synth->add_option("-o,--out", synth.out, "Output CSV")->capture_default_str();
    c_synth->callback([&] { code = cmd_synth(synth); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitConfig;
    } catch (const EmptyReportError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitConfig;
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitData;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitData;
    }
    return code;
}

#include "tabctx/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <exception>
#include <map>
#include <mutex>
#include <set>
#include <thread>
#include <unordered_set>

#include <spdlog/spdlog.h>

#include "tabctx/error.hpp"
#include "tabctx/metrics.hpp"
#include "tabctx/random.hpp"

namespace tabctx {

namespace {

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

}  // namespace

Table synth_dataset(const SynthParams& p) {
    if (p.n < 10) throw ConfigError("synth_dataset: n must be at least 10");
    if (!(p.minority_rate > 0.0 && p.minority_rate <= 0.5)) throw ConfigError("synth_dataset: rate must lie in (0, 0.5]");
    if (!(p.separation >= 0.0)) throw ConfigError("synth_dataset: separation must be >= 0");
    const auto n1 = static_cast<std::size_t>(std::llround(static_cast<double>(p.n) * p.minority_rate));
    Rng rng(p.seed);
    std::vector<int> label(p.n, 0);
    std::fill(label.begin(), label.begin() + static_cast<std::ptrdiff_t>(n1), 1);
    rng.shuffle(label);

    const double shift = p.separation / std::sqrt(2.0);
    const std::size_t dims = 2 + p.noise_dims;
    std::vector<std::vector<double>> cols(dims, std::vector<double>(p.n));
    for (std::size_t i = 0; i < p.n; ++i)
        for (std::size_t d = 0; d < dims; ++d) cols[d][i] = rng.normal() + (d < 2 && label[i] ? shift : 0.0);

    std::vector<Column> columns;
    for (std::size_t d = 0; d < dims; ++d)
        columns.push_back(Column::numeric(d < 2 ? "x" + std::to_string(d) : "noise" + std::to_string(d - 2),
                                          std::move(cols[d])));
    std::vector<double> y(label.begin(), label.end());
    columns.push_back(Column::numeric(kSynthLabel, std::move(y)));
    return Table(std::move(columns), {}, std::string(kSynthLabel));
}

std::unique_ptr<Predictor> make_predictor(const PredictorConfig& c) {
    if (c.kind == "knn") return std::make_unique<KnnPredictor>(c.knn);
    if (c.kind == "gaussian_nb") return std::make_unique<GaussianNbPredictor>(c.nb);
    if (c.kind == "logistic") return std::make_unique<LogisticPredictor>(c.logistic);
    if (c.kind == "constant") return std::make_unique<ConstantPredictor>(c.constant);
    if (c.kind == "external") return std::make_unique<ExternalPredictor>(c.external);
    throw ConfigError("unknown predictor kind '" + c.kind + "'");
}

// ---- plan ------------------------------------------------------------------------------

namespace {

nlohmann::ordered_json predictor_json(const PredictorConfig& p) {
    nlohmann::ordered_json j;
    j["name"] = p.name;
    j["kind"] = p.kind;
    if (p.kind == "knn") {
        j["k"] = p.knn.k ? nlohmann::ordered_json(*p.knn.k) : nlohmann::ordered_json(nullptr);
        j["distance_weighted"] = p.knn.distance_weighted;
        j["epsilon"] = p.knn.epsilon;
    } else if (p.kind == "gaussian_nb") {
        j["variance_floor"] = p.nb.variance_floor;
    } else if (p.kind == "logistic") {
        j["l2"] = p.logistic.l2;
        j["max_epochs"] = p.logistic.max_epochs;
        j["tolerance"] = p.logistic.tolerance;
    } else if (p.kind == "constant") {
        j["p"] = p.constant;
    } else if (p.kind == "external") {
        j["command"] = p.external.command;
        j["protocol"] = p.external.protocol_version;
        j["batch_size"] = p.external.batch_size;
    }
    return j;
}

}  // namespace

nlohmann::ordered_json ExperimentPlan::canonical() const {
    nlohmann::ordered_json j;
    j["seed"] = master_seed;
    j["repeats"] = repeats;
    j["budgets"] = budgets;
    j["strategies"] = nlohmann::ordered_json::array();
    for (const auto& s : strategies) j["strategies"].push_back(strategy_label(s));
    j["predictors"] = nlohmann::ordered_json::array();
    for (const auto& p : predictors) j["predictors"].push_back(predictor_json(p));
    j["datasets"] = nlohmann::ordered_json::array();
    for (const auto& d : datasets) {
        nlohmann::ordered_json dj;
        dj["name"] = d.name;
        if (d.synthetic) {
            const auto& s = *d.synthetic;
            dj["synthetic"] = {{"n", s.n},
                               {"minority_rate", s.minority_rate},
                               {"separation", s.separation},
                               {"noise_dims", s.noise_dims},
                               {"seed", s.seed},
                               {"test_fraction", d.synthetic_test_fraction}};
        } else {
            dj["train"] = d.train.string();
            dj["test"] = d.test.string();
            dj["label"] = d.csv.label.value_or("");
        }
        dj["features"] = d.features;
        j["datasets"].push_back(std::move(dj));
    }
    j["encoding"] = {{"one_hot_cap", encoding.one_hot_cap},
                     {"missing_sentinel", encoding.missing_sentinel},
                     {"min_std", encoding.min_std}};
    return j;
}

std::string ExperimentPlan::hash() const { return hex64(fnv1a64(canonical().dump())); }

std::vector<Cell> enumerate_cells(const ExperimentPlan& plan) {
    std::vector<Cell> cells;
    for (std::size_t d = 0; d < plan.datasets.size(); ++d)
        for (std::size_t p = 0; p < plan.predictors.size(); ++p)
            for (std::size_t s = 0; s < plan.strategies.size(); ++s)
                for (std::size_t b = 0; b < plan.budgets.size(); ++b)
                    for (std::size_t r = 0; r < plan.repeats; ++r) cells.push_back({cells.size(), d, p, s, b, r});
    return cells;
}

std::uint64_t derive_seed(std::uint64_t master_seed, const std::string& dataset, const std::string& predictor,
                          const std::string& strategy, std::size_t size, std::size_t repeat) {
    // Length-prefixed fields keep the encoding injective.
    std::string s;
    for (const auto* f : {&dataset, &predictor, &strategy}) s += std::to_string(f->size()) + ":" + *f + ";";
    s += std::to_string(size) + ";" + std::to_string(repeat);
    return mix64(mix64(master_seed) ^ fnv1a64(s));
}

// ---- execution -------------------------------------------------------------------------

PreparedDataset prepare_dataset(const DatasetConfig& c, const EncodingPolicy& policy) {
    PreparedDataset out;
    out.name = c.name;
    Table train, test;
    if (c.synthetic) {
        auto parts = split(synth_dataset(*c.synthetic), RandomStratified{c.synthetic_test_fraction, c.synthetic->seed});
        train = std::move(parts.train);
        test = std::move(parts.test);
    } else {
        if (!c.csv.label) throw ConfigError("dataset '" + c.name + "' has no label column configured");
        for (const auto* p : {&c.train, &c.test})
            if (!std::filesystem::exists(*p))
                throw ConfigError("dataset '" + c.name + "': file not found: " + p->string());
        train = load_csv(c.train, c.csv);
        test = load_csv(c.test, c.csv);
    }
    const auto& train_ids = train.row_ids();
    std::unordered_set<RowId, RowIdHash> seen(train_ids.begin(), train_ids.end());
    for (auto id : test.row_ids())
        if (seen.count(id))
            throw LeakageError("dataset '" + c.name + "': row id " + std::to_string(id.value) +
                               " is in both train and test");

    auto enc = encode(train, policy, train_ids);
    auto test_enc = apply_encoding(enc.encoder, test);
    if (!c.features.empty()) {
        std::vector<std::size_t> keep;
        for (const auto& f : c.features) {
            const auto it = std::find(enc.feature_names.begin(), enc.feature_names.end(), f);
            if (it == enc.feature_names.end())
                throw ConfigError("dataset '" + c.name + "': unknown encoded feature '" + f + "'");
            keep.push_back(static_cast<std::size_t>(it - enc.feature_names.begin()));
        }
        enc = enc.select_features(keep);
        test_enc = test_enc.select_features(keep);
    }
    out.test_ids = test.row_ids();
    out.train = std::make_shared<const Table>(std::move(train));
    out.test = std::make_shared<const Table>(std::move(test));
    out.train_encoded = std::make_shared<const EncodedMatrix>(std::move(enc));
    out.test_encoded = std::make_shared<const EncodedMatrix>(std::move(test_enc));
    out.pool = std::make_unique<ContextPool>(*out.train, out.train_encoded.get());
    return out;
}

EvalRecord run_cell(const ExperimentPlan& plan, const Cell& cell, const PreparedDataset& data,
                    const Predictor& predictor, const std::string& plan_hash) {
    const auto& pc = plan.predictors[cell.predictor];
    const auto& strat = plan.strategies[cell.strategy];
    EvalRecord r;
    r.plan_hash = plan_hash;
    r.dataset = data.name;
    r.predictor = pc.name;
    const auto id = predictor.identity();
    r.predictor_version = id.name + " " + id.version;
    r.strategy = strategy_name(strat);
    r.strategy_params = strategy_label(strat);
    r.context_size = plan.budgets[cell.budget];
    r.repeat = cell.repeat;
    r.seed = derive_seed(plan.master_seed, r.dataset, r.predictor, r.strategy_params, r.context_size, r.repeat);
    r.test_rows = data.test->n_rows();

    const auto t0 = std::chrono::steady_clock::now();
    try {
        ContextSpec spec{strat, r.context_size, r.seed};
        spec.validate();
        const auto window = build_context(*data.pool, spec);
        r.achieved_n0 = window.achieved.n0;
        r.achieved_n1 = window.achieved.n1;
        r.duplicates = window.duplicate_count();
        r.warnings = window.warnings;
        check_test_purity(window, data.test_ids);
        const auto state = predictor.condition(window_input(window, *data.pool));
        const auto proba = state->predict_proba(query_input(*data.test, *data.test_encoded));
        const auto labels = data.test->labels();
        r.metrics = bundle(proba, labels);
        for (auto& w : state->warnings()) r.warnings.push_back(std::move(w));
        if (auto b = state->backend_identity()) r.predictor_version = b->name + " " + b->version;
        r.status = CellStatus::Ok;
    } catch (const BudgetError& e) {
        r.status = CellStatus::Skipped;
        r.reason = std::string("budget: ") + e.what();
    } catch (const LeakageError& e) {
        spdlog::error("leakage in cell {}: {}", r.cell_key(), e.what());
        r.status = CellStatus::Failed;
        r.reason = std::string("leakage: ") + e.what();
    } catch (const std::exception& e) {
        r.status = CellStatus::Failed;
        r.reason = e.what();
    }
    if (!r.ok()) r.metrics.reset();
    r.duration_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return r;
}

namespace {

void validate_plan(const ExperimentPlan& plan) {
    if (plan.datasets.empty()) throw ConfigError("plan has no datasets");
    if (plan.predictors.empty()) throw ConfigError("plan has no predictors");
    if (plan.strategies.empty()) throw ConfigError("plan has no strategies");
    if (plan.budgets.empty()) throw ConfigError("plan has no context sizes");
    if (plan.repeats == 0) throw ConfigError("plan repeats must be at least 1");
    std::set<std::string> names;
    for (const auto& d : plan.datasets)
        if (!names.insert("d:" + d.name).second) throw ConfigError("duplicate dataset name '" + d.name + "'");
    for (const auto& p : plan.predictors)
        if (!names.insert("p:" + p.name).second) throw ConfigError("duplicate predictor name '" + p.name + "'");
    for (const auto& s : plan.strategies)
        if (!names.insert("s:" + strategy_label(s)).second)
            throw ConfigError("duplicate strategy '" + strategy_label(s) + "'");
    for (auto b : plan.budgets)
        if (!names.insert("b:" + std::to_string(b)).second) throw ConfigError("duplicate context size");
}

std::string planned_key(const ExperimentPlan& plan, const Cell& c) {
    return plan.datasets[c.dataset].name + "|" + plan.predictors[c.predictor].name + "|" +
           strategy_label(plan.strategies[c.strategy]) + "|" + std::to_string(plan.budgets[c.budget]) + "|" +
           std::to_string(c.repeat);
}

}  // namespace

RunSummary run_plan(const ExperimentPlan& plan, const RunOptions& options) {
    validate_plan(plan);
    const std::string hash = plan.hash();
    const auto cells = enumerate_cells(plan);
    RunSummary summary;
    summary.total_cells = cells.size();

    // Everything that can abort the sweep happens before the first cell.
    std::vector<PreparedDataset> data;
    for (const auto& d : plan.datasets) data.push_back(prepare_dataset(d, plan.encoding));
    std::vector<std::unique_ptr<Predictor>> predictors;
    for (const auto& p : plan.predictors) predictors.push_back(make_predictor(p));

    std::unordered_set<std::string> done;
    const bool exists = std::filesystem::exists(plan.store) && std::filesystem::file_size(plan.store) > 0;
    if (exists) {
        if (!options.resume)
            throw ConfigError("results store " + plan.store.string() + " already exists; pass --resume to continue it");
        const auto contents = read_store(plan.store);
        for (const auto& r : contents.records) {
            if (r.plan_hash != hash)
                throw ConfigError("results store " + plan.store.string() + " was written by a different plan (" +
                                  r.plan_hash + " vs " + hash + ")");
            done.insert(r.cell_key());
        }
        if (contents.torn_tail) {
            spdlog::warn("dropping a partially written record at the end of {}", plan.store.string());
            std::filesystem::resize_file(plan.store, contents.valid_bytes);
        }
    }
    if (plan.store.has_parent_path()) std::filesystem::create_directories(plan.store.parent_path());

    std::vector<const Cell*> pending;
    for (const auto& c : cells) {
        if (done.count(planned_key(plan, c)))
            ++summary.already_done;
        else
            pending.push_back(&c);
    }
    std::vector<std::size_t> exec_order(pending.size());
    for (std::size_t i = 0; i < exec_order.size(); ++i) exec_order[i] = i;
    if (options.shuffle_execution) {
        Rng rng(*options.shuffle_execution);
        rng.shuffle(exec_order);
    }

    std::ofstream out(plan.store, std::ios::binary | std::ios::app);
    if (!out) throw ConfigError("cannot open results store " + plan.store.string() + " for writing");

    std::mutex mu;
    std::vector<std::optional<EvalRecord>> finished(pending.size());
    std::size_t commit_pos = 0;
    std::atomic<std::size_t> next{0};
    std::atomic<bool> stop{false};
    std::exception_ptr fatal;

    auto commit_ready = [&] {
        while (commit_pos < finished.size() && finished[commit_pos] && !stop.load()) {
            const auto& r = *finished[commit_pos];
            out << to_jsonl(r);
            out.flush();
            if (!out) throw ConfigError("write to results store failed");
            ++summary.executed;
            summary.failed += r.status == CellStatus::Failed;
            summary.skipped += r.status == CellStatus::Skipped;
            if (r.status == CellStatus::Failed) spdlog::warn("cell {} failed: {}", r.cell_key(), r.reason);
            if (options.on_record) options.on_record(r);
            finished[commit_pos].reset();
            ++commit_pos;
            if (options.stop_after && summary.executed >= *options.stop_after) {
                stop = true;
                summary.interrupted = commit_pos < finished.size();
            }
        }
    };

    auto worker = [&] {
        for (;;) {
            if (stop.load()) return;
            const std::size_t i = next.fetch_add(1);
            if (i >= exec_order.size()) return;
            const std::size_t pos = exec_order[i];
            const Cell& c = *pending[pos];
            auto rec = run_cell(plan, c, data[c.dataset], *predictors[c.predictor], hash);
            std::lock_guard lock(mu);
            finished[pos] = std::move(rec);
            try {
                commit_ready();
            } catch (...) {
                fatal = std::current_exception();
                stop = true;
            }
        }
    };

    const std::size_t n_workers = std::max<std::size_t>(1, std::min(options.workers, pending.size()));
    if (n_workers == 1) {
        worker();
    } else {
        std::vector<std::thread> threads;
        for (std::size_t w = 0; w < n_workers; ++w) threads.emplace_back(worker);
        for (auto& t : threads) t.join();
    }
    if (fatal) std::rethrow_exception(fatal);
    return summary;
}

SplitResult run_ingest(const Table& table, const IngestConfig& config) {
    Table t = config.imputation.empty() ? table : impute(table, config.imputation);
    if (!config.recipes.empty()) t = engineer(t, config.recipes);
    if (config.split) return split(t, *config.split);
    const std::vector<std::size_t> none;
    auto empty = t.take(none);
    return {std::move(t), std::move(empty)};
}

}  // namespace tabctx

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "tabctx/context.hpp"
#include "tabctx/csv.hpp"
#include "tabctx/encoding.hpp"
#include "tabctx/external.hpp"
#include "tabctx/feature_selection.hpp"
#include "tabctx/ingest.hpp"
#include "tabctx/predictors.hpp"
#include "tabctx/record.hpp"

namespace tabctx {

// ---- synthetic data ----------------------------------------------------------------------

struct SynthParams {
    std::size_t n = 10000;
    double minority_rate = 0.08;
    double separation = 2.0;  // distance between the class means
    std::size_t noise_dims = 8;
    std::uint64_t seed = 0;
};

// Two unit-variance Gaussian classes in columns x0, x1 (class 1 shifted by
// `separation` along the diagonal), pure-noise columns noise0.., and a
// `default` label with exactly round(n * rate) minority rows, shuffled.
Table synth_dataset(const SynthParams& params);

inline constexpr const char* kSynthLabel = "default";

// ---- plan ------------------------------------------------------------------------------

struct PredictorConfig {
    std::string name;  // unique within a plan; defaults to the kind
    std::string kind;  // knn | gaussian_nb | logistic | constant | external
    KnnOptions knn;
    GaussianNbOptions nb;
    LogisticOptions logistic;
    double constant = 0.5;
    ExternalBackendDescriptor external;
};

std::unique_ptr<Predictor> make_predictor(const PredictorConfig& config);

// Train/test tables from files (as written by `ingest`) or generated.
struct DatasetConfig {
    std::string name;
    std::filesystem::path train, test;
    CsvOptions csv;
    std::optional<SynthParams> synthetic;
    double synthetic_test_fraction = 0.25;
    // Encoded feature names to keep (e.g. from a selection report); empty = all.
    std::vector<std::string> features;
};

struct ExperimentPlan {
    std::vector<DatasetConfig> datasets;
    std::vector<PredictorConfig> predictors;
    std::vector<Strategy> strategies;
    std::vector<std::size_t> budgets;
    std::size_t repeats = 5;
    std::uint64_t master_seed = 0;
    EncodingPolicy encoding;
    std::filesystem::path store = "results.jsonl";

    // Digest of everything that affects results (not the store path).
    std::string hash() const;
    nlohmann::ordered_json canonical() const;
};

struct Cell {
    std::size_t index = 0;  // position in the canonical grid order
    std::size_t dataset = 0, predictor = 0, strategy = 0, budget = 0, repeat = 0;
};

// Canonical grid order: dataset, predictor, strategy, budget, repeat.
std::vector<Cell> enumerate_cells(const ExperimentPlan& plan);

// 64-bit cell seed from the master seed and the cell coordinates.
std::uint64_t derive_seed(std::uint64_t master_seed, const std::string& dataset, const std::string& predictor,
                          const std::string& strategy, std::size_t size, std::size_t repeat);

// ---- execution -------------------------------------------------------------------------

struct PreparedDataset {
    std::string name;
    std::shared_ptr<const Table> train, test;
    std::shared_ptr<const EncodedMatrix> train_encoded, test_encoded;
    std::unique_ptr<ContextPool> pool;
    std::vector<RowId> test_ids;
};

// Loads / generates, encodes (fit on train only) and applies the feature list.
PreparedDataset prepare_dataset(const DatasetConfig& config, const EncodingPolicy& policy);

// Runs one cell; never throws for cell-level failures.
EvalRecord run_cell(const ExperimentPlan& plan, const Cell& cell, const PreparedDataset& data,
                    const Predictor& predictor, const std::string& plan_hash);

struct RunOptions {
    std::size_t workers = 1;
    bool resume = false;
    // Stop after committing this many new records (simulated interruption).
    std::optional<std::size_t> stop_after;
    // Execute pending cells in this order instead of the canonical one;
    // records are still committed in canonical order.
    std::optional<std::uint64_t> shuffle_execution;
    std::function<void(const EvalRecord&)> on_record;
};

struct RunSummary {
    std::size_t total_cells = 0;
    std::size_t already_done = 0;
    std::size_t executed = 0;
    std::size_t failed = 0;
    std::size_t skipped = 0;
    bool interrupted = false;
};

// Executes every pending cell and appends its record to the store. Records
// are committed in canonical grid order whatever the worker count, so serial,
// parallel and resumed runs write the same bytes apart from durations.
RunSummary run_plan(const ExperimentPlan& plan, const RunOptions& options = {});

// ---- configuration file ------------------------------------------------------------------

struct IngestConfig {
    CsvOptions csv;
    std::vector<ImputationRule> imputation;
    std::vector<FeatureRecipe> recipes;
    std::optional<SplitSpec> split;
};

// impute -> engineer -> split. Without a split rule the whole table is
// returned as `train` and `test` is empty.
SplitResult run_ingest(const Table& table, const IngestConfig& config);

struct Config {
    nlohmann::json raw;
    IngestConfig ingest;
    EncodingPolicy encoding;
    SelectionConfig selection;
    std::optional<ExperimentPlan> plan;
};

// JSON document with optional sections "ingest", "encoding", "selection" and
// "plan". Relative paths resolve against the file's directory.
Config parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
Config load_config(const std::filesystem::path& path);
ExperimentPlan load_plan(const std::filesystem::path& path);

Strategy strategy_from_json(const nlohmann::json& j);
PredictorConfig predictor_from_json(const nlohmann::json& j);

}  // namespace tabctx

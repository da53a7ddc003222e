#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tabctx/record.hpp"

namespace tabctx {

inline constexpr double kWinTolerance = 1e-4;

// Records that are not ok are treated as missing cells everywhere below:
// they are skipped and counted, never imputed.

// Cells are matched on (dataset, predictor, context size, repeat).
std::string match_key(const EvalRecord& r);

struct Coverage {
    std::size_t records = 0;
    std::size_t usable = 0;         // status ok with metrics
    std::size_t failed = 0;
    std::size_t skipped = 0;
    std::vector<std::string> notes;  // human-readable details of gaps

    std::vector<std::string> footer() const;
};

struct WinRateMatrix {
    std::vector<std::string> strategies;  // row/column order
    // wins[i][j]: keys where strategy i beat j by more than epsilon.
    std::vector<std::vector<std::size_t>> wins;
    std::vector<std::vector<std::size_t>> ties;
    std::vector<std::vector<std::size_t>> shared;  // keys present for both i and j
    // Keys where every strategy is present; first place is shared equally
    // among strategies within epsilon of the best.
    std::size_t complete_keys = 0;
    std::vector<double> first_place;  // fraction of complete keys
    double epsilon = kWinTolerance;
    Coverage coverage;

    double win_rate(std::size_t i, std::size_t j) const;
};

WinRateMatrix win_rates(std::span<const EvalRecord> records, double epsilon = kWinTolerance);

// Mean AUC at max_size minus mean AUC at min_size for one
// (dataset, predictor, strategy); nullopt when an endpoint is missing.
std::optional<double> scaling_gain(std::span<const EvalRecord> records, const std::string& dataset,
                                   const std::string& predictor, const std::string& strategy,
                                   std::size_t min_size = 1024, std::size_t max_size = 50000);

struct ScalingRow {
    std::string dataset, predictor, strategy;
    std::optional<double> auc_min, auc_max, gain;
};
std::vector<ScalingRow> scaling_table(std::span<const EvalRecord> records, std::size_t min_size,
                                      std::size_t max_size);

enum class MeanOrder {
    Flat,        // plain mean over cells
    SeedsFirst,  // average repeats within (dataset, predictor, strategy, size), then across those
};

struct StrategyMeans {
    std::vector<std::string> strategies;
    std::vector<std::string> datasets;
    // mean[s][d]; nullopt when no usable cell exists.
    std::vector<std::vector<std::optional<double>>> mean;
    std::vector<std::vector<std::size_t>> cells;
    std::vector<std::optional<double>> overall;  // across datasets, same order rule
    Coverage coverage;
};

StrategyMeans strategy_means(std::span<const EvalRecord> records, MeanOrder order = MeanOrder::Flat);

struct ModelRow {
    std::string predictor;
    std::size_t cells = 0;
    double auc = 0, mcc = 0, default_f1 = 0, balanced_accuracy = 0, default_recall = 0;
};
std::vector<ModelRow> model_table(std::span<const EvalRecord> records);

// Rendered report: CSV plus an aligned plain-text table with a coverage footer.
struct ReportTable {
    std::string title;
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> footer;

    std::string to_csv() const;
    std::string to_text() const;
};

enum class ReportKind { StrategyMeans, WinRates, Scaling, ModelTable };
ReportKind report_kind_from_string(std::string_view s);
std::string_view to_string(ReportKind k);

struct ReportOptions {
    MeanOrder order = MeanOrder::Flat;
    double epsilon = kWinTolerance;
    std::optional<std::size_t> min_size;  // default: smallest size in the slice
    std::optional<std::size_t> max_size;  // default: largest size in the slice
    // Slice filters (empty = all).
    std::string dataset, predictor, strategy;
    std::optional<std::size_t> context_size;
};

// Throws EmptyReportError when the filtered slice holds no usable record.
ReportTable build_report(std::span<const EvalRecord> records, ReportKind kind, const ReportOptions& options = {});

}  // namespace tabctx

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "tabctx/encoding.hpp"
#include "tabctx/predictors.hpp"

namespace tabctx {

struct DroppedFeature {
    std::string name;
    std::size_t index = 0;  // column of the encoded matrix
    double statistic = 0.0;
    std::string reason;
};

struct SelectionStage {
    std::string name;
    std::string note;
    std::vector<std::string> features_in;
    std::vector<DroppedFeature> dropped;
    std::vector<std::string> features_out;
    std::vector<std::pair<std::string, double>> scores;  // per-feature statistic, when meaningful
};

struct SelectionReport {
    std::vector<SelectionStage> stages;
    std::vector<std::size_t> selected;  // encoded-matrix columns surviving every stage

    nlohmann::json to_json() const;
    std::string to_text() const;
};

struct StageResult {
    std::vector<std::size_t> surviving;  // ascending column indices
    SelectionStage stage;
};

// Equal-frequency bin index per value; tied values always share a bin.
std::vector<std::size_t> equal_frequency_bins(std::span<const double> x, std::size_t n_bins);

// MI in bits between the binned feature and a binary label (0 log 0 = 0).
double mutual_information(std::span<const double> x, std::span<const int> y, std::size_t n_bins = 10);

double pearson(std::span<const double> a, std::span<const double> b);

// Drops, for each pair with |rho| > threshold (strongest first), the member
// with lower MI against the label (later index on ties). Constant features
// are dropped up front.
StageResult correlation_filter(const Matrix& x, std::span<const int> y, std::span<const std::string> names,
                               std::span<const std::size_t> candidates, double threshold = 0.95,
                               std::size_t mi_bins = 10);

// Keeps features with MI > min_mi, and at most top_k of them when set.
StageResult mi_ranking(const Matrix& x, std::span<const int> y, std::span<const std::string> names,
                       std::span<const std::size_t> candidates, std::size_t n_bins = 10, double min_mi = 0.0,
                       std::optional<std::size_t> top_k = std::nullopt);

// VIF of every column of `x` from an OLS regression (with intercept) on the
// remaining columns. Exact collinearity gives +infinity.
std::vector<double> variance_inflation_factors(const Matrix& x);

// Repeatedly drops the highest-VIF feature (lowest index on ties) while any
// VIF exceeds `cap`.
StageResult vif_filter(const Matrix& x, std::span<const std::string> names, std::span<const std::size_t> candidates,
                       double cap = 10.0, std::size_t max_iterations = 1000);

struct ImportanceOptions {
    std::size_t keep_top_k = 1;
    std::size_t rounds = 5;
    double holdout_fraction = 0.3;
    std::uint64_t seed = 0;
};

// Permutation importance: mean held-out AUC drop over `rounds` shuffles of
// each column, with the predictor conditioned on the remaining rows.
std::vector<double> permutation_importance(const Matrix& x, std::span<const int> y, const Predictor& predictor,
                                           std::size_t rounds, double holdout_fraction, std::uint64_t seed);

StageResult importance_prune(const Matrix& x, std::span<const int> y, std::span<const std::string> names,
                             std::span<const std::size_t> candidates, const Predictor& predictor,
                             const ImportanceOptions& options);

struct SelectionConfig {
    double correlation_threshold = 0.95;
    std::size_t mi_bins = 10;
    double mi_min = 0.0;
    std::optional<std::size_t> mi_top_k;
    double vif_cap = 10.0;
    std::size_t vif_max_iterations = 1000;
    // Importance pruning runs only when set.
    std::optional<std::size_t> importance_keep_top_k;
    std::size_t importance_rounds = 5;
    double importance_holdout = 0.3;
    std::uint64_t seed = 0;
};

// correlation -> MI ranking -> VIF -> permutation importance.
SelectionReport select_features(const EncodedMatrix& matrix, std::span<const int> y, const SelectionConfig& config,
                                const Predictor& predictor);

}  // namespace tabctx

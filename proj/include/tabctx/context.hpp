#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "tabctx/encoding.hpp"
#include "tabctx/kmeans.hpp"
#include "tabctx/table.hpp"

namespace tabctx {

namespace strategy {

struct Uniform {};
struct Stratified {};
struct Balanced {};
// Per-row weight boost/n_1 for the minority, 1/n_0 for the majority; draws
// with replacement, then a post-hoc minority floor.
struct OversamplePlus {
    double boost = 2.0;
    std::size_t min_minority = 0;
};
struct Smote {
    std::size_t k = 5;
};
struct DiversityKM {
    KMeansParams kmeans;
};
struct Hybrid {
    double rho = 0.5;
    KMeansParams kmeans;
};

}  // namespace strategy

using Strategy = std::variant<strategy::Uniform, strategy::Stratified, strategy::Balanced,
                              strategy::OversamplePlus, strategy::Smote, strategy::DiversityKM,
                              strategy::Hybrid>;

// Canonical lower-case name ("uniform", "oversample_plus", ...).
std::string strategy_name(const Strategy& s);
// Name plus parameters, e.g. "hybrid(rho=0.5,iterations=100,batch=1024)".
std::string strategy_label(const Strategy& s);
Strategy strategy_from_name(std::string_view name);
std::vector<std::string> all_strategy_names();

struct ContextSpec {
    Strategy strategy;
    std::size_t budget = 0;
    std::uint64_t seed = 0;

    // Throws ConfigError on a violated invariant.
    void validate() const;
};

// Context budgets used by the default experiment grid.
inline constexpr std::size_t kDefaultBudgets[] = {1024, 2048, 5000, 10000, 20000, 50000};

struct SyntheticOrigin {
    RowId base;
    RowId neighbor;
    double lambda = 0.0;
};

struct ContextRow {
    RowId id;
    int label = 0;
    std::optional<SyntheticOrigin> origin;  // set for synthetic rows only

    bool synthetic() const noexcept { return origin.has_value(); }
};

struct ContextWindow {
    std::vector<ContextRow> rows;
    ContextSpec spec;
    ClassCounts achieved;
    // Raw and encoded values of the synthetic rows, in the order they appear
    // in `rows`. Row ids carry RowId::kSyntheticBit.
    Table synthetic;
    Matrix synthetic_encoded;
    std::vector<std::string> warnings;

    std::size_t size() const noexcept { return rows.size(); }
    std::vector<RowId> ids() const;
    // Number of rows whose id already appeared earlier in the window.
    std::size_t duplicate_count() const;
};

// A training pool: the table, its labels and (for the distance-based
// strategies) its encoding. The referenced objects must outlive the pool.
class ContextPool {
public:
    explicit ContextPool(const Table& table, const EncodedMatrix* encoded = nullptr);

    const Table& table() const noexcept { return *table_; }
    const EncodedMatrix& encoded() const;
    bool has_encoding() const noexcept { return encoded_ != nullptr; }
    std::span<const int> labels() const noexcept { return labels_; }
    std::span<const std::size_t> members(int label) const noexcept { return members_[label]; }
    ClassCounts counts() const noexcept { return {members_[0].size(), members_[1].size()}; }
    std::size_t size() const noexcept { return labels_.size(); }

private:
    const Table* table_;
    const EncodedMatrix* encoded_;
    std::vector<int> labels_;
    std::vector<std::size_t> members_[2];
};

ContextWindow sample_uniform(const ContextPool& pool, std::size_t m, std::uint64_t seed);
ContextWindow sample_stratified(const ContextPool& pool, std::size_t m, std::uint64_t seed);
ContextWindow sample_balanced(const ContextPool& pool, std::size_t m, std::uint64_t seed);
ContextWindow sample_oversample_plus(const ContextPool& pool, std::size_t m, double boost,
                                     std::size_t min_minority, std::uint64_t seed);
ContextWindow sample_smote(const ContextPool& pool, std::size_t m, std::size_t k, std::uint64_t seed);
ContextWindow sample_diversity_km(const ContextPool& pool, std::size_t m, const KMeansParams& params,
                                  std::uint64_t seed);
ContextWindow sample_hybrid(const ContextPool& pool, std::size_t m, double rho, const KMeansParams& params,
                            std::uint64_t seed);

// Dispatches on spec.strategy.
ContextWindow build_context(const ContextPool& pool, const ContextSpec& spec);

// Per-class quotas for stratified draws (largest remainder of m * n_c / n).
std::vector<std::size_t> stratified_quotas(const ClassCounts& counts, std::size_t m);
// Per-class quotas for balanced draws, with shortfall redistribution.
std::vector<std::size_t> balanced_quotas(const ClassCounts& counts, std::size_t m);

// Label-unaware representative selection over `candidates` (row positions of
// `points`): one nearest-to-centroid row per non-empty cluster, farthest-point
// backfill for empty ones. Returns m distinct positions.
std::vector<std::size_t> diversity_select(const Matrix& points, std::span<const std::size_t> candidates,
                                          std::size_t m, const KMeansParams& params, std::uint64_t seed);

// Leakage guard: throws LeakageError if any window row id is in `test_ids`.
void check_test_purity(const ContextWindow& window, const std::vector<RowId>& test_ids);

}  // namespace tabctx

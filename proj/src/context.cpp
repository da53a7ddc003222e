#include "tabctx/context.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "tabctx/error.hpp"
#include "tabctx/quota.hpp"
#include "tabctx/random.hpp"
#include "tabctx/schema.hpp"

namespace tabctx {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

ContextWindow window_from_positions(const ContextPool& pool, std::span<const std::size_t> positions,
                                    ContextSpec spec) {
    ContextWindow w;
    w.spec = std::move(spec);
    w.rows.reserve(positions.size());
    const auto& ids = pool.table().row_ids();
    for (auto p : positions) w.rows.push_back({ids[p], pool.labels()[p], std::nullopt});
    return w;
}

void finalize(ContextWindow& w) {
    w.achieved = {};
    for (const auto& r : w.rows) (r.label == 1 ? w.achieved.n1 : w.achieved.n0)++;
}

void require_budget(const ContextPool& pool, std::size_t m, std::string_view what) {
    if (m > pool.size())
        throw BudgetError(std::string(what) + ": budget " + std::to_string(m) + " exceeds pool of " +
                          std::to_string(pool.size()) + " rows");
}

// Draws quota[c] rows without replacement from each class, class 0 first.
std::vector<std::size_t> draw_per_class(const ContextPool& pool, std::span<const std::size_t> quota, Rng& rng) {
    std::vector<std::size_t> out;
    for (int c = 0; c < 2; ++c) {
        const auto members = pool.members(c);
        for (auto k : rng.sample_without_replacement(members.size(), quota[static_cast<std::size_t>(c)]))
            out.push_back(members[k]);
    }
    return out;
}

std::string fmt_double(double v) { return format_real(v); }

}  // namespace

// ---- names -----------------------------------------------------------------

std::string strategy_name(const Strategy& s) {
    return std::visit(overloaded{
                          [](const strategy::Uniform&) { return std::string("uniform"); },
                          [](const strategy::Stratified&) { return std::string("stratified"); },
                          [](const strategy::Balanced&) { return std::string("balanced"); },
                          [](const strategy::OversamplePlus&) { return std::string("oversample_plus"); },
                          [](const strategy::Smote&) { return std::string("smote"); },
                          [](const strategy::DiversityKM&) { return std::string("diversity_km"); },
                          [](const strategy::Hybrid&) { return std::string("hybrid"); },
                      },
                      s);
}

std::string strategy_label(const Strategy& s) {
    std::ostringstream o;
    o << strategy_name(s);
    std::visit(overloaded{
                   [](const auto&) {},
                   [&](const strategy::OversamplePlus& p) {
                       o << "(boost=" << fmt_double(p.boost) << ",min_minority=" << p.min_minority << ")";
                   },
                   [&](const strategy::Smote& p) { o << "(k=" << p.k << ")"; },
                   [&](const strategy::DiversityKM& p) {
                       o << "(iterations=" << p.kmeans.iterations << ",batch=" << p.kmeans.batch_size << ")";
                   },
                   [&](const strategy::Hybrid& p) {
                       o << "(rho=" << fmt_double(p.rho) << ",iterations=" << p.kmeans.iterations
                         << ",batch=" << p.kmeans.batch_size << ")";
                   },
               },
               s);
    return o.str();
}

Strategy strategy_from_name(std::string_view name) {
    if (name == "uniform") return strategy::Uniform{};
    if (name == "stratified") return strategy::Stratified{};
    if (name == "balanced") return strategy::Balanced{};
    if (name == "oversample_plus" || name == "oversample+") return strategy::OversamplePlus{};
    if (name == "smote") return strategy::Smote{};
    if (name == "diversity_km") return strategy::DiversityKM{};
    if (name == "hybrid") return strategy::Hybrid{};
    throw ConfigError("unknown strategy '" + std::string(name) + "'");
}

std::vector<std::string> all_strategy_names() {
    return {"uniform", "stratified", "balanced", "oversample_plus", "smote", "diversity_km", "hybrid"};
}

void ContextSpec::validate() const {
    if (budget < 2) throw ConfigError("context budget must be at least 2");
    std::visit(overloaded{
                   [](const auto&) {},
                   [&](const strategy::OversamplePlus& p) {
                       if (!(p.boost >= 1.0)) throw ConfigError("oversample_plus boost must be >= 1");
                       if (p.min_minority > budget)
                           throw ConfigError("oversample_plus min_minority exceeds the budget");
                   },
                   [](const strategy::Smote& p) {
                       if (p.k < 1) throw ConfigError("smote k must be >= 1");
                   },
                   [](const strategy::DiversityKM& p) {
                       if (p.kmeans.batch_size < 1) throw ConfigError("k-means batch size must be >= 1");
                   },
                   [](const strategy::Hybrid& p) {
                       if (!(p.rho >= 0.0 && p.rho <= 1.0)) throw ConfigError("hybrid rho must lie in [0,1]");
                       if (p.kmeans.batch_size < 1) throw ConfigError("k-means batch size must be >= 1");
                   },
               },
               strategy);
}

// ---- window / pool -----------------------------------------------------------

std::vector<RowId> ContextWindow::ids() const {
    std::vector<RowId> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(r.id);
    return out;
}

std::size_t ContextWindow::duplicate_count() const {
    std::unordered_set<RowId, RowIdHash> seen;
    std::size_t dup = 0;
    for (const auto& r : rows)
        if (!seen.insert(r.id).second) ++dup;
    return dup;
}

ContextPool::ContextPool(const Table& table, const EncodedMatrix* encoded)
    : table_(&table), encoded_(encoded), labels_(table.labels()) {
    if (encoded_ && encoded_->n_rows() != table.n_rows())
        throw StructuralError("encoded matrix and table differ in row count");
    for (std::size_t i = 0; i < labels_.size(); ++i) members_[labels_[i]].push_back(i);
}

const EncodedMatrix& ContextPool::encoded() const {
    if (!encoded_) throw ConfigError("this strategy needs an encoded pool");
    return *encoded_;
}

// ---- quotas --------------------------------------------------------------------

std::vector<std::size_t> stratified_quotas(const ClassCounts& counts, std::size_t m) {
    const std::size_t w[2] = {counts.n0, counts.n1};
    return largest_remainder(m, w);
}

std::vector<std::size_t> balanced_quotas(const ClassCounts& counts, std::size_t m) {
    const std::size_t cap[2] = {counts.n0, counts.n1};
    std::vector<std::size_t> q{m / 2, m / 2};
    if (m % 2 == 1) ++q[counts.n1 > counts.n0 ? 1 : 0];
    std::size_t shortfall = 0;
    for (int c = 0; c < 2; ++c)
        if (q[c] > cap[c]) {
            shortfall += q[c] - cap[c];
            q[c] = cap[c];
        }
    for (int c = 0; c < 2 && shortfall > 0; ++c) {
        const std::size_t extra = std::min(shortfall, cap[c] - q[c]);
        q[c] += extra;
        shortfall -= extra;
    }
    return q;
}

// ---- strategies -------------------------------------------------------------------

ContextWindow sample_uniform(const ContextPool& pool, std::size_t m, std::uint64_t seed) {
    require_budget(pool, m, "uniform");
    Rng rng(seed);
    const auto pos = rng.sample_without_replacement(pool.size(), m);
    auto w = window_from_positions(pool, pos, {strategy::Uniform{}, m, seed});
    finalize(w);
    return w;
}

ContextWindow sample_stratified(const ContextPool& pool, std::size_t m, std::uint64_t seed) {
    require_budget(pool, m, "stratified");
    Rng rng(seed);
    const auto quota = stratified_quotas(pool.counts(), m);
    const auto pos = draw_per_class(pool, quota, rng);
    auto w = window_from_positions(pool, pos, {strategy::Stratified{}, m, seed});
    finalize(w);
    return w;
}

namespace {

std::vector<std::size_t> balanced_positions(const ContextPool& pool, std::size_t m, Rng& rng) {
    const auto counts = pool.counts();
    if (counts.n0 == 0 || counts.n1 == 0)
        throw DegenerateContextError("balanced context needs both classes in the pool");
    const auto quota = balanced_quotas(counts, m);
    return draw_per_class(pool, quota, rng);
}

}  // namespace

ContextWindow sample_balanced(const ContextPool& pool, std::size_t m, std::uint64_t seed) {
    if (m < 2) throw ConfigError("balanced context needs a budget of at least 2");
    Rng rng(seed);
    const auto pos = balanced_positions(pool, m, rng);
    auto w = window_from_positions(pool, pos, {strategy::Balanced{}, m, seed});
    finalize(w);
    return w;
}

ContextWindow sample_oversample_plus(const ContextPool& pool, std::size_t m, double boost,
                                     std::size_t min_minority, std::uint64_t seed) {
    ContextSpec spec{strategy::OversamplePlus{boost, min_minority}, m, seed};
    spec.validate();
    const auto minority = pool.members(1);
    const auto majority = pool.members(0);
    if (minority.empty()) throw DegenerateContextError("oversample_plus: minority class is empty");

    // Class masses under w = boost/n_1 (minority) and 1/n_0 (majority).
    const double p_min = majority.empty() ? 1.0 : boost / (boost + 1.0);
    Rng rng(seed);
    std::vector<std::size_t> pos(m);
    std::vector<std::size_t> majority_slots;
    std::size_t n_min = 0;
    for (std::size_t i = 0; i < m; ++i) {
        if (rng.uniform01() < p_min) {
            pos[i] = minority[rng.below(minority.size())];
            ++n_min;
        } else {
            pos[i] = majority[rng.below(majority.size())];
            majority_slots.push_back(i);
        }
    }
    while (n_min < min_minority && !majority_slots.empty()) {
        const auto k = static_cast<std::size_t>(rng.below(majority_slots.size()));
        pos[majority_slots[k]] = minority[rng.below(minority.size())];
        majority_slots[k] = majority_slots.back();
        majority_slots.pop_back();
        ++n_min;
    }
    auto w = window_from_positions(pool, pos, spec);
    finalize(w);
    return w;
}

ContextWindow sample_smote(const ContextPool& pool, std::size_t m, std::size_t k, std::uint64_t seed) {
    ContextSpec spec{strategy::Smote{k}, m, seed};
    spec.validate();
    const auto& enc = pool.encoded();
    const auto minority = pool.members(1);
    if (minority.size() < 2)
        throw DegenerateContextError("smote needs at least two minority rows to interpolate");

    ContextWindow w;
    w.spec = spec;
    std::size_t k_eff = k;
    if (k_eff > minority.size() - 1) {
        k_eff = minority.size() - 1;
        w.warnings.push_back("smote: k=" + std::to_string(k) + " clamped to " + std::to_string(k_eff));
    }

    Rng rng(seed);
    const std::size_t base_m = std::min(m, pool.size());
    const auto quota = stratified_quotas(pool.counts(), base_m);
    const auto base = draw_per_class(pool, quota, rng);
    std::vector<std::size_t> base_major, base_minor;
    for (auto p : base) (pool.labels()[p] == 1 ? base_minor : base_major).push_back(p);

    const std::size_t target = m / 2;
    if (base_minor.size() > target) base_minor.resize(target);
    if (base_major.size() > m - target) base_major.resize(m - target);
    std::size_t n_syn = target - base_minor.size();
    // Fill any remaining room (a majority class too small for m - target).
    n_syn += m - target - base_major.size();

    for (auto p : base_major) w.rows.push_back({pool.table().row_ids()[p], 0, std::nullopt});
    for (auto p : base_minor) w.rows.push_back({pool.table().row_ids()[p], 1, std::nullopt});

    const auto& x = enc.values;
    const auto d = x.cols();
    std::vector<std::uint8_t> interpolate(static_cast<std::size_t>(d), 0);
    for (Eigen::Index j = 0; j < d; ++j)
        interpolate[static_cast<std::size_t>(j)] =
            enc.encoder->features()[static_cast<std::size_t>(j)].kind == FeatureKind::Standardized;

    std::unordered_map<std::size_t, std::vector<std::size_t>> neighbours;
    auto knn_of = [&](std::size_t a) -> const std::vector<std::size_t>& {
        auto it = neighbours.find(a);
        if (it != neighbours.end()) return it->second;
        std::vector<std::pair<double, std::size_t>> cand;
        cand.reserve(minority.size() - 1);
        for (auto b : minority)
            if (b != a)
                cand.emplace_back(squared_distance(x.row(static_cast<Eigen::Index>(a)).data(),
                                                   x.row(static_cast<Eigen::Index>(b)).data(), d),
                                  b);
        std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(k_eff), cand.end());
        std::vector<std::size_t> nn;
        for (std::size_t i = 0; i < k_eff; ++i) nn.push_back(cand[i].second);
        return neighbours.emplace(a, std::move(nn)).first->second;
    };

    const auto& table = pool.table();
    const double sentinel = enc.encoder->policy().missing_sentinel;
    std::vector<Column> syn_cols;
    for (const auto& c : table.columns()) {
        Column col;
        col.name = c.name;
        col.kind = c.kind;
        col.date_format = c.date_format;
        col.missing_indicator = c.missing_indicator;
        syn_cols.push_back(std::move(col));
    }
    std::vector<RowId> syn_ids;
    w.synthetic_encoded.resize(static_cast<Eigen::Index>(n_syn), d);
    const auto label_col = table.label_name() ? table.find(*table.label_name()) : std::nullopt;

    for (std::size_t s = 0; s < n_syn; ++s) {
        const std::size_t a = minority[rng.below(minority.size())];
        const auto& nn = knn_of(a);
        const std::size_t b = nn[rng.below(nn.size())];
        const double lambda = rng.uniform01();
        const auto ra = static_cast<Eigen::Index>(a), rb = static_cast<Eigen::Index>(b);
        auto row = w.synthetic_encoded.row(static_cast<Eigen::Index>(s));
        for (Eigen::Index j = 0; j < d; ++j)
            row(j) = interpolate[static_cast<std::size_t>(j)] ? x(ra, j) + lambda * (x(rb, j) - x(ra, j)) : x(ra, j);

        for (std::size_t c = 0; c < table.n_columns(); ++c) {
            const auto& src = table.columns()[c];
            auto& dst = syn_cols[c];
            if (label_col && c == *label_col) {
                dst.numbers.push_back(1.0);
                dst.missing.push_back(0);
            } else if (src.kind == ColumnKind::Categorical) {
                dst.strings.push_back(src.strings[a]);
                dst.missing.push_back(src.missing[a]);
            } else {
                const double va = src.is_missing(a) ? sentinel : src.numbers[a];
                const double vb = src.is_missing(b) ? sentinel : src.numbers[b];
                dst.numbers.push_back(va + lambda * (vb - va));
                dst.missing.push_back(0);
            }
        }
        const RowId id = RowId::make_synthetic(s);
        syn_ids.push_back(id);
        w.rows.push_back({id, 1, SyntheticOrigin{table.row_ids()[a], table.row_ids()[b], lambda}});
    }
    w.synthetic = Table(std::move(syn_cols), std::move(syn_ids), table.label_name());
    finalize(w);
    return w;
}

std::vector<std::size_t> diversity_select(const Matrix& points, std::span<const std::size_t> candidates,
                                          std::size_t m, const KMeansParams& params, std::uint64_t seed) {
    const std::size_t n = candidates.size();
    if (m > n)
        throw BudgetError("diversity_km: budget " + std::to_string(m) + " exceeds " + std::to_string(n) +
                          " candidate rows");
    if (m == 0) return {};
    Matrix sub(static_cast<Eigen::Index>(n), points.cols());
    for (std::size_t i = 0; i < n; ++i)
        sub.row(static_cast<Eigen::Index>(i)) = points.row(static_cast<Eigen::Index>(candidates[i]));
    if (m == n) return {candidates.begin(), candidates.end()};

    const auto km = minibatch_kmeans(sub, m, params, seed);
    const auto d = sub.cols();
    constexpr auto kNone = std::numeric_limits<std::size_t>::max();
    std::vector<std::size_t> rep(m, kNone);
    std::vector<double> rep_d(m, std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < n; ++i) {
        const auto c = km.assignment[i];
        const double dd = squared_distance(sub.row(static_cast<Eigen::Index>(i)).data(),
                                           km.centroids.row(static_cast<Eigen::Index>(c)).data(), d);
        if (dd < rep_d[c]) {
            rep_d[c] = dd;
            rep[c] = i;
        }
    }
    std::vector<std::size_t> chosen;
    std::vector<std::uint8_t> taken(n, 0);
    for (auto r : rep)
        if (r != kNone) {
            chosen.push_back(r);
            taken[r] = 1;
        }
    if (chosen.size() < m) {
        // Farthest-point backfill for empty clusters.
        std::vector<double> mind(n, std::numeric_limits<double>::infinity());
        for (std::size_t i = 0; i < n; ++i) {
            if (taken[i]) continue;
            for (auto c : chosen)
                mind[i] = std::min(mind[i], squared_distance(sub.row(static_cast<Eigen::Index>(i)).data(),
                                                             sub.row(static_cast<Eigen::Index>(c)).data(), d));
        }
        while (chosen.size() < m) {
            std::size_t best = kNone;
            for (std::size_t i = 0; i < n; ++i)
                if (!taken[i] && (best == kNone || mind[i] > mind[best])) best = i;
            taken[best] = 1;
            chosen.push_back(best);
            for (std::size_t i = 0; i < n; ++i)
                if (!taken[i])
                    mind[i] = std::min(mind[i], squared_distance(sub.row(static_cast<Eigen::Index>(i)).data(),
                                                                 sub.row(static_cast<Eigen::Index>(best)).data(), d));
        }
    }
    std::vector<std::size_t> out;
    out.reserve(m);
    for (auto c : chosen) out.push_back(candidates[c]);
    return out;
}

ContextWindow sample_diversity_km(const ContextPool& pool, std::size_t m, const KMeansParams& params,
                                  std::uint64_t seed) {
    require_budget(pool, m, "diversity_km");
    ContextSpec spec{strategy::DiversityKM{params}, m, seed};
    std::vector<std::size_t> all(pool.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    const auto pos = diversity_select(pool.encoded().values, all, m, params, seed);
    auto w = window_from_positions(pool, pos, spec);
    finalize(w);
    return w;
}

ContextWindow sample_hybrid(const ContextPool& pool, std::size_t m, double rho, const KMeansParams& params,
                            std::uint64_t seed) {
    ContextSpec spec{strategy::Hybrid{rho, params}, m, seed};
    spec.validate();
    require_budget(pool, m, "hybrid");
    const auto m_bal = static_cast<std::size_t>(std::llround(rho * static_cast<double>(m)));
    std::vector<std::size_t> pos;
    if (m_bal > 0) {
        Rng rng(seed);
        pos = balanced_positions(pool, m_bal, rng);
    }
    if (m_bal < m) {
        std::vector<std::uint8_t> used(pool.size(), 0);
        for (auto p : pos) used[p] = 1;
        std::vector<std::size_t> rest;
        rest.reserve(pool.size() - pos.size());
        for (std::size_t i = 0; i < pool.size(); ++i)
            if (!used[i]) rest.push_back(i);
        const auto div = diversity_select(pool.encoded().values, rest, m - m_bal, params, seed);
        pos.insert(pos.end(), div.begin(), div.end());
    }
    auto w = window_from_positions(pool, pos, spec);
    finalize(w);
    return w;
}

ContextWindow build_context(const ContextPool& pool, const ContextSpec& spec) {
    spec.validate();
    const auto m = spec.budget;
    const auto seed = spec.seed;
    return std::visit(overloaded{
                          [&](const strategy::Uniform&) { return sample_uniform(pool, m, seed); },
                          [&](const strategy::Stratified&) { return sample_stratified(pool, m, seed); },
                          [&](const strategy::Balanced&) { return sample_balanced(pool, m, seed); },
                          [&](const strategy::OversamplePlus& p) {
                              return sample_oversample_plus(pool, m, p.boost, p.min_minority, seed);
                          },
                          [&](const strategy::Smote& p) { return sample_smote(pool, m, p.k, seed); },
                          [&](const strategy::DiversityKM& p) { return sample_diversity_km(pool, m, p.kmeans, seed); },
                          [&](const strategy::Hybrid& p) { return sample_hybrid(pool, m, p.rho, p.kmeans, seed); },
                      },
                      spec.strategy);
}

void check_test_purity(const ContextWindow& window, const std::vector<RowId>& test_ids) {
    std::unordered_set<RowId, RowIdHash> test(test_ids.begin(), test_ids.end());
    for (const auto& r : window.rows) {
        if (test.count(r.id))
            throw LeakageError("test row id " + std::to_string(r.id.value) + " found in context window");
        if (r.origin && (test.count(r.origin->base) || test.count(r.origin->neighbor)))
            throw LeakageError("synthetic row generated from test row");
    }
}

}  // namespace tabctx

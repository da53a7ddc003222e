#include "tabctx/ingest.hpp"

#include <algorithm>
#include <fnmatch.h>
#include <map>

#include "tabctx/error.hpp"
#include "tabctx/quota.hpp"
#include "tabctx/random.hpp"
#include "tabctx/schema.hpp"

namespace tabctx {

namespace {

bool is_glob(const std::string& p) { return p.find_first_of("*?[") != std::string::npos; }

bool matches(const std::string& pattern, const std::string& name) {
    return is_glob(pattern) ? fnmatch(pattern.c_str(), name.c_str(), 0) == 0 : pattern == name;
}

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

}  // namespace

Table impute(const Table& table, const std::vector<ImputationRule>& rules) {
    std::vector<Column> cols = table.columns();
    const std::size_t n_original = cols.size();
    std::map<std::string, int> sentinel_rules;

    for (const auto& rule : rules) {
        std::vector<std::size_t> targets;
        for (std::size_t c = 0; c < n_original; ++c) {
            const auto& col = cols[c];
            if (col.missing_indicator) continue;
            if (table.label_name() && col.name == *table.label_name()) continue;
            if (matches(rule.pattern, col.name)) targets.push_back(c);
        }
        if (targets.empty())
            throw ConfigError("imputation rule '" + rule.pattern + "' matches no column");

        std::visit(
            overloaded{
                [&](const NumericSentinel& a) {
                    bool any = false;
                    for (auto c : targets) {
                        auto& col = cols[c];
                        if (col.kind != ColumnKind::Numeric) continue;
                        any = true;
                        if (++sentinel_rules[col.name] > 1)
                            throw ConfigError("column '" + col.name + "' has more than one sentinel rule");
                        for (std::size_t i = 0; i < col.size(); ++i)
                            if (col.missing[i]) {
                                col.numbers[i] = a.value;
                                col.missing[i] = 0;
                            }
                    }
                    if (!any)
                        throw ConfigError("numeric sentinel rule '" + rule.pattern +
                                          "' matches no numeric column");
                },
                [&](const CategoryToken& a) {
                    bool any = false;
                    for (auto c : targets) {
                        auto& col = cols[c];
                        if (col.kind != ColumnKind::Categorical) continue;
                        any = true;
                        if (++sentinel_rules[col.name] > 1)
                            throw ConfigError("column '" + col.name + "' has more than one sentinel rule");
                        for (std::size_t i = 0; i < col.size(); ++i)
                            if (col.missing[i]) {
                                col.strings[i] = a.token;
                                col.missing[i] = 0;
                            }
                    }
                    if (!any)
                        throw ConfigError("category token rule '" + rule.pattern +
                                          "' matches no categorical column");
                },
                [&](const AddMissingIndicator&) {
                    for (auto c : targets) {
                        const auto& source = table.columns()[c];
                        const std::string name = source.name + "_missing";
                        const bool exists = std::any_of(cols.begin(), cols.end(),
                                                        [&](const Column& x) { return x.name == name; });
                        if (exists) continue;
                        std::vector<double> flag(source.size());
                        for (std::size_t i = 0; i < source.size(); ++i) flag[i] = source.missing[i] ? 1.0 : 0.0;
                        auto ind = Column::numeric(name, std::move(flag));
                        ind.missing_indicator = true;
                        cols.push_back(std::move(ind));
                    }
                },
            },
            rule.action);
    }
    return Table(std::move(cols), table.row_ids(), table.label_name());
}

CompareOp compare_op_from_string(std::string_view s) {
    if (s == ">") return CompareOp::Greater;
    if (s == ">=") return CompareOp::GreaterEqual;
    if (s == "<") return CompareOp::Less;
    if (s == "<=") return CompareOp::LessEqual;
    if (s == "==") return CompareOp::Equal;
    if (s == "!=") return CompareOp::NotEqual;
    throw ConfigError("unknown comparison '" + std::string(s) + "'");
}

namespace {

const Column& numeric_operand(const Table& t, const std::string& name, const std::string& recipe) {
    auto i = t.find(name);
    if (!i) throw ConfigError("recipe '" + recipe + "' references missing column '" + name + "'");
    const auto& col = t.columns()[*i];
    if (col.kind != ColumnKind::Numeric)
        throw ConfigError("recipe '" + recipe + "' operand '" + name + "' is not numeric");
    return col;
}

bool compare(double v, CompareOp op, double t) {
    switch (op) {
        case CompareOp::Greater: return v > t;
        case CompareOp::GreaterEqual: return v >= t;
        case CompareOp::Less: return v < t;
        case CompareOp::LessEqual: return v <= t;
        case CompareOp::Equal: return v == t;
        case CompareOp::NotEqual: return v != t;
    }
    return false;
}

}  // namespace

Table engineer(const Table& table, const std::vector<FeatureRecipe>& recipes) {
    Table out = table;
    for (const auto& r : recipes) {
        if (out.find(r.name)) throw ConfigError("recipe output '" + r.name + "' already exists");
        const std::size_t n = out.n_rows();
        std::vector<double> values(n, r.sentinel);
        std::visit(overloaded{
                       [&](const Ratio& k) {
                           const auto& a = numeric_operand(out, k.numerator, r.name);
                           const auto& b = numeric_operand(out, k.denominator, r.name);
                           for (std::size_t i = 0; i < n; ++i) {
                               if (a.is_missing(i) || b.is_missing(i)) continue;
                               const double d = b.numbers[i];
                               if (d == 0.0 || d == r.sentinel) continue;
                               values[i] = a.numbers[i] / d;
                           }
                       },
                       [&](const Difference& k) {
                           const auto& a = numeric_operand(out, k.a, r.name);
                           const auto& b = numeric_operand(out, k.b, r.name);
                           for (std::size_t i = 0; i < n; ++i)
                               if (!a.is_missing(i) && !b.is_missing(i)) values[i] = a.numbers[i] - b.numbers[i];
                       },
                       [&](const Flag& k) {
                           const auto& a = numeric_operand(out, k.column, r.name);
                           for (std::size_t i = 0; i < n; ++i)
                               if (!a.is_missing(i)) values[i] = compare(a.numbers[i], k.op, k.threshold) ? 1.0 : 0.0;
                       },
                   },
                   r.kind);
        out = out.with_column(Column::numeric(r.name, std::move(values)));
    }
    return out;
}

namespace {

SplitResult partition(const Table& table, std::vector<std::uint8_t> is_test) {
    std::vector<std::size_t> train, test;
    for (std::size_t i = 0; i < is_test.size(); ++i) (is_test[i] ? test : train).push_back(i);
    if (train.empty() || test.empty())
        throw DataError("degenerate split: train has " + std::to_string(train.size()) + " rows, test has " +
                        std::to_string(test.size()));
    return {table.take(train), table.take(test)};
}

double cutoff_seconds(const Column& col, const Temporal& spec) {
    auto cut = parse_timestamp(spec.cutoff, col.date_format);
    if (!cut)
        throw ConfigError("cutoff '" + spec.cutoff + "' does not match date format '" + col.date_format + "'");
    return *cut;
}

const Column& timestamp_column(const Table& t, const Temporal& spec) {
    const auto& col = t.column(spec.column);
    if (col.kind != ColumnKind::Timestamp)
        throw ConfigError("split column '" + spec.column + "' is not a timestamp");
    return col;
}

}  // namespace

SplitResult split(const Table& table, const SplitSpec& spec) {
    return std::visit(
        overloaded{
            [&](const Temporal& t) {
                const auto& col = timestamp_column(table, t);
                const double cut = cutoff_seconds(col, t);
                std::vector<std::uint8_t> is_test(table.n_rows());
                for (std::size_t i = 0; i < table.n_rows(); ++i) {
                    if (col.is_missing(i))
                        throw DataError("row id " + std::to_string(table.row_ids()[i].value) +
                                        " has no timestamp in '" + t.column + "'");
                    is_test[i] = col.numbers[i] > cut ? 1 : 0;
                }
                auto result = partition(table, std::move(is_test));
                check_temporal_split(result.train, result.test, t);
                return result;
            },
            [&](const RandomStratified& s) {
                if (!(s.test_fraction > 0.0 && s.test_fraction < 1.0))
                    throw ConfigError("test_fraction must lie in (0,1)");
                const auto y = table.labels();
                std::vector<std::size_t> members[2];
                for (std::size_t i = 0; i < y.size(); ++i) members[y[i]].push_back(i);
                const auto n_test = static_cast<std::size_t>(
                    std::llround(s.test_fraction * static_cast<double>(table.n_rows())));
                const std::size_t sizes[2] = {members[0].size(), members[1].size()};
                const auto quota = largest_remainder(n_test, sizes);
                Rng rng(s.seed);
                std::vector<std::uint8_t> is_test(table.n_rows(), 0);
                for (int c = 0; c < 2; ++c) {
                    rng.shuffle(members[c]);
                    for (std::size_t k = 0; k < quota[c]; ++k) is_test[members[c][k]] = 1;
                }
                return partition(table, std::move(is_test));
            },
        },
        spec);
}

void check_temporal_split(const Table& train, const Table& test, const Temporal& spec) {
    const auto& tr = timestamp_column(train, spec);
    const auto& te = timestamp_column(test, spec);
    const double cut = cutoff_seconds(tr, spec);
    for (std::size_t i = 0; i < train.n_rows(); ++i)
        if (tr.is_missing(i) || tr.numbers[i] > cut)
            throw LeakageError("temporal leakage: train row id " + std::to_string(train.row_ids()[i].value) +
                               " is after cutoff " + spec.cutoff);
    for (std::size_t i = 0; i < test.n_rows(); ++i)
        if (te.is_missing(i) || te.numbers[i] <= cut)
            throw LeakageError("temporal leakage: test row id " + std::to_string(test.row_ids()[i].value) +
                               " is not after cutoff " + spec.cutoff);
}

}  // namespace tabctx

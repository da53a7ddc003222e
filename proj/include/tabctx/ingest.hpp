#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "tabctx/table.hpp"

namespace tabctx {

// ---- imputation ----------------------------------------------------------

struct NumericSentinel {
    double value = -1.0;
};
struct CategoryToken {
    std::string token = "MISSING";
};
// Appends `<column>_missing` with 1 where the entry was originally missing.
struct AddMissingIndicator {};

using ImputationAction = std::variant<NumericSentinel, CategoryToken, AddMissingIndicator>;

// `pattern` is an exact column name or a glob ("*", "?", "[...]").
struct ImputationRule {
    std::string pattern;
    ImputationAction action;
};

// Rules apply in declaration order. Indicators reflect missingness of the
// input table, so their position in the rule list does not matter.
Table impute(const Table& table, const std::vector<ImputationRule>& rules);

// ---- feature engineering -------------------------------------------------

enum class CompareOp { Greater, GreaterEqual, Less, LessEqual, Equal, NotEqual };
CompareOp compare_op_from_string(std::string_view s);

struct Ratio {
    std::string numerator;
    std::string denominator;
};
struct Difference {
    std::string a;
    std::string b;
};
struct Flag {
    std::string column;
    CompareOp op = CompareOp::Greater;
    double threshold = 0.0;
};

// Derived column. A zero or sentinel denominator, or any missing operand,
// yields `sentinel`.
struct FeatureRecipe {
    std::string name;
    std::variant<Ratio, Difference, Flag> kind;
    double sentinel = -1.0;
};

Table engineer(const Table& table, const std::vector<FeatureRecipe>& recipes);

// ---- splitting -----------------------------------------------------------

struct RandomStratified {
    double test_fraction = 0.25;
    std::uint64_t seed = 0;
};
struct Temporal {
    std::string column;
    std::string cutoff;  // parsed with the column's date format
};
using SplitSpec = std::variant<RandomStratified, Temporal>;

struct SplitResult {
    Table train;
    Table test;
};

SplitResult split(const Table& table, const SplitSpec& spec);

// Leakage guard: every train timestamp <= cutoff < every test timestamp.
void check_temporal_split(const Table& train, const Table& test, const Temporal& spec);

}  // namespace tabctx

#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tabctx/table.hpp"

namespace tabctx {

struct RawColumn {
    std::string name;
    std::vector<std::string> values;
};

struct ColumnSchema {
    std::string name;
    ColumnKind kind = ColumnKind::Numeric;
    friend bool operator==(const ColumnSchema&, const ColumnSchema&) = default;
};

using Schema = std::vector<ColumnSchema>;

struct SchemaOptions {
    // strftime-style, e.g. "%Y-%m-%d". Timestamp inference is off when unset.
    std::optional<std::string> date_format;
    std::vector<std::string> missing_tokens{"", "NA"};
    // Minimum share of non-missing entries that must parse as reals.
    double numeric_fraction = 0.99;
    std::map<std::string, ColumnKind, std::less<>> hints;

    bool is_missing(std::string_view s) const;
};

// Numeric if >= numeric_fraction of the non-missing entries parse as reals,
// Timestamp if every non-missing entry parses under the date format, else
// Categorical. Hints override inference.
Schema infer_schema(const std::vector<RawColumn>& raw, const SchemaOptions& options);

// Builds a typed Table from raw strings. Entries of a Numeric column that do
// not parse become missing; a Timestamp entry that does not parse is a
// DataError naming the row (1-based data row, plus `first_line` offset).
Table build_table(const std::vector<RawColumn>& raw, const Schema& schema,
                  const SchemaOptions& options, std::size_t first_line = 2);

bool parse_real(std::string_view s, double& out);

// Seconds since the Unix epoch (UTC) or nullopt.
std::optional<double> parse_timestamp(std::string_view s, const std::string& format);
std::string format_timestamp(double seconds, const std::string& format);

// Shortest round-trip decimal representation.
std::string format_real(double v);

}  // namespace tabctx

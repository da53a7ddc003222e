#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace tabctx {

enum class ColumnKind { Numeric, Categorical, Timestamp };

std::string_view to_string(ColumnKind kind);
ColumnKind column_kind_from_string(std::string_view s);

// Stable opaque row identity. Synthetic rows (generated by SMOTE) carry the
// high bit so they can never collide with an ingested row.
struct RowId {
    static constexpr std::uint64_t kSyntheticBit = std::uint64_t{1} << 63;

    std::uint64_t value = 0;

    constexpr bool synthetic() const noexcept { return (value & kSyntheticBit) != 0; }
    static constexpr RowId make_synthetic(std::uint64_t seq) noexcept {
        return RowId{seq | kSyntheticBit};
    }
    friend constexpr auto operator<=>(RowId, RowId) = default;
};

struct RowIdHash {
    std::size_t operator()(RowId id) const noexcept { return std::hash<std::uint64_t>{}(id.value); }
};

// One typed column. Numeric and Timestamp columns use `numbers` (timestamps
// are seconds since the Unix epoch), Categorical columns use `strings`.
// `missing[i] != 0` marks an absent entry; the stored value is then ignored.
struct Column {
    std::string name;
    ColumnKind kind = ColumnKind::Numeric;
    std::vector<double> numbers;
    std::vector<std::string> strings;
    std::vector<std::uint8_t> missing;
    std::string date_format;         // Timestamp only
    bool missing_indicator = false;  // appended by impute()

    std::size_t size() const noexcept { return missing.size(); }
    bool is_missing(std::size_t i) const noexcept { return missing[i] != 0; }
    bool any_missing() const noexcept;

    static Column numeric(std::string name, std::vector<double> values);
    static Column categorical(std::string name, std::vector<std::string> values);
    Column take(std::span<const std::size_t> rows) const;
};

struct ClassCounts {
    std::size_t n0 = 0;
    std::size_t n1 = 0;

    std::size_t total() const noexcept { return n0 + n1; }
    std::size_t of(int label) const noexcept { return label == 1 ? n1 : n0; }
    // n_minority / n, in [0, 0.5]; 0 for an empty or single-class table.
    double ratio() const noexcept;

    friend bool operator==(const ClassCounts&, const ClassCounts&) = default;
};

ClassCounts count_labels(std::span<const int> labels);

// Immutable columnar table. Construction validates the invariants; every
// transformation returns a new Table.
class Table {
public:
    Table() = default;
    // Row ids default to 0..n-1 when `row_ids` is empty.
    Table(std::vector<Column> columns, std::vector<RowId> row_ids = {},
          std::optional<std::string> label = std::nullopt);

    std::size_t n_rows() const noexcept { return row_ids_.size(); }
    std::size_t n_columns() const noexcept { return columns_.size(); }
    const std::vector<Column>& columns() const noexcept { return columns_; }
    const std::vector<RowId>& row_ids() const noexcept { return row_ids_; }
    const std::optional<std::string>& label_name() const noexcept { return label_; }

    std::optional<std::size_t> find(std::string_view name) const;
    const Column& column(std::string_view name) const;
    bool has_label() const noexcept { return label_.has_value(); }

    // Label values as 0/1; DataError naming the row id otherwise.
    std::vector<int> labels() const;

    Table take(std::span<const std::size_t> rows) const;
    Table with_column(Column col) const;
    Table with_column_replaced(std::size_t index, Column col) const;
    Table with_label(std::optional<std::string> label) const;

    // Positions of feature columns (everything except the label).
    std::vector<std::size_t> feature_columns() const;

private:
    std::vector<Column> columns_;
    std::vector<RowId> row_ids_;
    std::optional<std::string> label_;
};

ClassCounts class_counts(const Table& table);

// Rows of `a` followed by rows of `b`; schemas (names, kinds, order) must match.
Table concat_rows(const Table& a, const Table& b);

// row id -> row position.
std::unordered_map<RowId, std::size_t, RowIdHash> index_by_id(const Table& table);

}  // namespace tabctx

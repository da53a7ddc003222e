#include "tabctx/table.hpp"

#include <algorithm>
#include <unordered_set>

#include "tabctx/error.hpp"

namespace tabctx {

std::string_view to_string(ColumnKind kind) {
    switch (kind) {
        case ColumnKind::Numeric: return "numeric";
        case ColumnKind::Categorical: return "categorical";
        case ColumnKind::Timestamp: return "timestamp";
    }
    return "?";
}

ColumnKind column_kind_from_string(std::string_view s) {
    if (s == "numeric") return ColumnKind::Numeric;
    if (s == "categorical") return ColumnKind::Categorical;
    if (s == "timestamp") return ColumnKind::Timestamp;
    throw ConfigError("unknown column kind '" + std::string(s) + "'");
}

bool Column::any_missing() const noexcept {
    return std::any_of(missing.begin(), missing.end(), [](std::uint8_t m) { return m != 0; });
}

Column Column::numeric(std::string name, std::vector<double> values) {
    Column c;
    c.name = std::move(name);
    c.kind = ColumnKind::Numeric;
    c.missing.assign(values.size(), 0);
    c.numbers = std::move(values);
    return c;
}

Column Column::categorical(std::string name, std::vector<std::string> values) {
    Column c;
    c.name = std::move(name);
    c.kind = ColumnKind::Categorical;
    c.missing.assign(values.size(), 0);
    c.strings = std::move(values);
    return c;
}

Column Column::take(std::span<const std::size_t> rows) const {
    Column out;
    out.name = name;
    out.kind = kind;
    out.date_format = date_format;
    out.missing_indicator = missing_indicator;
    out.missing.reserve(rows.size());
    if (kind == ColumnKind::Categorical) {
        out.strings.reserve(rows.size());
        for (auto r : rows) out.strings.push_back(strings[r]);
    } else {
        out.numbers.reserve(rows.size());
        for (auto r : rows) out.numbers.push_back(numbers[r]);
    }
    for (auto r : rows) out.missing.push_back(missing[r]);
    return out;
}

double ClassCounts::ratio() const noexcept {
    const auto n = total();
    if (n == 0) return 0.0;
    return static_cast<double>(std::min(n0, n1)) / static_cast<double>(n);
}

ClassCounts count_labels(std::span<const int> labels) {
    ClassCounts c;
    for (int y : labels) (y == 1 ? c.n1 : c.n0)++;
    return c;
}

Table::Table(std::vector<Column> columns, std::vector<RowId> row_ids,
             std::optional<std::string> label)
    : columns_(std::move(columns)), row_ids_(std::move(row_ids)), label_(std::move(label)) {
    const std::size_t n = columns_.empty() ? row_ids_.size() : columns_.front().size();
    std::unordered_set<std::string_view> names;
    for (const auto& c : columns_) {
        const bool storage_ok = c.kind == ColumnKind::Categorical ? c.strings.size() == c.size()
                                                                  : c.numbers.size() == c.size();
        if (c.size() != n || !storage_ok)
            throw StructuralError("column '" + c.name + "' has " + std::to_string(c.size()) +
                                  " entries, expected " + std::to_string(n));
        if (!names.insert(c.name).second)
            throw StructuralError("duplicate column name '" + c.name + "'");
    }
    if (row_ids_.empty() && n > 0) {
        row_ids_.resize(n);
        for (std::size_t i = 0; i < n; ++i) row_ids_[i] = RowId{i};
    }
    if (row_ids_.size() != n)
        throw StructuralError("row id count " + std::to_string(row_ids_.size()) +
                              " does not match row count " + std::to_string(n));
    std::unordered_set<RowId, RowIdHash> seen;
    seen.reserve(n);
    for (auto id : row_ids_)
        if (!seen.insert(id).second)
            throw StructuralError("duplicate row id " + std::to_string(id.value));
    if (label_) {
        const auto& col = column(*label_);
        if (col.kind != ColumnKind::Numeric)
            throw StructuralError("label column '" + *label_ + "' must be numeric");
    }
}

std::optional<std::size_t> Table::find(std::string_view name) const {
    for (std::size_t i = 0; i < columns_.size(); ++i)
        if (columns_[i].name == name) return i;
    return std::nullopt;
}

const Column& Table::column(std::string_view name) const {
    auto i = find(name);
    if (!i) throw ConfigError("no column named '" + std::string(name) + "'");
    return columns_[*i];
}

std::vector<int> Table::labels() const {
    if (!label_) throw ConfigError("table has no label column");
    const auto& col = column(*label_);
    std::vector<int> out(n_rows());
    for (std::size_t i = 0; i < n_rows(); ++i) {
        const double v = col.numbers[i];
        if (col.is_missing(i) || (v != 0.0 && v != 1.0))
            throw DataError("label outside {0,1} at row id " + std::to_string(row_ids_[i].value));
        out[i] = v == 1.0 ? 1 : 0;
    }
    return out;
}

Table Table::take(std::span<const std::size_t> rows) const {
    std::vector<Column> cols;
    cols.reserve(columns_.size());
    for (const auto& c : columns_) cols.push_back(c.take(rows));
    std::vector<RowId> ids;
    ids.reserve(rows.size());
    for (auto r : rows) ids.push_back(row_ids_.at(r));
    if (cols.empty()) {
        Table t;
        t.row_ids_ = std::move(ids);
        t.label_ = label_;
        return t;
    }
    return Table(std::move(cols), std::move(ids), label_);
}

Table Table::with_column(Column col) const {
    auto cols = columns_;
    cols.push_back(std::move(col));
    return Table(std::move(cols), row_ids_, label_);
}

Table Table::with_column_replaced(std::size_t index, Column col) const {
    auto cols = columns_;
    cols.at(index) = std::move(col);
    return Table(std::move(cols), row_ids_, label_);
}

Table Table::with_label(std::optional<std::string> label) const {
    return Table(columns_, row_ids_, std::move(label));
}

std::vector<std::size_t> Table::feature_columns() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < columns_.size(); ++i)
        if (!label_ || columns_[i].name != *label_) out.push_back(i);
    return out;
}

ClassCounts class_counts(const Table& table) {
    const auto y = table.labels();
    return count_labels(y);
}

Table concat_rows(const Table& a, const Table& b) {
    if (a.n_columns() != b.n_columns()) throw StructuralError("concat_rows: column count mismatch");
    std::vector<Column> cols = a.columns();
    for (std::size_t c = 0; c < cols.size(); ++c) {
        const auto& src = b.columns()[c];
        auto& dst = cols[c];
        if (src.name != dst.name || src.kind != dst.kind)
            throw StructuralError("concat_rows: column '" + src.name + "' does not match '" + dst.name + "'");
        dst.numbers.insert(dst.numbers.end(), src.numbers.begin(), src.numbers.end());
        dst.strings.insert(dst.strings.end(), src.strings.begin(), src.strings.end());
        dst.missing.insert(dst.missing.end(), src.missing.begin(), src.missing.end());
    }
    auto ids = a.row_ids();
    ids.insert(ids.end(), b.row_ids().begin(), b.row_ids().end());
    return Table(std::move(cols), std::move(ids), a.label_name());
}

std::unordered_map<RowId, std::size_t, RowIdHash> index_by_id(const Table& table) {
    std::unordered_map<RowId, std::size_t, RowIdHash> idx;
    idx.reserve(table.n_rows());
    for (std::size_t i = 0; i < table.n_rows(); ++i) idx.emplace(table.row_ids()[i], i);
    return idx;
}

}  // namespace tabctx

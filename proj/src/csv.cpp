#include "tabctx/csv.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <unordered_set>

#include <spdlog/spdlog.h>

#include "tabctx/error.hpp"

namespace tabctx {

CsvRecords parse_csv(std::istream& in, char delimiter) {
    CsvRecords out;
    std::vector<std::string> record;
    std::string field;
    bool in_quotes = false;
    bool field_started = false;
    std::size_t line = 1;
    std::size_t record_line = 1;
    bool any = false;

    auto end_field = [&] {
        record.push_back(std::move(field));
        field.clear();
        field_started = false;
    };
    auto end_record = [&] {
        end_field();
        if (out.header.empty() && !any) {
            out.header = std::move(record);
            any = true;
        } else if (!(record.size() == 1 && record.front().empty())) {
            out.rows.push_back(std::move(record));
            out.line_of_row.push_back(record_line);
        }
        record.clear();
    };

    char ch;
    while (in.get(ch)) {
        if (in_quotes) {
            if (ch == '"') {
                if (in.peek() == '"') {
                    in.get(ch);
                    field.push_back('"');
                } else {
                    in_quotes = false;
                }
            } else {
                if (ch == '\n') ++line;
                field.push_back(ch);
            }
            continue;
        }
        if (ch == '"' && !field_started) {
            in_quotes = true;
            field_started = true;
        } else if (ch == delimiter) {
            end_field();
        } else if (ch == '\n') {
            if (!field.empty() && field.back() == '\r') field.pop_back();
            end_record();
            ++line;
            record_line = line;
        } else {
            field.push_back(ch);
            field_started = true;
        }
    }
    if (in_quotes)
        throw StructuralError("line " + std::to_string(record_line) + ": unterminated quoted field");
    if (field_started || !field.empty() || !record.empty()) end_record();
    if (out.header.empty()) throw StructuralError("CSV has no header row");

    std::unordered_set<std::string_view> names;
    for (const auto& h : out.header)
        if (!names.insert(h).second) throw StructuralError("duplicate header name '" + h + "'");
    for (std::size_t r = 0; r < out.rows.size(); ++r)
        if (out.rows[r].size() != out.header.size())
            throw StructuralError("line " + std::to_string(out.line_of_row[r]) + ": expected " +
                                  std::to_string(out.header.size()) + " fields, found " +
                                  std::to_string(out.rows[r].size()));
    return out;
}

Column normalize_label(const RawColumn& raw, const SchemaOptions& options, bool& flipped,
                       std::size_t first_line) {
    std::map<std::string, std::size_t> counts;
    for (std::size_t i = 0; i < raw.values.size(); ++i) {
        const auto& v = raw.values[i];
        if (options.is_missing(v))
            throw DataError("line " + std::to_string(first_line + i) + ": missing label");
        ++counts[v];
    }
    if (counts.size() > 2)
        throw DataError("label column '" + raw.name + "' has " + std::to_string(counts.size()) +
                        " distinct values; only binary targets are supported");

    // Decide which token is class 1: the minority token. A 0/1 column keeps
    // its reading unless 1 is the strict majority; other tokens tie-break to
    // the lexicographically greater one.
    const bool zero_one = std::all_of(counts.begin(), counts.end(), [](const auto& kv) {
        double x;
        return parse_real(kv.first, x) && (x == 0.0 || x == 1.0);
    });
    auto is_one = [](const std::string& tok) {
        double x;
        return parse_real(tok, x) && x == 1.0;
    };
    std::string positive;
    flipped = false;
    if (zero_one) {
        std::size_t ones = 0, zeros = 0;
        std::string one_tok, zero_tok;
        for (const auto& [tok, n] : counts) {
            if (is_one(tok)) {
                ones += n;
                one_tok = tok;
            } else {
                zeros += n;
                zero_tok = tok;
            }
        }
        flipped = ones > zeros && zeros > 0;
        positive = flipped ? zero_tok : one_tok;
    } else if (counts.size() == 2) {
        auto first = counts.begin();
        auto second = std::next(first);
        positive = first->second < second->second ? first->first : second->first;
    }
    std::vector<double> values(raw.values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        const bool pos = zero_one ? (is_one(raw.values[i]) != flipped) : raw.values[i] == positive;
        values[i] = pos ? 1.0 : 0.0;
    }
    return Column::numeric(raw.name, std::move(values));
}

Table read_csv(std::istream& in, const CsvOptions& options) {
    auto rec = parse_csv(in, options.delimiter);
    const std::size_t first_line = rec.line_of_row.empty() ? 2 : rec.line_of_row.front();

    std::vector<RawColumn> raw;
    std::optional<RawColumn> id_raw;
    std::optional<RawColumn> label_raw;
    for (std::size_t c = 0; c < rec.header.size(); ++c) {
        RawColumn col{rec.header[c], {}};
        col.values.reserve(rec.rows.size());
        for (auto& row : rec.rows) col.values.push_back(std::move(row[c]));
        if (!options.id_column.empty() && col.name == options.id_column)
            id_raw = std::move(col);
        else if (options.label && col.name == *options.label)
            label_raw = std::move(col);
        else
            raw.push_back(std::move(col));
    }
    if (options.label && !label_raw)
        throw ConfigError("label column '" + *options.label + "' not found in header");
    if (raw.empty() && !label_raw) throw StructuralError("CSV has no data columns");

    std::vector<RowId> ids;
    if (id_raw) {
        ids.reserve(id_raw->values.size());
        for (std::size_t i = 0; i < id_raw->values.size(); ++i) {
            const auto& v = id_raw->values[i];
            std::uint64_t x = 0;
            auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
            if (ec != std::errc{} || p != v.data() + v.size())
                throw DataError("line " + std::to_string(rec.line_of_row[i]) + ": bad row id '" + v + "'");
            ids.push_back(RowId{x});
        }
    }

    auto schema = raw.empty() ? Schema{} : infer_schema(raw, options.schema);
    Table base = raw.empty() ? Table() : build_table(raw, schema, options.schema, first_line);
    std::vector<Column> cols = base.columns();
    std::optional<std::string> label;
    if (label_raw) {
        bool flipped = false;
        cols.push_back(normalize_label(*label_raw, options.schema, flipped, first_line));
        if (flipped)
            spdlog::info("label '{}': class 1 was the majority; relabelled so the minority is 1",
                         label_raw->name);
        label = label_raw->name;
    }
    return Table(std::move(cols), std::move(ids), std::move(label));
}

Table load_csv(const std::filesystem::path& path, const CsvOptions& options) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open '" + path.string() + "'");
    return read_csv(in, options);
}

namespace {

void write_field(std::ostream& out, const std::string& s, char delimiter) {
    const bool quote = s.find_first_of(std::string{delimiter, '"', '\n', '\r'}) != std::string::npos;
    if (!quote) {
        out << s;
        return;
    }
    out << '"';
    for (char c : s) {
        if (c == '"') out << '"';
        out << c;
    }
    out << '"';
}

}  // namespace

void write_csv(std::ostream& out, const Table& table, const CsvOptions& options) {
    const char d = options.delimiter;
    out << options.id_column;
    for (const auto& c : table.columns()) {
        out << d;
        write_field(out, c.name, d);
    }
    out << '\n';
    for (std::size_t i = 0; i < table.n_rows(); ++i) {
        out << table.row_ids()[i].value;
        for (const auto& c : table.columns()) {
            out << d;
            if (c.is_missing(i)) continue;
            switch (c.kind) {
                case ColumnKind::Numeric: out << format_real(c.numbers[i]); break;
                case ColumnKind::Timestamp: out << format_timestamp(c.numbers[i], c.date_format); break;
                case ColumnKind::Categorical: write_field(out, c.strings[i], d); break;
            }
        }
        out << '\n';
    }
}

void save_csv(const std::filesystem::path& path, const Table& table, const CsvOptions& options) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write '" + path.string() + "'");
    write_csv(out, table, options);
}

}  // namespace tabctx

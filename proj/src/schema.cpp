#include "tabctx/schema.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <iomanip>
#include <locale>
#include <sstream>

#include "tabctx/error.hpp"

namespace tabctx {

bool SchemaOptions::is_missing(std::string_view s) const {
    return std::find(missing_tokens.begin(), missing_tokens.end(), s) != missing_tokens.end();
}

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

}  // namespace

bool parse_real(std::string_view s, double& out) {
    s = trim(s);
    if (s.empty()) return false;
    if (s.front() == '+') s.remove_prefix(1);
    const char* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, out);
    return ec == std::errc{} && ptr == end && std::isfinite(out);
}

std::optional<double> parse_timestamp(std::string_view s, const std::string& format) {
    s = trim(s);
    if (s.empty()) return std::nullopt;
    std::tm tm{};
    std::istringstream in{std::string(s)};
    in.imbue(std::locale::classic());
    in >> std::get_time(&tm, format.c_str());
    if (in.fail()) return std::nullopt;
    in >> std::ws;
    if (!in.eof()) return std::nullopt;
    using namespace std::chrono;
    const year_month_day ymd{year{tm.tm_year + 1900}, month{static_cast<unsigned>(tm.tm_mon + 1)},
                             day{static_cast<unsigned>(tm.tm_mday)}};
    if (!ymd.ok()) return std::nullopt;
    const auto days = sys_days{ymd}.time_since_epoch().count();
    return static_cast<double>(days) * 86400.0 + tm.tm_hour * 3600.0 + tm.tm_min * 60.0 + tm.tm_sec;
}

std::string format_timestamp(double seconds, const std::string& format) {
    using namespace std::chrono;
    const auto secs = static_cast<long long>(std::floor(seconds));
    const auto days = static_cast<int>(std::floor(static_cast<double>(secs) / 86400.0));
    const year_month_day ymd{sys_days{std::chrono::days{days}}};
    const long long rem = secs - static_cast<long long>(days) * 86400;
    std::tm tm{};
    tm.tm_year = static_cast<int>(ymd.year()) - 1900;
    tm.tm_mon = static_cast<int>(static_cast<unsigned>(ymd.month())) - 1;
    tm.tm_mday = static_cast<int>(static_cast<unsigned>(ymd.day()));
    tm.tm_hour = static_cast<int>(rem / 3600);
    tm.tm_min = static_cast<int>((rem % 3600) / 60);
    tm.tm_sec = static_cast<int>(rem % 60);
    std::ostringstream out;
    out.imbue(std::locale::classic());
    out << std::put_time(&tm, format.c_str());
    return out.str();
}

std::string format_real(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

Schema infer_schema(const std::vector<RawColumn>& raw, const SchemaOptions& options) {
    if (raw.empty()) throw StructuralError("cannot infer a schema for an empty table");
    const auto n = raw.front().values.size();
    if (n == 0) throw StructuralError("cannot infer a schema for a table without rows");
    Schema schema;
    schema.reserve(raw.size());
    for (const auto& col : raw) {
        if (col.values.size() != n)
            throw StructuralError("ragged column '" + col.name + "': " +
                                  std::to_string(col.values.size()) + " entries, expected " +
                                  std::to_string(n));
        if (auto h = options.hints.find(col.name); h != options.hints.end()) {
            schema.push_back({col.name, h->second});
            continue;
        }
        std::size_t present = 0, reals = 0, dates = 0;
        double tmp;
        for (const auto& v : col.values) {
            if (options.is_missing(v)) continue;
            ++present;
            if (parse_real(v, tmp)) ++reals;
            if (options.date_format && parse_timestamp(v, *options.date_format)) ++dates;
        }
        ColumnKind kind = ColumnKind::Categorical;
        if (static_cast<double>(reals) >= options.numeric_fraction * static_cast<double>(present))
            kind = ColumnKind::Numeric;
        else if (options.date_format && dates == present)
            kind = ColumnKind::Timestamp;
        schema.push_back({col.name, kind});
    }
    return schema;
}

Table build_table(const std::vector<RawColumn>& raw, const Schema& schema,
                  const SchemaOptions& options, std::size_t first_line) {
    if (raw.size() != schema.size()) throw StructuralError("schema/column count mismatch");
    std::vector<Column> cols;
    cols.reserve(raw.size());
    for (std::size_t c = 0; c < raw.size(); ++c) {
        const auto& rc = raw[c];
        Column col;
        col.name = rc.name;
        col.kind = schema[c].kind;
        const auto n = rc.values.size();
        col.missing.assign(n, 0);
        if (col.kind == ColumnKind::Categorical) {
            col.strings.resize(n);
            for (std::size_t i = 0; i < n; ++i) {
                if (options.is_missing(rc.values[i]))
                    col.missing[i] = 1;
                else
                    col.strings[i] = rc.values[i];
            }
        } else {
            col.numbers.assign(n, 0.0);
            if (col.kind == ColumnKind::Timestamp) {
                if (!options.date_format)
                    throw ConfigError("timestamp column '" + col.name + "' needs a date format");
                col.date_format = *options.date_format;
            }
            for (std::size_t i = 0; i < n; ++i) {
                const auto& v = rc.values[i];
                if (options.is_missing(v)) {
                    col.missing[i] = 1;
                    continue;
                }
                if (col.kind == ColumnKind::Numeric) {
                    if (!parse_real(v, col.numbers[i])) col.missing[i] = 1;
                } else {
                    auto ts = parse_timestamp(v, col.date_format);
                    if (!ts)
                        throw DataError("line " + std::to_string(first_line + i) + ": '" + v +
                                        "' in column '" + col.name + "' does not match date format '" +
                                        col.date_format + "'");
                    col.numbers[i] = *ts;
                }
            }
        }
        cols.push_back(std::move(col));
    }
    return Table(std::move(cols));
}

}  // namespace tabctx

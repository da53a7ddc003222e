#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "tabctx/schema.hpp"
#include "tabctx/table.hpp"

namespace tabctx {

struct CsvOptions {
    char delimiter = ',';
    SchemaOptions schema;
    // Binary target. Values are normalized so the minority class is 1.
    std::optional<std::string> label;
    // Column holding stable row ids; used when present in the header.
    std::string id_column = "row_id";
};

// Splits CSV text into a header and records (RFC 4180 quoting). A quoted
// empty field is kept as the empty string and therefore reads as missing.
struct CsvRecords {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::size_t> line_of_row;  // 1-based physical line of each record
};

CsvRecords parse_csv(std::istream& in, char delimiter = ',');

Table read_csv(std::istream& in, const CsvOptions& options = {});
Table load_csv(const std::filesystem::path& path, const CsvOptions& options = {});

// Writes the id column first, then every column in order. Missing entries
// are written empty, numbers in shortest round-trip form.
void write_csv(std::ostream& out, const Table& table, const CsvOptions& options = {});
void save_csv(const std::filesystem::path& path, const Table& table, const CsvOptions& options = {});

// Label normalization used by the CSV reader: maps the two label tokens to
// {0,1} with the minority class as 1. Exposed for tests.
Column normalize_label(const RawColumn& raw, const SchemaOptions& options, bool& flipped,
                       std::size_t first_line = 2);

}  // namespace tabctx

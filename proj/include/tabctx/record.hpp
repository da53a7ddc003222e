#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tabctx/metrics.hpp"

namespace tabctx {

enum class CellStatus { Ok, Failed, Skipped };
std::string_view to_string(CellStatus s);
CellStatus cell_status_from_string(std::string_view s);

// One experiment cell of a sweep.
struct EvalRecord {
    std::string plan_hash;
    std::string dataset;
    std::string predictor;          // plan-level predictor name
    std::string predictor_version;  // identity reported by the predictor / backend
    std::string strategy;           // canonical name
    std::string strategy_params;    // full label with parameters
    std::size_t context_size = 0;
    std::size_t repeat = 0;
    std::uint64_t seed = 0;
    std::size_t achieved_n0 = 0;
    std::size_t achieved_n1 = 0;
    std::size_t duplicates = 0;
    std::size_t test_rows = 0;
    std::optional<MetricBundle> metrics;  // absent unless status is Ok
    double duration_ms = 0.0;
    CellStatus status = CellStatus::Ok;
    std::string reason;
    std::vector<std::string> warnings;

    bool ok() const noexcept { return status == CellStatus::Ok && metrics.has_value(); }
    // "dataset|predictor|strategy_params|size|repeat"
    std::string cell_key() const;
};

nlohmann::ordered_json to_json(const EvalRecord& r);
EvalRecord record_from_json(const nlohmann::json& j);

// One compact JSON object per line.
std::string to_jsonl(const EvalRecord& r);

struct StoreContents {
    std::vector<EvalRecord> records;
    // Byte length of the well-formed prefix; a torn trailing line (from an
    // interrupted write) lies beyond it.
    std::uintmax_t valid_bytes = 0;
    bool torn_tail = false;
};

// Reads an append-only JSONL store. A malformed line that is not the last
// line is a DataError.
StoreContents read_store(const std::filesystem::path& path);

}  // namespace tabctx

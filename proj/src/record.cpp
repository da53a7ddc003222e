#include "tabctx/record.hpp"

#include <fstream>
#include <sstream>

#include "tabctx/error.hpp"

namespace tabctx {

std::string_view to_string(CellStatus s) {
    switch (s) {
        case CellStatus::Ok: return "ok";
        case CellStatus::Failed: return "failed";
        case CellStatus::Skipped: return "skipped";
    }
    return "?";
}

CellStatus cell_status_from_string(std::string_view s) {
    if (s == "ok") return CellStatus::Ok;
    if (s == "failed") return CellStatus::Failed;
    if (s == "skipped") return CellStatus::Skipped;
    throw DataError("unknown cell status '" + std::string(s) + "'");
}

std::string EvalRecord::cell_key() const {
    return dataset + "|" + predictor + "|" + strategy_params + "|" + std::to_string(context_size) + "|" +
           std::to_string(repeat);
}

nlohmann::ordered_json to_json(const EvalRecord& r) {
    nlohmann::ordered_json j;
    j["plan_hash"] = r.plan_hash;
    j["dataset"] = r.dataset;
    j["predictor"] = r.predictor;
    j["predictor_version"] = r.predictor_version;
    j["strategy"] = r.strategy;
    j["strategy_params"] = r.strategy_params;
    j["context_size"] = r.context_size;
    j["repeat"] = r.repeat;
    j["seed"] = r.seed;
    j["achieved"] = {{"n0", r.achieved_n0}, {"n1", r.achieved_n1}, {"duplicates", r.duplicates}};
    j["test_rows"] = r.test_rows;
    if (r.metrics) {
        const auto& m = *r.metrics;
        j["metrics"] = {{"auc", m.auc},
                        {"accuracy", m.accuracy},
                        {"default_recall", m.default_recall},
                        {"default_precision", m.default_precision},
                        {"default_f1", m.default_f1},
                        {"balanced_accuracy", m.balanced_accuracy},
                        {"mcc", m.mcc},
                        {"threshold", m.threshold},
                        {"tp", m.counts.tp},
                        {"fp", m.counts.fp},
                        {"fn", m.counts.fn},
                        {"tn", m.counts.tn}};
    } else {
        j["metrics"] = nullptr;
    }
    j["status"] = to_string(r.status);
    j["reason"] = r.reason;
    j["warnings"] = r.warnings;
    j["duration_ms"] = r.duration_ms;
    return j;
}

EvalRecord record_from_json(const nlohmann::json& j) {
    try {
        EvalRecord r;
        r.plan_hash = j.at("plan_hash").get<std::string>();
        r.dataset = j.at("dataset").get<std::string>();
        r.predictor = j.at("predictor").get<std::string>();
        r.predictor_version = j.value("predictor_version", "");
        r.strategy = j.at("strategy").get<std::string>();
        r.strategy_params = j.value("strategy_params", r.strategy);
        r.context_size = j.at("context_size").get<std::size_t>();
        r.repeat = j.value("repeat", std::size_t{0});
        r.seed = j.value("seed", std::uint64_t{0});
        if (j.contains("achieved")) {
            const auto& a = j["achieved"];
            r.achieved_n0 = a.value("n0", std::size_t{0});
            r.achieved_n1 = a.value("n1", std::size_t{0});
            r.duplicates = a.value("duplicates", std::size_t{0});
        }
        r.test_rows = j.value("test_rows", std::size_t{0});
        if (j.contains("metrics") && !j["metrics"].is_null()) {
            const auto& m = j["metrics"];
            MetricBundle b;
            b.auc = m.at("auc").get<double>();
            b.accuracy = m.value("accuracy", 0.0);
            b.default_recall = m.value("default_recall", 0.0);
            b.default_precision = m.value("default_precision", 0.0);
            b.default_f1 = m.value("default_f1", 0.0);
            b.balanced_accuracy = m.value("balanced_accuracy", 0.0);
            b.mcc = m.value("mcc", 0.0);
            b.threshold = m.value("threshold", kDefaultThreshold);
            b.counts = {m.value("tp", std::uint64_t{0}), m.value("fp", std::uint64_t{0}),
                        m.value("fn", std::uint64_t{0}), m.value("tn", std::uint64_t{0})};
            r.metrics = b;
        }
        r.status = cell_status_from_string(j.value("status", "ok"));
        r.reason = j.value("reason", "");
        r.warnings = j.value("warnings", std::vector<std::string>{});
        r.duration_ms = j.value("duration_ms", 0.0);
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed record: ") + e.what());
    }
}

std::string to_jsonl(const EvalRecord& r) { return to_json(r).dump() + "\n"; }

StoreContents read_store(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open results store " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    const std::string text = buf.str();

    StoreContents out;
    std::size_t pos = 0, line_no = 0;
    while (pos < text.size()) {
        ++line_no;
        const auto nl = text.find('\n', pos);
        const bool last = nl == std::string::npos;
        const std::string line = text.substr(pos, last ? std::string::npos : nl - pos);
        if (last) {
            // No terminating newline: the write was interrupted.
            out.torn_tail = !line.empty();
            break;
        }
        if (!line.empty()) {
            try {
                out.records.push_back(record_from_json(nlohmann::json::parse(line)));
            } catch (const std::exception& e) {
                if (nl + 1 >= text.size()) {
                    out.torn_tail = true;
                    break;
                }
                throw DataError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
            }
        }
        pos = nl + 1;
        out.valid_bytes = pos;
    }
    return out;
}

}  // namespace tabctx

#include <fstream>
#include <set>

#include "tabctx/bench.hpp"
#include "tabctx/error.hpp"

namespace tabctx {

namespace {

using nlohmann::json;

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + ": expected an object");
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [k, v] : j.items())
        if (!ok.count(k)) throw ConfigError(where + ": unknown key '" + k + "'");
}

template <class T>
T get(const json& j, const char* key, const T& fallback, const std::string& where) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(where + ": bad value for '" + key + "'");
    }
}

template <class T>
T need(const json& j, const char* key, const std::string& where) {
    if (!j.contains(key)) throw ConfigError(where + ": missing '" + key + "'");
    return get<T>(j, key, T{}, where);
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    std::filesystem::path path(p);
    return path.is_absolute() || base.empty() ? path : base / path;
}

CsvOptions parse_csv_options(const json& j, const std::string& where) {
    CsvOptions o;
    const std::string delim = get<std::string>(j, "delimiter", ",", where);
    if (delim.size() != 1) throw ConfigError(where + ": delimiter must be one character");
    o.delimiter = delim[0];
    if (j.contains("label")) o.label = need<std::string>(j, "label", where);
    o.id_column = get<std::string>(j, "id_column", o.id_column, where);
    if (j.contains("date_format")) o.schema.date_format = need<std::string>(j, "date_format", where);
    o.schema.missing_tokens = get(j, "missing_tokens", o.schema.missing_tokens, where);
    o.schema.numeric_fraction = get(j, "numeric_fraction", o.schema.numeric_fraction, where);
    if (j.contains("hints")) {
        if (!j["hints"].is_object()) throw ConfigError(where + ": hints must be an object");
        for (const auto& [col, kind] : j["hints"].items()) {
            if (!kind.is_string()) throw ConfigError(where + ": hint for '" + col + "' must be a string");
            o.schema.hints[col] = column_kind_from_string(kind.get<std::string>());
        }
    }
    return o;
}

ImputationRule parse_rule(const json& j, const std::string& where) {
    check_keys(j, {"columns", "action", "value"}, where);
    ImputationRule r;
    r.pattern = need<std::string>(j, "columns", where);
    const auto action = need<std::string>(j, "action", where);
    if (action == "sentinel")
        r.action = NumericSentinel{get(j, "value", -1.0, where)};
    else if (action == "token")
        r.action = CategoryToken{get<std::string>(j, "value", "MISSING", where)};
    else if (action == "indicator")
        r.action = AddMissingIndicator{};
    else
        throw ConfigError(where + ": unknown action '" + action + "' (sentinel, token, indicator)");
    return r;
}

FeatureRecipe parse_recipe(const json& j, const std::string& where) {
    check_keys(j, {"name", "kind", "numerator", "denominator", "a", "b", "column", "op", "threshold", "sentinel"},
               where);
    FeatureRecipe r;
    r.name = need<std::string>(j, "name", where);
    r.sentinel = get(j, "sentinel", -1.0, where);
    const auto kind = need<std::string>(j, "kind", where);
    if (kind == "ratio")
        r.kind = Ratio{need<std::string>(j, "numerator", where), need<std::string>(j, "denominator", where)};
    else if (kind == "difference")
        r.kind = Difference{need<std::string>(j, "a", where), need<std::string>(j, "b", where)};
    else if (kind == "flag")
        r.kind = Flag{need<std::string>(j, "column", where), compare_op_from_string(need<std::string>(j, "op", where)),
                      need<double>(j, "threshold", where)};
    else
        throw ConfigError(where + ": unknown recipe kind '" + kind + "' (ratio, difference, flag)");
    return r;
}

SplitSpec parse_split(const json& j, const std::string& where) {
    check_keys(j, {"kind", "test_fraction", "seed", "column", "cutoff"}, where);
    const auto kind = need<std::string>(j, "kind", where);
    if (kind == "stratified") {
        RandomStratified s;
        s.test_fraction = get(j, "test_fraction", s.test_fraction, where);
        s.seed = get(j, "seed", s.seed, where);
        return s;
    }
    if (kind == "temporal") return Temporal{need<std::string>(j, "column", where), need<std::string>(j, "cutoff", where)};
    throw ConfigError(where + ": unknown split kind '" + kind + "' (stratified, temporal)");
}

KMeansParams parse_kmeans(const json& j, const std::string& where) {
    KMeansParams k;
    k.iterations = get(j, "iterations", k.iterations, where);
    k.batch_size = get(j, "batch_size", k.batch_size, where);
    return k;
}

SynthParams parse_synth(const json& j, const std::string& where) {
    check_keys(j, {"n", "minority_rate", "separation", "noise_dims", "seed", "test_fraction"}, where);
    SynthParams p;
    p.n = get(j, "n", p.n, where);
    p.minority_rate = get(j, "minority_rate", p.minority_rate, where);
    p.separation = get(j, "separation", p.separation, where);
    p.noise_dims = get(j, "noise_dims", p.noise_dims, where);
    p.seed = get(j, "seed", p.seed, where);
    return p;
}

}  // namespace

Strategy strategy_from_json(const json& j) {
    if (j.is_string()) return strategy_from_name(j.get<std::string>());
    const std::string where = "strategy";
    check_keys(j, {"name", "boost", "min_minority", "k", "rho", "iterations", "batch_size"}, where);
    Strategy s = strategy_from_name(need<std::string>(j, "name", where));
    std::visit(
        [&](auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, strategy::OversamplePlus>) {
                v.boost = get(j, "boost", v.boost, where);
                v.min_minority = get(j, "min_minority", v.min_minority, where);
            } else if constexpr (std::is_same_v<T, strategy::Smote>) {
                v.k = get(j, "k", v.k, where);
            } else if constexpr (std::is_same_v<T, strategy::DiversityKM>) {
                v.kmeans = parse_kmeans(j, where);
            } else if constexpr (std::is_same_v<T, strategy::Hybrid>) {
                v.rho = get(j, "rho", v.rho, where);
                v.kmeans = parse_kmeans(j, where);
            }
        },
        s);
    return s;
}

PredictorConfig predictor_from_json(const json& j) {
    PredictorConfig p;
    if (j.is_string()) {
        p.kind = p.name = j.get<std::string>();
        make_predictor(p);  // validates the kind
        return p;
    }
    const std::string where = "predictor";
    check_keys(j,
               {"name", "kind", "k", "distance_weighted", "epsilon", "variance_floor", "l2", "max_epochs", "tolerance",
                "p", "command", "protocol", "batch_size", "handshake_timeout_ms", "batch_timeout_ms"},
               where);
    p.kind = need<std::string>(j, "kind", where);
    p.name = get<std::string>(j, "name", p.kind, where);
    if (j.contains("k")) p.knn.k = need<std::size_t>(j, "k", where);
    p.knn.distance_weighted = get(j, "distance_weighted", false, where);
    p.knn.epsilon = get(j, "epsilon", p.knn.epsilon, where);
    p.nb.variance_floor = get(j, "variance_floor", p.nb.variance_floor, where);
    p.logistic.l2 = get(j, "l2", p.logistic.l2, where);
    p.logistic.max_epochs = get(j, "max_epochs", p.logistic.max_epochs, where);
    p.logistic.tolerance = get(j, "tolerance", p.logistic.tolerance, where);
    p.constant = get(j, "p", p.constant, where);
    if (p.kind == "external") {
        p.external.name = p.name;
        p.external.command = need<std::string>(j, "command", where);
        p.external.protocol_version = get(j, "protocol", kProtocolVersion, where);
        p.external.batch_size = get(j, "batch_size", p.external.batch_size, where);
        p.external.handshake_timeout =
            std::chrono::milliseconds(get<long long>(j, "handshake_timeout_ms", p.external.handshake_timeout.count(), where));
        p.external.batch_timeout =
            std::chrono::milliseconds(get<long long>(j, "batch_timeout_ms", p.external.batch_timeout.count(), where));
    } else {
        make_predictor(p);
    }
    return p;
}

Config parse_config(const json& doc, const std::filesystem::path& base) {
    check_keys(doc, {"ingest", "encoding", "selection", "plan"}, "config");
    Config c;
    c.raw = doc;
    if (doc.contains("ingest")) {
        const auto& j = doc["ingest"];
        const std::string where = "ingest";
        check_keys(j,
                   {"label", "delimiter", "id_column", "date_format", "missing_tokens", "numeric_fraction", "hints",
                    "imputation", "recipes", "split"},
                   where);
        c.ingest.csv = parse_csv_options(j, where);
        if (j.contains("imputation"))
            for (std::size_t i = 0; i < j["imputation"].size(); ++i)
                c.ingest.imputation.push_back(parse_rule(j["imputation"][i], "ingest.imputation[" + std::to_string(i) + "]"));
        if (j.contains("recipes"))
            for (std::size_t i = 0; i < j["recipes"].size(); ++i)
                c.ingest.recipes.push_back(parse_recipe(j["recipes"][i], "ingest.recipes[" + std::to_string(i) + "]"));
        if (j.contains("split")) c.ingest.split = parse_split(j["split"], "ingest.split");
    }
    if (doc.contains("encoding")) {
        const auto& j = doc["encoding"];
        check_keys(j, {"one_hot_cap", "missing_sentinel", "min_std"}, "encoding");
        c.encoding.one_hot_cap = get(j, "one_hot_cap", c.encoding.one_hot_cap, "encoding");
        c.encoding.missing_sentinel = get(j, "missing_sentinel", c.encoding.missing_sentinel, "encoding");
        c.encoding.min_std = get(j, "min_std", c.encoding.min_std, "encoding");
    }
    if (doc.contains("selection")) {
        const auto& j = doc["selection"];
        const std::string where = "selection";
        check_keys(j,
                   {"correlation_threshold", "mi_bins", "mi_min", "mi_top_k", "vif_cap", "vif_max_iterations",
                    "importance_keep_top_k", "importance_rounds", "importance_holdout", "seed"},
                   where);
        auto& s = c.selection;
        s.correlation_threshold = get(j, "correlation_threshold", s.correlation_threshold, where);
        s.mi_bins = get(j, "mi_bins", s.mi_bins, where);
        s.mi_min = get(j, "mi_min", s.mi_min, where);
        if (j.contains("mi_top_k")) s.mi_top_k = need<std::size_t>(j, "mi_top_k", where);
        s.vif_cap = get(j, "vif_cap", s.vif_cap, where);
        s.vif_max_iterations = get(j, "vif_max_iterations", s.vif_max_iterations, where);
        if (j.contains("importance_keep_top_k")) s.importance_keep_top_k = need<std::size_t>(j, "importance_keep_top_k", where);
        s.importance_rounds = get(j, "importance_rounds", s.importance_rounds, where);
        s.importance_holdout = get(j, "importance_holdout", s.importance_holdout, where);
        s.seed = get(j, "seed", s.seed, where);
    }
    if (doc.contains("plan")) {
        const auto& j = doc["plan"];
        const std::string where = "plan";
        check_keys(j, {"seed", "repeats", "budgets", "strategies", "predictors", "datasets", "store"}, where);
        ExperimentPlan plan;
        plan.encoding = c.encoding;
        plan.master_seed = get(j, "seed", std::uint64_t{0}, where);
        plan.repeats = get(j, "repeats", plan.repeats, where);
        plan.budgets = get(j, "budgets", std::vector<std::size_t>(std::begin(kDefaultBudgets), std::end(kDefaultBudgets)),
                           where);
        if (j.contains("strategies")) {
            for (const auto& s : j["strategies"]) plan.strategies.push_back(strategy_from_json(s));
        } else {
            for (const auto& n : all_strategy_names()) plan.strategies.push_back(strategy_from_name(n));
        }
        if (j.contains("predictors")) {
            for (const auto& p : j["predictors"]) plan.predictors.push_back(predictor_from_json(p));
        } else {
            plan.predictors.push_back(predictor_from_json("knn"));
        }
        if (!j.contains("datasets")) throw ConfigError("plan: missing 'datasets'");
        for (std::size_t i = 0; i < j["datasets"].size(); ++i) {
            const auto& dj = j["datasets"][i];
            const std::string dw = "plan.datasets[" + std::to_string(i) + "]";
            check_keys(dj, {"name", "train", "test", "label", "id_column", "delimiter", "date_format", "missing_tokens",
                            "numeric_fraction", "hints", "synthetic", "features"},
                       dw);
            DatasetConfig d;
            d.name = need<std::string>(dj, "name", dw);
            d.features = get(dj, "features", std::vector<std::string>{}, dw);
            if (dj.contains("synthetic")) {
                d.synthetic = parse_synth(dj["synthetic"], dw + ".synthetic");
                d.synthetic_test_fraction = get(dj["synthetic"], "test_fraction", 0.25, dw);
            } else {
                // Dataset-level CSV options fall back to the ingest section.
                d.csv = c.ingest.csv;
                json merged = doc.contains("ingest") ? doc["ingest"] : json::object();
                for (const auto& [k, v] : dj.items()) merged[k] = v;
                d.csv = parse_csv_options(merged, dw);
                d.train = resolve(base, need<std::string>(dj, "train", dw));
                d.test = resolve(base, need<std::string>(dj, "test", dw));
            }
            plan.datasets.push_back(std::move(d));
        }
        plan.store = resolve(base, get<std::string>(j, "store", "results.jsonl", where));
        c.plan = std::move(plan);
    }
    return c;
}

Config load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path.string());
    json doc;
    try {
        doc = json::parse(in, nullptr, true, /*ignore_comments=*/true);
    } catch (const json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    return parse_config(doc, path.parent_path());
}

ExperimentPlan load_plan(const std::filesystem::path& path) {
    auto c = load_config(path);
    if (!c.plan) throw ConfigError(path.string() + ": no 'plan' section");
    return std::move(*c.plan);
}

}  // namespace tabctx

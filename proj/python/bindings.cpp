#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <tabctx/aggregate.hpp>
#include <tabctx/bench.hpp>
#include <tabctx/error.hpp>

namespace py = pybind11;
using namespace tabctx;

namespace {

// Numeric feature matrix plus 0/1 labels as a labelled table (f0, f1, ..., y).
Table matrix_table(const Matrix& x, const std::vector<int>& y, const std::vector<std::string>& names) {
    if (static_cast<std::size_t>(x.rows()) != y.size()) throw ConfigError("X and y have different row counts");
    if (!names.empty() && names.size() != static_cast<std::size_t>(x.cols()))
        throw ConfigError("feature names do not match the column count");
    std::vector<Column> cols;
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        std::vector<double> v(static_cast<std::size_t>(x.rows()));
        for (Eigen::Index i = 0; i < x.rows(); ++i) v[static_cast<std::size_t>(i)] = x(i, j);
        cols.push_back(Column::numeric(names.empty() ? "f" + std::to_string(j) : names[static_cast<std::size_t>(j)],
                                       std::move(v)));
    }
    cols.push_back(Column::numeric("y", std::vector<double>(y.begin(), y.end())));
    return Table(std::move(cols), {}, std::string("y"));
}

Strategy parse_strategy(const std::string& s) {
    return s.starts_with("{") ? strategy_from_json(nlohmann::json::parse(s)) : strategy_from_name(s);
}

std::unique_ptr<Predictor> predictor_by_name(const std::string& s) {
    return make_predictor(predictor_from_json(s.starts_with("{") ? nlohmann::json::parse(s) : nlohmann::json(s)));
}

py::dict window_dict(const ContextWindow& w) {
    std::vector<std::uint64_t> ids;
    std::vector<int> labels;
    std::vector<bool> synthetic;
    for (const auto& r : w.rows) {
        ids.push_back(r.id.value);
        labels.push_back(r.label);
        synthetic.push_back(r.synthetic());
    }
    py::dict d;
    d["row_ids"] = ids;
    d["labels"] = labels;
    d["synthetic"] = synthetic;
    d["synthetic_encoded"] = Matrix(w.synthetic_encoded);
    d["strategy"] = strategy_label(w.spec.strategy);
    d["n0"] = w.achieved.n0;
    d["n1"] = w.achieved.n1;
    d["duplicates"] = w.duplicate_count();
    d["warnings"] = w.warnings;
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Context-window construction, in-context predictors and benchmark harness";

    py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<BudgetError>(m, "BudgetError", PyExc_ValueError);
    py::register_exception<LeakageError>(m, "LeakageError", PyExc_RuntimeError);
    py::register_exception<UndefinedMetricError>(m, "UndefinedMetricError", PyExc_ValueError);

    m.def("roc_auc", [](const std::vector<double>& s, const std::vector<int>& y) { return roc_auc(s, y); },
          py::arg("scores"), py::arg("labels"));
    m.def(
        "mcc", [](std::uint64_t tp, std::uint64_t fp, std::uint64_t fn, std::uint64_t tn) {
            return mcc({tp, fp, fn, tn});
        },
        py::arg("tp"), py::arg("fp"), py::arg("fn"), py::arg("tn"));
    m.def(
        "metrics",
        [](const std::vector<double>& s, const std::vector<int>& y) {
            const auto b = bundle(s, y);
            py::dict d;
            d["auc"] = b.auc;
            d["accuracy"] = b.accuracy;
            d["default_recall"] = b.default_recall;
            d["default_precision"] = b.default_precision;
            d["default_f1"] = b.default_f1;
            d["balanced_accuracy"] = b.balanced_accuracy;
            d["mcc"] = b.mcc;
            d["tp"] = b.counts.tp;
            d["fp"] = b.counts.fp;
            d["fn"] = b.counts.fn;
            d["tn"] = b.counts.tn;
            return d;
        },
        py::arg("scores"), py::arg("labels"));

    m.def(
        "synth",
        [](std::size_t n, double rate, double separation, std::size_t noise_dims, std::uint64_t seed) {
            const auto t = synth_dataset({n, rate, separation, noise_dims, seed});
            Matrix x(static_cast<Eigen::Index>(t.n_rows()), static_cast<Eigen::Index>(t.n_columns() - 1));
            std::vector<std::string> names;
            Eigen::Index j = 0;
            for (const auto& c : t.columns()) {
                if (c.name == kSynthLabel) continue;
                names.push_back(c.name);
                for (std::size_t i = 0; i < t.n_rows(); ++i) x(static_cast<Eigen::Index>(i), j) = c.numbers[i];
                ++j;
            }
            return py::make_tuple(x, t.labels(), names);
        },
        py::arg("n") = 10000, py::arg("minority_rate") = 0.08, py::arg("separation") = 2.0,
        py::arg("noise_dims") = 8, py::arg("seed") = 0);

    m.def(
        "sample_context",
        [](const Matrix& x, const std::vector<int>& y, const std::string& strategy, std::size_t budget,
           std::uint64_t seed) {
            const auto t = matrix_table(x, y, {});
            const auto enc = encode(t, {}, t.row_ids());
            const ContextPool pool(t, &enc);
            return window_dict(build_context(pool, {parse_strategy(strategy), budget, seed}));
        },
        py::arg("X"), py::arg("y"), py::arg("strategy"), py::arg("budget"), py::arg("seed") = 0,
        "Rows are identified by position; synthetic rows carry the high bit.");

    m.def(
        "predict_proba",
        [](const std::string& predictor, const Matrix& x_window, const std::vector<int>& y_window,
           const Matrix& x_query) {
            const auto p = predictor_by_name(predictor);
            const auto state = p->condition(matrix_input(x_window, y_window));
            return state->predict_proba(matrix_input(x_query));
        },
        py::arg("predictor"), py::arg("X_window"), py::arg("y_window"), py::arg("X_query"),
        "Conditions a native predictor (name or JSON config) on encoded rows.");

    m.def(
        "select_features",
        [](const Matrix& x, const std::vector<int>& y, const std::vector<std::string>& names,
           std::optional<std::size_t> keep_top_k, std::uint64_t seed) {
            const auto t = matrix_table(x, y, names);
            const auto enc = encode(t, {}, t.row_ids());
            SelectionConfig cfg;
            cfg.importance_keep_top_k = keep_top_k;
            cfg.seed = seed;
            const KnnPredictor knn;
            return select_features(enc, t.labels(), cfg, knn).to_json().dump();
        },
        py::arg("X"), py::arg("y"), py::arg("names") = std::vector<std::string>{},
        py::arg("keep_top_k") = py::none(), py::arg("seed") = 0);

    m.def("variance_inflation_factors", &variance_inflation_factors, py::arg("X"));
    m.def(
        "mutual_information",
        [](const std::vector<double>& x, const std::vector<int>& y, std::size_t bins) {
            return mutual_information(x, y, bins);
        },
        py::arg("x"), py::arg("y"), py::arg("bins") = 10);

    m.def("derive_seed", &derive_seed, py::arg("master_seed"), py::arg("dataset"), py::arg("predictor"),
          py::arg("strategy"), py::arg("size"), py::arg("repeat"));
    m.def("strategy_names", &all_strategy_names);

    m.def(
        "run_plan",
        [](const std::filesystem::path& config, std::size_t workers, bool resume,
           std::optional<std::filesystem::path> store) {
            auto plan = load_plan(config);
            if (store) plan.store = *store;
            RunOptions opt;
            opt.workers = workers;
            opt.resume = resume;
            RunSummary s;
            {
                py::gil_scoped_release release;
                s = run_plan(plan, opt);
            }
            py::dict d;
            d["plan_hash"] = plan.hash();
            d["store"] = plan.store.string();
            d["total_cells"] = s.total_cells;
            d["already_done"] = s.already_done;
            d["executed"] = s.executed;
            d["failed"] = s.failed;
            d["skipped"] = s.skipped;
            return d;
        },
        py::arg("config"), py::arg("workers") = 1, py::arg("resume") = false, py::arg("store") = py::none());

    m.def(
        "read_store_json",
        [](const std::filesystem::path& path) {
            nlohmann::ordered_json out = nlohmann::ordered_json::array();
            for (const auto& r : read_store(path).records) out.push_back(to_json(r));
            return out.dump();
        },
        py::arg("path"));

    m.def(
        "report",
        [](const std::filesystem::path& store, const std::string& kind, const std::string& format) {
            const auto records = read_store(store).records;
            const auto t = build_report(records, report_kind_from_string(kind));
            return format == "csv" ? t.to_csv() : t.to_text();
        },
        py::arg("store"), py::arg("kind") = "strategy-means", py::arg("format") = "text");
}

#include "tabctx/feature_selection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

#include "tabctx/error.hpp"
#include "tabctx/metrics.hpp"
#include "tabctx/quota.hpp"
#include "tabctx/random.hpp"

namespace tabctx {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<double> column(const Matrix& x, std::size_t j) {
    std::vector<double> out(static_cast<std::size_t>(x.rows()));
    for (Eigen::Index i = 0; i < x.rows(); ++i) out[static_cast<std::size_t>(i)] = x(i, static_cast<Eigen::Index>(j));
    return out;
}

std::vector<std::string> names_of(std::span<const std::string> names, std::span<const std::size_t> idx) {
    std::vector<std::string> out;
    for (auto i : idx) out.push_back(names[i]);
    return out;
}

bool is_constant(const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [&](double a) { return a == v.front(); });
}

SelectionStage begin_stage(std::string name, std::span<const std::string> names, std::span<const std::size_t> cand) {
    SelectionStage s;
    s.name = std::move(name);
    s.features_in = names_of(names, cand);
    return s;
}

StageResult finish(SelectionStage stage, std::span<const std::string> names, std::vector<std::size_t> surviving) {
    std::sort(surviving.begin(), surviving.end());
    stage.features_out = names_of(names, surviving);
    return {std::move(surviving), std::move(stage)};
}

}  // namespace

std::vector<std::size_t> equal_frequency_bins(std::span<const double> x, std::size_t n_bins) {
    if (n_bins < 2) throw ConfigError("mutual information needs at least 2 bins");
    const std::size_t n = x.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
    std::vector<std::size_t> bin(n);
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j < n && x[order[j]] == x[order[i]]) ++j;
        const std::size_t b = std::min(n_bins - 1, i * n_bins / n);
        for (std::size_t k = i; k < j; ++k) bin[order[k]] = b;
        i = j;
    }
    return bin;
}

double mutual_information(std::span<const double> x, std::span<const int> y, std::size_t n_bins) {
    if (x.size() != y.size()) throw ContractError("mutual_information: length mismatch");
    if (x.empty()) return 0.0;
    const auto bins = equal_frequency_bins(x, n_bins);
    std::vector<double> joint(n_bins * 2, 0.0), px(n_bins, 0.0);
    double py[2] = {0.0, 0.0};
    const double n = static_cast<double>(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (y[i] != 0 && y[i] != 1) throw DataError("mutual_information: labels must be binary");
        joint[bins[i] * 2 + static_cast<std::size_t>(y[i])] += 1.0;
        px[bins[i]] += 1.0;
        py[y[i]] += 1.0;
    }
    double mi = 0.0;
    for (std::size_t b = 0; b < n_bins; ++b)
        for (int c = 0; c < 2; ++c) {
            const double pxy = joint[b * 2 + static_cast<std::size_t>(c)] / n;
            if (pxy <= 0.0) continue;
            mi += pxy * std::log2(pxy / ((px[b] / n) * (py[c] / n)));
        }
    return std::max(0.0, mi);
}

double pearson(std::span<const double> a, std::span<const double> b) {
    const double n = static_cast<double>(a.size());
    const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
    const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    if (saa == 0.0 || sbb == 0.0) return 0.0;
    return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

StageResult correlation_filter(const Matrix& x, std::span<const int> y, std::span<const std::string> names,
                               std::span<const std::size_t> candidates, double threshold, std::size_t mi_bins) {
    if (!(threshold > 0.0 && threshold <= 1.0)) throw ConfigError("correlation threshold must lie in (0,1]");
    if (x.rows() < 2) throw ContractError("correlation filter needs at least 2 rows");
    auto stage = begin_stage("correlation", names, candidates);
    stage.note = "drop the lower-MI member of every pair with |rho| > " + std::to_string(threshold);

    std::vector<std::size_t> alive;
    std::map<std::size_t, std::vector<double>> cols;
    std::map<std::size_t, double> mi;
    for (auto j : candidates) {
        auto c = column(x, j);
        if (is_constant(c)) {
            stage.dropped.push_back({names[j], j, 0.0, "constant"});
            continue;
        }
        mi[j] = mutual_information(c, y, mi_bins);
        cols.emplace(j, std::move(c));
        alive.push_back(j);
    }
    struct Pair {
        double r;
        std::size_t a, b;
    };
    std::vector<Pair> pairs;
    for (std::size_t p = 0; p < alive.size(); ++p)
        for (std::size_t q = p + 1; q < alive.size(); ++q) {
            const double r = std::abs(pearson(cols[alive[p]], cols[alive[q]]));
            if (r > threshold) pairs.push_back({r, alive[p], alive[q]});
        }
    std::stable_sort(pairs.begin(), pairs.end(), [](const Pair& u, const Pair& v) { return u.r > v.r; });
    std::map<std::size_t, bool> dead;
    for (const auto& pr : pairs) {
        if (dead[pr.a] || dead[pr.b]) continue;
        // a < b by construction; drop lower MI, later index on ties.
        const std::size_t drop = mi[pr.a] < mi[pr.b] ? pr.a : pr.b;
        const std::size_t keep = drop == pr.a ? pr.b : pr.a;
        dead[drop] = true;
        stage.dropped.push_back({names[drop], drop, pr.r, "|rho| with " + names[keep]});
    }
    std::vector<std::size_t> surviving;
    for (auto j : alive)
        if (!dead[j]) surviving.push_back(j);
    return finish(std::move(stage), names, std::move(surviving));
}

StageResult mi_ranking(const Matrix& x, std::span<const int> y, std::span<const std::string> names,
                       std::span<const std::size_t> candidates, std::size_t n_bins, double min_mi,
                       std::optional<std::size_t> top_k) {
    auto stage = begin_stage("mutual_information", names, candidates);
    stage.note = "keep features with MI > " + std::to_string(min_mi) + " bits" +
                 (top_k ? ", at most " + std::to_string(*top_k) : std::string{});
    std::vector<std::pair<double, std::size_t>> ranked;
    for (auto j : candidates) {
        const double v = mutual_information(column(x, j), y, n_bins);
        stage.scores.emplace_back(names[j], v);
        ranked.emplace_back(v, j);
    }
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    std::vector<std::size_t> surviving;
    for (std::size_t r = 0; r < ranked.size(); ++r) {
        const auto [v, j] = ranked[r];
        if (!(v > min_mi))
            stage.dropped.push_back({names[j], j, v, "MI below minimum"});
        else if (top_k && surviving.size() >= *top_k)
            stage.dropped.push_back({names[j], j, v, "outside MI top-k"});
        else
            surviving.push_back(j);
    }
    return finish(std::move(stage), names, std::move(surviving));
}

std::vector<double> variance_inflation_factors(const Matrix& x) {
    const auto n = x.rows(), p = x.cols();
    std::vector<double> vif(static_cast<std::size_t>(p), 1.0);
    if (p < 2) return vif;
    for (Eigen::Index j = 0; j < p; ++j) {
        const Vector target = x.col(j);
        const double mean = target.mean();
        const double tss = (target.array() - mean).square().sum();
        if (tss <= 0.0) {
            vif[static_cast<std::size_t>(j)] = kInf;
            continue;
        }
        Eigen::MatrixXd a(n, p);
        a.col(0).setOnes();
        for (Eigen::Index k = 0, c = 1; k < p; ++k)
            if (k != j) a.col(c++) = x.col(k);
        const Vector beta = a.colPivHouseholderQr().solve(target);
        const double rss = (target - a * beta).squaredNorm();
        const double one_minus_r2 = rss / tss;
        vif[static_cast<std::size_t>(j)] = one_minus_r2 <= 1e-12 ? kInf : 1.0 / one_minus_r2;
    }
    return vif;
}

StageResult vif_filter(const Matrix& x, std::span<const std::string> names, std::span<const std::size_t> candidates,
                       double cap, std::size_t max_iterations) {
    if (!(cap > 1.0)) throw ConfigError("VIF cap must exceed 1");
    auto stage = begin_stage("vif", names, candidates);
    stage.note = "drop the highest-VIF feature while any VIF > " + std::to_string(cap);
    std::vector<std::size_t> alive(candidates.begin(), candidates.end());
    std::sort(alive.begin(), alive.end());
    std::vector<double> vif;
    bool satisfied = false;
    for (std::size_t it = 0; it <= max_iterations; ++it) {
        Matrix sub(x.rows(), static_cast<Eigen::Index>(alive.size()));
        for (std::size_t k = 0; k < alive.size(); ++k)
            sub.col(static_cast<Eigen::Index>(k)) = x.col(static_cast<Eigen::Index>(alive[k]));
        vif = variance_inflation_factors(sub);
        // VIFs equal up to rounding count as tied; the lowest index goes first.
        std::size_t worst = 0;
        for (std::size_t k = 1; k < vif.size(); ++k)
            if (vif[k] > vif[worst] && !(std::isfinite(vif[k]) && vif[k] - vif[worst] <= 1e-9 * vif[worst])) worst = k;
        if (vif.empty() || vif[worst] <= cap) {
            satisfied = true;
            break;
        }
        if (it == max_iterations) break;
        stage.dropped.push_back({names[alive[worst]], alive[worst], vif[worst], "VIF above cap"});
        alive.erase(alive.begin() + static_cast<std::ptrdiff_t>(worst));
    }
    for (std::size_t k = 0; k < alive.size(); ++k) stage.scores.emplace_back(names[alive[k]], vif[k]);
    if (!satisfied) stage.note += " (stopped at iteration cap)";
    return finish(std::move(stage), names, std::move(alive));
}

std::vector<double> permutation_importance(const Matrix& x, std::span<const int> y, const Predictor& predictor,
                                           std::size_t rounds, double holdout_fraction, std::uint64_t seed) {
    const auto n = static_cast<std::size_t>(x.rows());
    Rng rng(seed);
    // Stratified hold-out fold.
    std::vector<std::size_t> members[2];
    for (std::size_t i = 0; i < n; ++i) members[y[i]].push_back(i);
    const auto n_hold = static_cast<std::size_t>(std::llround(holdout_fraction * static_cast<double>(n)));
    const std::size_t sizes[2] = {members[0].size(), members[1].size()};
    const auto quota = largest_remainder(n_hold, sizes);
    std::vector<std::uint8_t> held(n, 0);
    for (int c = 0; c < 2; ++c) {
        rng.shuffle(members[c]);
        for (std::size_t k = 0; k < quota[static_cast<std::size_t>(c)]; ++k) held[members[c][k]] = 1;
    }
    std::vector<std::size_t> fit_rows, hold_rows;
    for (std::size_t i = 0; i < n; ++i) (held[i] ? hold_rows : fit_rows).push_back(i);

    auto rows_of = [&](const std::vector<std::size_t>& rows) {
        Matrix m(static_cast<Eigen::Index>(rows.size()), x.cols());
        for (std::size_t k = 0; k < rows.size(); ++k) m.row(static_cast<Eigen::Index>(k)) = x.row(static_cast<Eigen::Index>(rows[k]));
        return m;
    };
    std::vector<int> y_fit, y_hold;
    for (auto r : fit_rows) y_fit.push_back(y[r]);
    for (auto r : hold_rows) y_hold.push_back(y[r]);
    const auto state = predictor.condition(matrix_input(rows_of(fit_rows), y_fit));
    const Matrix hold = rows_of(hold_rows);
    const double base = roc_auc(state->predict_proba(matrix_input(hold)), y_hold);

    std::vector<double> importance(static_cast<std::size_t>(x.cols()), 0.0);
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        double drop = 0.0;
        for (std::size_t r = 0; r < rounds; ++r) {
            Matrix perm = hold;
            std::vector<std::size_t> order(hold_rows.size());
            std::iota(order.begin(), order.end(), std::size_t{0});
            rng.shuffle(order);
            for (std::size_t k = 0; k < order.size(); ++k)
                perm(static_cast<Eigen::Index>(k), j) = hold(static_cast<Eigen::Index>(order[k]), j);
            drop += base - roc_auc(state->predict_proba(matrix_input(std::move(perm))), y_hold);
        }
        importance[static_cast<std::size_t>(j)] = rounds ? drop / static_cast<double>(rounds) : 0.0;
    }
    return importance;
}

StageResult importance_prune(const Matrix& x, std::span<const int> y, std::span<const std::string> names,
                             std::span<const std::size_t> candidates, const Predictor& predictor,
                             const ImportanceOptions& options) {
    if (options.keep_top_k < 1) throw ConfigError("keep_top_k must be at least 1");
    auto stage = begin_stage("importance", names, candidates);
    stage.note = "permutation importance (mean held-out AUC drop over " + std::to_string(options.rounds) +
                 " rounds), used in place of SHAP values; keep top " + std::to_string(options.keep_top_k);
    std::vector<std::size_t> cand(candidates.begin(), candidates.end());
    if (options.keep_top_k >= cand.size()) {
        stage.note += " (identity: k >= feature count)";
        return finish(std::move(stage), names, std::move(cand));
    }
    Matrix sub(x.rows(), static_cast<Eigen::Index>(cand.size()));
    for (std::size_t k = 0; k < cand.size(); ++k) sub.col(static_cast<Eigen::Index>(k)) = x.col(static_cast<Eigen::Index>(cand[k]));
    const auto imp = permutation_importance(sub, y, predictor, options.rounds, options.holdout_fraction, options.seed);
    std::vector<std::size_t> order(cand.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return imp[a] > imp[b]; });
    std::vector<std::size_t> surviving;
    for (std::size_t r = 0; r < order.size(); ++r) {
        const auto k = order[r];
        stage.scores.emplace_back(names[cand[k]], imp[k]);
        if (r < options.keep_top_k)
            surviving.push_back(cand[k]);
        else
            stage.dropped.push_back({names[cand[k]], cand[k], imp[k], "outside importance top-k"});
    }
    return finish(std::move(stage), names, std::move(surviving));
}

SelectionReport select_features(const EncodedMatrix& matrix, std::span<const int> y, const SelectionConfig& cfg,
                                const Predictor& predictor) {
    const auto& names = matrix.feature_names;
    std::vector<std::size_t> current(matrix.n_features());
    std::iota(current.begin(), current.end(), std::size_t{0});
    SelectionReport report;
    auto run = [&](StageResult r) {
        current = std::move(r.surviving);
        report.stages.push_back(std::move(r.stage));
    };
    run(correlation_filter(matrix.values, y, names, current, cfg.correlation_threshold, cfg.mi_bins));
    run(mi_ranking(matrix.values, y, names, current, cfg.mi_bins, cfg.mi_min, cfg.mi_top_k));
    run(vif_filter(matrix.values, names, current, cfg.vif_cap, cfg.vif_max_iterations));
    if (cfg.importance_keep_top_k) {
        run(importance_prune(matrix.values, y, names, current, predictor,
                             {*cfg.importance_keep_top_k, cfg.importance_rounds, cfg.importance_holdout, cfg.seed}));
    }
    report.selected = current;
    return report;
}

nlohmann::json SelectionReport::to_json() const {
    nlohmann::json j;
    j["selected"] = nlohmann::json::array();
    for (const auto& s : stages) {
        nlohmann::json st = {{"name", s.name},
                             {"note", s.note},
                             {"features_in", s.features_in},
                             {"features_out", s.features_out}};
        st["dropped"] = nlohmann::json::array();
        for (const auto& d : s.dropped)
            st["dropped"].push_back({{"feature", d.name},
                                     {"statistic", std::isfinite(d.statistic) ? nlohmann::json(d.statistic)
                                                                              : nlohmann::json("inf")},
                                     {"reason", d.reason}});
        st["scores"] = nlohmann::json::object();
        for (const auto& [name, v] : s.scores)
            st["scores"][name] = std::isfinite(v) ? nlohmann::json(v) : nlohmann::json("inf");
        j["stages"].push_back(std::move(st));
    }
    if (!stages.empty()) j["selected"] = stages.back().features_out;
    return j;
}

std::string SelectionReport::to_text() const {
    std::ostringstream o;
    for (const auto& s : stages) {
        o << "== " << s.name << ": " << s.features_in.size() << " in, " << s.dropped.size() << " dropped, "
          << s.features_out.size() << " out\n";
        o << "   " << s.note << "\n";
        for (const auto& d : s.dropped) o << "   - " << d.name << "  (" << d.reason << ", " << d.statistic << ")\n";
    }
    if (!stages.empty()) {
        o << "selected:";
        for (const auto& f : stages.back().features_out) o << ' ' << f;
        o << '\n';
    }
    return o.str();
}

}  // namespace tabctx

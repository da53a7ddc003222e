#include "tabctx/aggregate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>

#include "tabctx/context.hpp"
#include "tabctx/error.hpp"

namespace tabctx {

namespace {

// Strategy column identity: the plain name unless several parameterizations
// of that strategy appear, in which case the full label.
std::map<std::string, std::string> strategy_ids(std::span<const EvalRecord> records) {
    std::map<std::string, std::set<std::string>> params;
    for (const auto& r : records) params[r.strategy].insert(r.strategy_params);
    std::map<std::string, std::string> id;
    for (const auto& r : records) id[r.strategy_params] = params[r.strategy].size() > 1 ? r.strategy_params : r.strategy;
    return id;
}

std::vector<std::string> ordered_strategies(const std::set<std::string>& present) {
    std::vector<std::string> out;
    for (const auto& canonical : all_strategy_names())
        for (const auto& s : present)
            if (s == canonical || s.rfind(canonical + "(", 0) == 0) out.push_back(s);
    for (const auto& s : present)
        if (std::find(out.begin(), out.end(), s) == out.end()) out.push_back(s);
    return out;
}

Coverage count(std::span<const EvalRecord> records) {
    Coverage c;
    c.records = records.size();
    for (const auto& r : records) {
        if (r.ok())
            ++c.usable;
        else if (r.status == CellStatus::Skipped)
            ++c.skipped;
        else
            ++c.failed;
    }
    return c;
}

std::string fmt(double v, int digits = 4) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

std::string fmt(const std::optional<double>& v, int digits = 4) { return v ? fmt(*v, digits) : "NA"; }

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

double mean_of(const std::vector<double>& v) {
    double s = 0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

}  // namespace

std::string match_key(const EvalRecord& r) {
    return r.dataset + "|" + r.predictor + "|" + std::to_string(r.context_size) + "|" + std::to_string(r.repeat);
}

std::vector<std::string> Coverage::footer() const {
    std::vector<std::string> out;
    out.push_back("coverage: " + std::to_string(usable) + " of " + std::to_string(records) + " records usable (" +
                  std::to_string(failed) + " failed, " + std::to_string(skipped) + " skipped)");
    for (const auto& n : notes) out.push_back(n);
    return out;
}

double WinRateMatrix::win_rate(std::size_t i, std::size_t j) const {
    return shared[i][j] ? static_cast<double>(wins[i][j]) / static_cast<double>(shared[i][j]) : 0.0;
}

WinRateMatrix win_rates(std::span<const EvalRecord> records, double epsilon) {
    WinRateMatrix w;
    w.epsilon = epsilon;
    w.coverage = count(records);
    const auto ids = strategy_ids(records);
    std::set<std::string> present;
    std::map<std::string, std::map<std::string, double>> by_key;  // key -> strategy -> auc
    std::set<std::string> all_keys;
    for (const auto& r : records) {
        const auto& s = ids.at(r.strategy_params);
        present.insert(s);
        all_keys.insert(match_key(r));
        if (r.ok()) by_key[match_key(r)][s] = r.metrics->auc;
    }
    w.strategies = ordered_strategies(present);
    const std::size_t k = w.strategies.size();
    w.wins.assign(k, std::vector<std::size_t>(k, 0));
    w.ties = w.wins;
    w.shared = w.wins;
    w.first_place.assign(k, 0.0);

    std::size_t incomplete = 0;
    for (const auto& key : all_keys) {
        const auto it = by_key.find(key);
        if (it == by_key.end()) {
            ++incomplete;
            continue;
        }
        const auto& aucs = it->second;
        std::vector<std::optional<double>> v(k);
        for (std::size_t i = 0; i < k; ++i)
            if (auto f = aucs.find(w.strategies[i]); f != aucs.end()) v[i] = f->second;
        for (std::size_t i = 0; i < k; ++i)
            for (std::size_t j = 0; j < k; ++j) {
                if (i == j || !v[i] || !v[j]) continue;
                ++w.shared[i][j];
                if (std::abs(*v[i] - *v[j]) <= epsilon)
                    ++w.ties[i][j];
                else if (*v[i] > *v[j] + epsilon)
                    ++w.wins[i][j];
            }
        if (aucs.size() == k) {
            ++w.complete_keys;
            double best = -1.0;
            for (const auto& x : v) best = std::max(best, *x);
            std::size_t n_best = 0;
            for (const auto& x : v) n_best += (best - *x <= epsilon);
            for (std::size_t i = 0; i < k; ++i)
                if (best - *v[i] <= epsilon) w.first_place[i] += 1.0 / static_cast<double>(n_best);
        } else {
            ++incomplete;
        }
    }
    for (std::size_t i = 0; i < k; ++i) {
        if (w.complete_keys) w.first_place[i] /= static_cast<double>(w.complete_keys);
        for (std::size_t j = 0; j < k; ++j)
            if (i != j && w.wins[i][j] + w.wins[j][i] + w.ties[i][j] != w.shared[i][j])
                throw ContractError("win-rate totals do not add up");
    }
    w.coverage.notes.push_back("matched keys: " + std::to_string(all_keys.size()) + " (" +
                               std::to_string(w.complete_keys) + " complete, " + std::to_string(incomplete) +
                               " missing at least one strategy; pairwise counts use shared keys only)");
    return w;
}

std::optional<double> scaling_gain(std::span<const EvalRecord> records, const std::string& dataset,
                                   const std::string& predictor, const std::string& strategy, std::size_t min_size,
                                   std::size_t max_size) {
    const auto ids = strategy_ids(records);
    std::vector<double> lo, hi;
    for (const auto& r : records) {
        if (!r.ok() || r.dataset != dataset || r.predictor != predictor) continue;
        if (ids.at(r.strategy_params) != strategy && r.strategy_params != strategy) continue;
        if (r.context_size == min_size) lo.push_back(r.metrics->auc);
        if (r.context_size == max_size) hi.push_back(r.metrics->auc);
    }
    if (lo.empty() || hi.empty()) return std::nullopt;
    return mean_of(hi) - mean_of(lo);
}

std::vector<ScalingRow> scaling_table(std::span<const EvalRecord> records, std::size_t min_size,
                                      std::size_t max_size) {
    const auto ids = strategy_ids(records);
    std::set<std::string> strategies;
    std::set<std::pair<std::string, std::string>> dp;
    for (const auto& r : records) {
        strategies.insert(ids.at(r.strategy_params));
        dp.insert({r.dataset, r.predictor});
    }
    std::vector<ScalingRow> rows;
    for (const auto& [d, p] : dp)
        for (const auto& s : ordered_strategies(strategies)) {
            ScalingRow row{d, p, s, {}, {}, {}};
            std::vector<double> lo, hi;
            for (const auto& r : records) {
                if (!r.ok() || r.dataset != d || r.predictor != p || ids.at(r.strategy_params) != s) continue;
                if (r.context_size == min_size) lo.push_back(r.metrics->auc);
                if (r.context_size == max_size) hi.push_back(r.metrics->auc);
            }
            if (!lo.empty()) row.auc_min = mean_of(lo);
            if (!hi.empty()) row.auc_max = mean_of(hi);
            if (row.auc_min && row.auc_max) row.gain = *row.auc_max - *row.auc_min;
            rows.push_back(row);
        }
    return rows;
}

StrategyMeans strategy_means(std::span<const EvalRecord> records, MeanOrder order) {
    StrategyMeans out;
    out.coverage = count(records);
    const auto ids = strategy_ids(records);
    std::set<std::string> strategies, datasets;
    for (const auto& r : records) {
        strategies.insert(ids.at(r.strategy_params));
        datasets.insert(r.dataset);
    }
    out.strategies = ordered_strategies(strategies);
    out.datasets.assign(datasets.begin(), datasets.end());

    // Values feeding each mean; for SeedsFirst these are per-group averages.
    auto values = [&](const std::string& s, const std::string* d, std::size_t& n_cells) {
        std::map<std::string, std::vector<double>> groups;
        n_cells = 0;
        for (const auto& r : records) {
            if (!r.ok() || ids.at(r.strategy_params) != s || (d && r.dataset != *d)) continue;
            ++n_cells;
            const std::string g = order == MeanOrder::Flat
                                      ? r.cell_key()
                                      : r.dataset + "|" + r.predictor + "|" + std::to_string(r.context_size);
            groups[g].push_back(r.metrics->auc);
        }
        std::vector<double> v;
        for (const auto& [g, xs] : groups) {
            if (order == MeanOrder::Flat)
                v.insert(v.end(), xs.begin(), xs.end());
            else
                v.push_back(mean_of(xs));
        }
        return v;
    };
    for (const auto& s : out.strategies) {
        std::vector<std::optional<double>> row;
        std::vector<std::size_t> cells;
        for (const auto& d : out.datasets) {
            std::size_t n = 0;
            const auto v = values(s, &d, n);
            row.push_back(v.empty() ? std::nullopt : std::optional<double>(mean_of(v)));
            cells.push_back(n);
            if (v.empty()) out.coverage.notes.push_back("missing: " + s + " on " + d + " (no usable cell)");
        }
        std::size_t n = 0;
        const auto v = values(s, nullptr, n);
        out.overall.push_back(v.empty() ? std::nullopt : std::optional<double>(mean_of(v)));
        out.mean.push_back(std::move(row));
        out.cells.push_back(std::move(cells));
    }
    // Grid gaps: coordinates observed somewhere but absent for a strategy.
    std::set<std::string> keys;
    std::set<std::pair<std::string, std::string>> have;
    for (const auto& r : records) {
        keys.insert(match_key(r));
        if (r.ok()) have.insert({ids.at(r.strategy_params), match_key(r)});
    }
    std::size_t gaps = 0;
    for (const auto& s : out.strategies)
        for (const auto& k : keys) gaps += !have.count({s, k});
    if (gaps)
        out.coverage.notes.push_back("missing cells (strategy x matched key without a usable record): " +
                                     std::to_string(gaps));
    return out;
}

std::vector<ModelRow> model_table(std::span<const EvalRecord> records) {
    std::map<std::string, std::vector<const EvalRecord*>> by;
    for (const auto& r : records)
        if (r.ok()) by[r.predictor].push_back(&r);
    std::vector<ModelRow> rows;
    for (const auto& [p, rs] : by) {
        ModelRow m;
        m.predictor = p;
        m.cells = rs.size();
        for (const auto* r : rs) {
            m.auc += r->metrics->auc;
            m.mcc += r->metrics->mcc;
            m.default_f1 += r->metrics->default_f1;
            m.balanced_accuracy += r->metrics->balanced_accuracy;
            m.default_recall += r->metrics->default_recall;
        }
        const double n = static_cast<double>(rs.size());
        m.auc /= n;
        m.mcc /= n;
        m.default_f1 /= n;
        m.balanced_accuracy /= n;
        m.default_recall /= n;
        rows.push_back(m);
    }
    return rows;
}

std::string ReportTable::to_csv() const {
    std::ostringstream o;
    for (std::size_t c = 0; c < columns.size(); ++c) o << (c ? "," : "") << csv_field(columns[c]);
    o << '\n';
    for (const auto& row : rows) {
        for (std::size_t c = 0; c < row.size(); ++c) o << (c ? "," : "") << csv_field(row[c]);
        o << '\n';
    }
    return o.str();
}

std::string ReportTable::to_text() const {
    std::vector<std::size_t> width(columns.size(), 0);
    for (std::size_t c = 0; c < columns.size(); ++c) width[c] = columns[c].size();
    for (const auto& row : rows)
        for (std::size_t c = 0; c < row.size() && c < width.size(); ++c) width[c] = std::max(width[c], row[c].size());
    std::ostringstream o;
    if (!title.empty()) o << title << "\n\n";
    auto line = [&](const std::vector<std::string>& cells) {
        std::string s;
        for (std::size_t c = 0; c < cells.size(); ++c) {
            const auto pad = width[c] - std::min(width[c], cells[c].size());
            // Left-align the first column, right-align numbers.
            if (c == 0)
                s += cells[c] + std::string(pad, ' ');
            else
                s += "  " + std::string(pad, ' ') + cells[c];
        }
        while (!s.empty() && s.back() == ' ') s.pop_back();
        o << s << '\n';
    };
    line(columns);
    std::size_t total = 0;
    for (auto w : width) total += w + 2;
    o << std::string(total > 2 ? total - 2 : 0, '-') << '\n';
    for (const auto& row : rows) line(row);
    if (!footer.empty()) {
        o << '\n';
        for (const auto& f : footer) o << f << '\n';
    }
    return o.str();
}

ReportKind report_kind_from_string(std::string_view s) {
    if (s == "strategy-means") return ReportKind::StrategyMeans;
    if (s == "win-rates") return ReportKind::WinRates;
    if (s == "scaling") return ReportKind::Scaling;
    if (s == "model-table") return ReportKind::ModelTable;
    throw ConfigError("unknown report kind '" + std::string(s) +
                      "' (expected strategy-means, win-rates, scaling or model-table)");
}

std::string_view to_string(ReportKind k) {
    switch (k) {
        case ReportKind::StrategyMeans: return "strategy-means";
        case ReportKind::WinRates: return "win-rates";
        case ReportKind::Scaling: return "scaling";
        case ReportKind::ModelTable: return "model-table";
    }
    return "?";
}

ReportTable build_report(std::span<const EvalRecord> all, ReportKind kind, const ReportOptions& opt) {
    std::vector<EvalRecord> slice;
    for (const auto& r : all) {
        if (!opt.dataset.empty() && r.dataset != opt.dataset) continue;
        if (!opt.predictor.empty() && r.predictor != opt.predictor) continue;
        if (!opt.strategy.empty() && r.strategy != opt.strategy && r.strategy_params != opt.strategy) continue;
        if (opt.context_size && r.context_size != *opt.context_size) continue;
        slice.push_back(r);
    }
    if (std::none_of(slice.begin(), slice.end(), [](const EvalRecord& r) { return r.ok(); }))
        throw EmptyReportError("no usable records in the requested slice (" + std::to_string(slice.size()) +
                               " records matched the filters)");

    ReportTable t;
    switch (kind) {
        case ReportKind::StrategyMeans: {
            const auto m = strategy_means(slice, opt.order);
            t.title = std::string("Mean AUC by strategy (") +
                      (opt.order == MeanOrder::Flat ? "flat mean over cells" : "repeats averaged first") + ")";
            t.columns = {"strategy"};
            for (const auto& d : m.datasets) t.columns.push_back(d);
            t.columns.push_back("mean");
            t.columns.push_back("cells");
            for (std::size_t s = 0; s < m.strategies.size(); ++s) {
                std::vector<std::string> row{m.strategies[s]};
                std::size_t cells = 0;
                for (std::size_t d = 0; d < m.datasets.size(); ++d) {
                    row.push_back(fmt(m.mean[s][d]));
                    cells += m.cells[s][d];
                }
                row.push_back(fmt(m.overall[s]));
                row.push_back(std::to_string(cells));
                t.rows.push_back(std::move(row));
            }
            t.footer = m.coverage.footer();
            break;
        }
        case ReportKind::WinRates: {
            const auto w = win_rates(slice, opt.epsilon);
            t.title = "Pairwise win rate (row beats column by more than " + fmt(w.epsilon, 6) + " AUC)";
            t.columns = {"strategy"};
            for (const auto& s : w.strategies) t.columns.push_back(s);
            t.columns.push_back("first_place");
            for (std::size_t i = 0; i < w.strategies.size(); ++i) {
                std::vector<std::string> row{w.strategies[i]};
                for (std::size_t j = 0; j < w.strategies.size(); ++j) {
                    if (i == j) {
                        row.push_back("-");
                        continue;
                    }
                    row.push_back(std::to_string(w.wins[i][j]) + "/" + std::to_string(w.wins[j][i]) + "/" +
                                  std::to_string(w.ties[i][j]) + " (" + fmt(w.win_rate(i, j), 3) + ")");
                }
                row.push_back(w.complete_keys ? fmt(w.first_place[i], 3) : "NA");
                t.rows.push_back(std::move(row));
            }
            t.footer = w.coverage.footer();
            t.footer.insert(t.footer.begin(), "cells read wins/losses/ties over shared keys (win rate)");
            break;
        }
        case ReportKind::Scaling: {
            std::set<std::size_t> sizes;
            for (const auto& r : slice)
                if (r.ok()) sizes.insert(r.context_size);
            const std::size_t lo = opt.min_size.value_or(*sizes.begin());
            const std::size_t hi = opt.max_size.value_or(*sizes.rbegin());
            const auto rows = scaling_table(slice, lo, hi);
            t.title = "Scaling gain: mean AUC at " + std::to_string(hi) + " minus mean AUC at " + std::to_string(lo);
            t.columns = {"strategy", "dataset", "predictor", "auc_" + std::to_string(lo), "auc_" + std::to_string(hi),
                         "gain"};
            std::size_t missing = 0;
            for (const auto& r : rows) {
                t.rows.push_back({r.strategy, r.dataset, r.predictor, fmt(r.auc_min), fmt(r.auc_max), fmt(r.gain)});
                missing += !r.gain.has_value();
            }
            t.footer = count(slice).footer();
            if (missing) t.footer.push_back("gain undefined for " + std::to_string(missing) + " row(s): missing endpoint");
            break;
        }
        case ReportKind::ModelTable: {
            const auto rows = model_table(slice);
            t.title = "Per-predictor means";
            t.columns = {"predictor", "auc", "mcc", "default_f1", "balanced_accuracy", "default_recall", "cells"};
            for (const auto& r : rows)
                t.rows.push_back({r.predictor, fmt(r.auc), fmt(r.mcc), fmt(r.default_f1), fmt(r.balanced_accuracy),
                                  fmt(r.default_recall), std::to_string(r.cells)});
            t.footer = count(slice).footer();
            break;
        }
    }
    return t;
}

}  // namespace tabctx

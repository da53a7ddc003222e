#include "tabctx/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "tabctx/error.hpp"

namespace tabctx {

namespace {

void check_sizes(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size())
        throw ContractError("scores and labels differ in length (" + std::to_string(scores.size()) +
                            " vs " + std::to_string(labels.size()) + ")");
    for (int y : labels)
        if (y != 0 && y != 1) throw DataError("labels must be 0 or 1");
}

double safe_div(double a, double b) { return b == 0.0 ? 0.0 : a / b; }

}  // namespace

double roc_auc(std::span<const double> scores, std::span<const int> labels) {
    check_sizes(scores, labels);
    const std::size_t n = scores.size();
    std::uint64_t n_pos = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(scores[i])) throw DataError("non-finite score");
        n_pos += static_cast<std::uint64_t>(labels[i]);
    }
    const std::uint64_t n_neg = n - n_pos;
    if (n_pos == 0 || n_neg == 0) throw UndefinedMetricError("AUC undefined: only one class present");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // Sum of (doubled, to stay integral) average ranks of the positives.
    std::uint64_t rank_sum2 = 0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        std::uint64_t pos_in_group = 0;
        while (j < n && scores[order[j]] == scores[order[i]]) pos_in_group += static_cast<std::uint64_t>(labels[order[j++]]);
        // ranks i+1 .. j, average (i+1+j)/2
        rank_sum2 += pos_in_group * static_cast<std::uint64_t>(i + 1 + j);
        i = j;
    }
    // U = R_pos - n_pos(n_pos+1)/2
    const long double u2 = static_cast<long double>(rank_sum2) -
                           static_cast<long double>(n_pos) * static_cast<long double>(n_pos + 1);
    return static_cast<double>(u2 / (2.0L * static_cast<long double>(n_pos) * static_cast<long double>(n_neg)));
}

ConfusionCounts confusion(std::span<const double> scores, std::span<const int> labels, double threshold) {
    check_sizes(scores, labels);
    ConfusionCounts c;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const bool pred = scores[i] > threshold;
        if (labels[i] == 1)
            (pred ? c.tp : c.fn)++;
        else
            (pred ? c.fp : c.tn)++;
    }
    return c;
}

double mcc(const ConfusionCounts& c) {
    using ld = long double;
    const ld tp = c.tp, fp = c.fp, fn = c.fn, tn = c.tn;
    const ld a = tp + fp, b = tp + fn, d = tn + fp, e = tn + fn;
    if (a == 0 || b == 0 || d == 0 || e == 0) return 0.0;
    const ld num = tp * tn - fp * fn;
    return static_cast<double>(num / std::sqrt(a * b * d * e));
}

MetricBundle bundle(std::span<const double> scores, std::span<const int> labels, double threshold) {
    MetricBundle m;
    m.threshold = threshold;
    m.auc = roc_auc(scores, labels);
    m.counts = confusion(scores, labels, threshold);
    const auto& c = m.counts;
    const double tp = static_cast<double>(c.tp), fp = static_cast<double>(c.fp);
    const double fn = static_cast<double>(c.fn), tn = static_cast<double>(c.tn);
    m.accuracy = safe_div(tp + tn, static_cast<double>(c.total()));
    m.default_recall = safe_div(tp, tp + fn);
    m.default_precision = safe_div(tp, tp + fp);
    m.default_f1 = safe_div(2.0 * m.default_precision * m.default_recall, m.default_precision + m.default_recall);
    m.balanced_accuracy = 0.5 * (m.default_recall + safe_div(tn, tn + fp));
    m.mcc = mcc(c);
    return m;
}

}  // namespace tabctx

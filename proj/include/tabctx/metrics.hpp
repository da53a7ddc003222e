#pragma once

#include <cstdint>
#include <span>

namespace tabctx {

// Class 1 (default/minority) is the positive class.
struct ConfusionCounts {
    std::uint64_t tp = 0;
    std::uint64_t fp = 0;
    std::uint64_t fn = 0;
    std::uint64_t tn = 0;

    std::uint64_t total() const noexcept { return tp + fp + fn + tn; }
    friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

struct MetricBundle {
    double auc = 0.0;
    double accuracy = 0.0;
    double default_recall = 0.0;
    double default_precision = 0.0;
    double default_f1 = 0.0;
    double balanced_accuracy = 0.0;
    double mcc = 0.0;
    double threshold = 0.5;
    ConfusionCounts counts;
};

inline constexpr double kDefaultThreshold = 0.5;

// Mann-Whitney statistic with half credit for ties, via average ranks.
// Throws UndefinedMetricError when only one class is present.
double roc_auc(std::span<const double> scores, std::span<const int> labels);

// Predicts 1 iff score > threshold (strict).
ConfusionCounts confusion(std::span<const double> scores, std::span<const int> labels,
                          double threshold = kDefaultThreshold);

// Zero when any marginal is zero.
double mcc(const ConfusionCounts& c);

MetricBundle bundle(std::span<const double> scores, std::span<const int> labels,
                    double threshold = kDefaultThreshold);

}  // namespace tabctx

#pragma once

#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "tabctx/table.hpp"

namespace tabctx {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

struct EncodingPolicy {
    // Categorical columns with at most this many levels are one-hot encoded,
    // the rest frequency encoded.
    std::size_t one_hot_cap = 32;
    // Value substituted for missing numeric entries before standardization.
    double missing_sentinel = -1.0;
    // Standard deviations below this are clamped to 1.
    double min_std = 1e-12;
};

enum class FeatureKind { Standardized, OneHot, Frequency };

struct FeatureInfo {
    std::string name;
    std::string source_column;
    FeatureKind kind = FeatureKind::Standardized;
    std::string category;  // OneHot only
    double mean = 0.0;     // Standardized only
    double scale = 1.0;    // Standardized only
};

// How one source column expands into features.
struct ColumnEncoding {
    std::string column;
    ColumnKind source_kind = ColumnKind::Numeric;
    FeatureKind mode = FeatureKind::Standardized;
    std::size_t first_feature = 0;
    std::size_t n_features = 0;
    std::unordered_map<std::string, std::size_t> one_hot_index;  // category -> offset
    std::unordered_map<std::string, double> frequency;
};

// Encoding statistics fitted on a reference pool of rows. Applying it is a
// pure function of the row values, so re-encoding gives identical bytes.
class Encoder {
public:
    static Encoder fit(const Table& table, const EncodingPolicy& policy,
                       std::span<const RowId> fit_pool);

    Matrix transform(const Table& table) const;
    Eigen::RowVectorXd transform_row(const Table& table, std::size_t row) const;

    const EncodingPolicy& policy() const noexcept { return policy_; }
    const std::vector<FeatureInfo>& features() const noexcept { return features_; }
    const std::vector<ColumnEncoding>& columns() const noexcept { return columns_; }
    std::size_t n_features() const noexcept { return features_.size(); }
    std::vector<std::string> feature_names() const;

private:
    EncodingPolicy policy_;
    std::vector<FeatureInfo> features_;
    std::vector<ColumnEncoding> columns_;
};

struct EncodedMatrix {
    Matrix values;
    std::vector<RowId> row_ids;
    std::vector<std::string> feature_names;
    std::shared_ptr<const Encoder> encoder;

    std::size_t n_rows() const noexcept { return static_cast<std::size_t>(values.rows()); }
    std::size_t n_features() const noexcept { return static_cast<std::size_t>(values.cols()); }

    EncodedMatrix take(std::span<const std::size_t> rows) const;
    EncodedMatrix select_features(std::span<const std::size_t> features) const;
};

// Fit on `fit_pool` (ids of rows of `table`), then encode every row of `table`.
EncodedMatrix encode(const Table& table, const EncodingPolicy& policy,
                     std::span<const RowId> fit_pool);

// Encode another table (e.g. a test split) with already fitted statistics.
EncodedMatrix apply_encoding(const std::shared_ptr<const Encoder>& encoder, const Table& table);

}  // namespace tabctx

#include "tabctx/encoding.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "tabctx/error.hpp"

namespace tabctx {

Encoder Encoder::fit(const Table& table, const EncodingPolicy& policy,
                     std::span<const RowId> fit_pool) {
    if (fit_pool.empty()) throw ConfigError("encoding fit pool is empty");
    const auto index = index_by_id(table);
    std::vector<std::size_t> pool;
    pool.reserve(fit_pool.size());
    for (auto id : fit_pool) {
        auto it = index.find(id);
        if (it == index.end())
            throw ConfigError("fit pool row id " + std::to_string(id.value) + " not in table");
        pool.push_back(it->second);
    }
    const double n = static_cast<double>(pool.size());

    Encoder enc;
    enc.policy_ = policy;
    for (auto ci : table.feature_columns()) {
        const auto& col = table.columns()[ci];
        ColumnEncoding ce;
        ce.column = col.name;
        ce.source_kind = col.kind;
        ce.first_feature = enc.features_.size();
        if (col.kind != ColumnKind::Categorical) {
            double sum = 0.0;
            for (auto r : pool) sum += col.is_missing(r) ? policy.missing_sentinel : col.numbers[r];
            const double mean = sum / n;
            double ss = 0.0;
            for (auto r : pool) {
                const double d = (col.is_missing(r) ? policy.missing_sentinel : col.numbers[r]) - mean;
                ss += d * d;
            }
            double sd = std::sqrt(ss / n);
            if (sd < policy.min_std) sd = 1.0;
            ce.mode = FeatureKind::Standardized;
            ce.n_features = 1;
            enc.features_.push_back({col.name, col.name, FeatureKind::Standardized, {}, mean, sd});
        } else {
            std::map<std::string, std::size_t> counts;  // ordered -> stable feature order
            for (auto r : pool)
                if (!col.is_missing(r)) ++counts[col.strings[r]];
            if (counts.size() <= policy.one_hot_cap) {
                ce.mode = FeatureKind::OneHot;
                std::size_t k = 0;
                for (const auto& [cat, cnt] : counts) {
                    ce.one_hot_index.emplace(cat, k++);
                    enc.features_.push_back({col.name + "=" + cat, col.name, FeatureKind::OneHot, cat, 0.0, 1.0});
                }
                ce.n_features = counts.size();
            } else {
                ce.mode = FeatureKind::Frequency;
                for (const auto& [cat, cnt] : counts) ce.frequency.emplace(cat, static_cast<double>(cnt) / n);
                ce.n_features = 1;
                enc.features_.push_back({col.name + "#freq", col.name, FeatureKind::Frequency, {}, 0.0, 1.0});
            }
        }
        enc.columns_.push_back(std::move(ce));
    }
    return enc;
}

std::vector<std::string> Encoder::feature_names() const {
    std::vector<std::string> out;
    out.reserve(features_.size());
    for (const auto& f : features_) out.push_back(f.name);
    return out;
}

Matrix Encoder::transform(const Table& table) const {
    Matrix m = Matrix::Zero(static_cast<Eigen::Index>(table.n_rows()),
                            static_cast<Eigen::Index>(features_.size()));
    for (const auto& ce : columns_) {
        auto ci = table.find(ce.column);
        if (!ci) throw ConfigError("column '" + ce.column + "' missing from table being encoded");
        const auto& col = table.columns()[*ci];
        if (col.kind != ce.source_kind)
            throw ConfigError("column '" + ce.column + "' changed kind since encoder fit");
        const auto f0 = static_cast<Eigen::Index>(ce.first_feature);
        switch (ce.mode) {
            case FeatureKind::Standardized: {
                const auto& fi = features_[ce.first_feature];
                for (std::size_t r = 0; r < table.n_rows(); ++r) {
                    const double v = col.is_missing(r) ? policy_.missing_sentinel : col.numbers[r];
                    m(static_cast<Eigen::Index>(r), f0) = (v - fi.mean) / fi.scale;
                }
                break;
            }
            case FeatureKind::OneHot:
                for (std::size_t r = 0; r < table.n_rows(); ++r) {
                    if (col.is_missing(r)) continue;
                    auto it = ce.one_hot_index.find(col.strings[r]);
                    if (it != ce.one_hot_index.end())
                        m(static_cast<Eigen::Index>(r), f0 + static_cast<Eigen::Index>(it->second)) = 1.0;
                }
                break;
            case FeatureKind::Frequency:
                for (std::size_t r = 0; r < table.n_rows(); ++r) {
                    if (col.is_missing(r)) continue;
                    auto it = ce.frequency.find(col.strings[r]);
                    if (it != ce.frequency.end()) m(static_cast<Eigen::Index>(r), f0) = it->second;
                }
                break;
        }
    }
    return m;
}

Eigen::RowVectorXd Encoder::transform_row(const Table& table, std::size_t row) const {
    const std::size_t r[] = {row};
    return transform(table.take(r)).row(0);
}

EncodedMatrix EncodedMatrix::take(std::span<const std::size_t> rows) const {
    EncodedMatrix out;
    out.encoder = encoder;
    out.feature_names = feature_names;
    out.values.resize(static_cast<Eigen::Index>(rows.size()), values.cols());
    out.row_ids.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        out.values.row(static_cast<Eigen::Index>(i)) = values.row(static_cast<Eigen::Index>(rows[i]));
        out.row_ids.push_back(row_ids.at(rows[i]));
    }
    return out;
}

EncodedMatrix EncodedMatrix::select_features(std::span<const std::size_t> features) const {
    EncodedMatrix out;
    out.encoder = encoder;
    out.row_ids = row_ids;
    out.values.resize(values.rows(), static_cast<Eigen::Index>(features.size()));
    for (std::size_t j = 0; j < features.size(); ++j) {
        out.feature_names.push_back(feature_names.at(features[j]));
        out.values.col(static_cast<Eigen::Index>(j)) = values.col(static_cast<Eigen::Index>(features[j]));
    }
    return out;
}

EncodedMatrix encode(const Table& table, const EncodingPolicy& policy,
                     std::span<const RowId> fit_pool) {
    auto enc = std::make_shared<const Encoder>(Encoder::fit(table, policy, fit_pool));
    return apply_encoding(enc, table);
}

EncodedMatrix apply_encoding(const std::shared_ptr<const Encoder>& encoder, const Table& table) {
    EncodedMatrix out;
    out.encoder = encoder;
    out.values = encoder->transform(table);
    out.row_ids = table.row_ids();
    out.feature_names = encoder->feature_names();
    return out;
}

}  // namespace tabctx

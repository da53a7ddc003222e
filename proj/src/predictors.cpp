#include "tabctx/predictors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <unordered_map>

#include "tabctx/error.hpp"
#include "tabctx/kmeans.hpp"
#include "tabctx/random.hpp"

namespace tabctx {

// ---- inputs ---------------------------------------------------------------------

PredictorInput window_input(const ContextWindow& window, const ContextPool& pool) {
    PredictorInput in;
    const auto& enc = pool.encoded();
    const auto index = index_by_id(pool.table());
    const auto d = static_cast<Eigen::Index>(enc.n_features());
    in.encoded.resize(static_cast<Eigen::Index>(window.size()), d);

    // Unique real rows first, then the synthetic rows.
    std::vector<std::size_t> real_positions;
    std::unordered_map<std::size_t, std::size_t> raw_slot;
    std::size_t syn = 0;
    std::vector<std::pair<bool, std::size_t>> source;  // (synthetic?, position)
    for (const auto& r : window.rows) {
        if (r.synthetic()) {
            source.emplace_back(true, syn++);
            continue;
        }
        auto it = index.find(r.id);
        if (it == index.end())
            throw StructuralError("window row id " + std::to_string(r.id.value) + " is not in the pool");
        source.emplace_back(false, it->second);
        if (raw_slot.emplace(it->second, real_positions.size()).second) real_positions.push_back(it->second);
    }
    auto raw = pool.table().take(real_positions);
    if (syn > 0) raw = concat_rows(raw, window.synthetic);
    in.raw = std::make_shared<const Table>(std::move(raw));

    for (std::size_t i = 0; i < window.size(); ++i) {
        const auto& r = window.rows[i];
        const auto [is_syn, p] = source[i];
        in.ids.push_back(r.id);
        in.labels.push_back(r.label);
        const auto row = static_cast<Eigen::Index>(i);
        if (is_syn) {
            in.encoded.row(row) = window.synthetic_encoded.row(static_cast<Eigen::Index>(p));
            in.raw_rows.push_back(real_positions.size() + p);
        } else {
            in.encoded.row(row) = enc.values.row(static_cast<Eigen::Index>(p));
            in.raw_rows.push_back(raw_slot.at(p));
        }
    }
    return in;
}

PredictorInput query_input(const Table& queries, const EncodedMatrix& encoded) {
    if (encoded.n_rows() != queries.n_rows()) throw StructuralError("query table/encoding row mismatch");
    PredictorInput in;
    in.encoded = encoded.values;
    in.ids = queries.row_ids();
    in.raw = std::make_shared<const Table>(queries);
    in.raw_rows.resize(queries.n_rows());
    for (std::size_t i = 0; i < queries.n_rows(); ++i) in.raw_rows[i] = i;
    return in;
}

PredictorInput matrix_input(Matrix encoded, std::vector<int> labels) {
    PredictorInput in;
    const auto n = static_cast<std::size_t>(encoded.rows());
    in.encoded = std::move(encoded);
    in.labels = std::move(labels);
    in.ids.resize(n);
    for (std::size_t i = 0; i < n; ++i) in.ids[i] = RowId{i};
    return in;
}

namespace {

void require_window(const PredictorInput& w, bool both_classes, const char* who) {
    if (w.size() == 0) throw ContractError(std::string(who) + ": empty context window");
    if (w.labels.size() != w.size()) throw ContractError(std::string(who) + ": window rows need labels");
    if (both_classes) {
        const auto c = count_labels(w.labels);
        if (c.n0 == 0 || c.n1 == 0) throw ContractError(std::string(who) + ": window must contain both classes");
    }
}

void require_dims(const PredictorInput& w, const PredictorInput& q) {
    if (w.encoded.cols() != q.encoded.cols())
        throw ContractError("window and queries have different feature counts");
}

}  // namespace

// ---- kNN ------------------------------------------------------------------------

std::vector<double> knn_predict(const PredictorInput& window, const PredictorInput& queries,
                                const KnnOptions& options) {
    require_window(window, false, "knn");
    require_dims(window, queries);
    const std::size_t n = window.size();
    const std::size_t k =
        options.k.value_or(static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n)))));
    if (k == 0 || k > n)
        throw ContractError("knn: k=" + std::to_string(k) + " must lie in [1, " + std::to_string(n) + "]");
    const auto d = window.encoded.cols();

    std::vector<double> out(queries.size());
    std::vector<std::pair<double, std::uint64_t>> key(n);
    std::vector<std::size_t> order(n);
    for (std::size_t q = 0; q < queries.size(); ++q) {
        const double* qp = queries.encoded.row(static_cast<Eigen::Index>(q)).data();
        for (std::size_t i = 0; i < n; ++i) {
            key[i] = {squared_distance(window.encoded.row(static_cast<Eigen::Index>(i)).data(), qp, d),
                      window.ids[i].value};
            order[i] = i;
        }
        // Ties on distance resolve by row id so window order never matters.
        auto less = [&](std::size_t a, std::size_t b) { return key[a] < key[b]; };
        if (k < n) std::nth_element(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k - 1), order.end(), less);
        double num = 0.0, den = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            const auto i = order[j];
            const double w = options.distance_weighted ? 1.0 / (std::sqrt(key[i].first) + options.epsilon) : 1.0;
            num += w * window.labels[i];
            den += w;
        }
        out[q] = num / den;
    }
    return out;
}

namespace {

class KnnState final : public ConditionedPredictor {
public:
    KnnState(PredictorInput window, KnnOptions options) : window_(std::move(window)), options_(options) {}
    std::vector<double> predict_proba(const PredictorInput& q) const override {
        return knn_predict(window_, q, options_);
    }

private:
    PredictorInput window_;
    KnnOptions options_;
};

}  // namespace

PredictorIdentity KnnPredictor::identity() const {
    std::string name = "knn";
    if (options_.k) name += "(k=" + std::to_string(*options_.k) + ")";
    if (options_.distance_weighted) name += "[weighted]";
    return {name, "1"};
}

std::unique_ptr<ConditionedPredictor> KnnPredictor::condition(const PredictorInput& window) const {
    require_window(window, false, "knn");
    return std::make_unique<KnnState>(window, options_);
}

// ---- Gaussian NB -------------------------------------------------------------------

GaussianNbModel GaussianNbModel::fit(const PredictorInput& window, const GaussianNbOptions& options) {
    require_window(window, true, "gaussian_nb");
    const auto d = window.encoded.cols();
    GaussianNbModel m;
    const auto counts = count_labels(window.labels);
    for (int c = 0; c < 2; ++c) {
        const double nc = static_cast<double>(counts.of(c));
        m.log_prior[static_cast<std::size_t>(c)] = std::log(nc / static_cast<double>(window.size()));
        Vector mean = Vector::Zero(d), var = Vector::Zero(d);
        for (std::size_t i = 0; i < window.size(); ++i)
            if (window.labels[i] == c) mean += window.encoded.row(static_cast<Eigen::Index>(i)).transpose();
        mean /= nc;
        for (std::size_t i = 0; i < window.size(); ++i)
            if (window.labels[i] == c)
                var += (window.encoded.row(static_cast<Eigen::Index>(i)).transpose() - mean).array().square().matrix();
        var /= nc;
        var = var.cwiseMax(options.variance_floor);
        m.mean[static_cast<std::size_t>(c)] = std::move(mean);
        m.variance[static_cast<std::size_t>(c)] = std::move(var);
    }
    return m;
}

std::array<double, 2> GaussianNbModel::posterior(const double* x) const {
    std::array<double, 2> lj{};
    const auto d = mean[0].size();
    for (std::size_t c = 0; c < 2; ++c) {
        double s = log_prior[c];
        for (Eigen::Index j = 0; j < d; ++j) {
            const double v = variance[c](j);
            const double z = x[j] - mean[c](j);
            s += -0.5 * std::log(2.0 * std::numbers::pi * v) - z * z / (2.0 * v);
        }
        lj[c] = s;
    }
    const double mx = std::max(lj[0], lj[1]);
    const double lse = mx + std::log(std::exp(lj[0] - mx) + std::exp(lj[1] - mx));
    return {std::exp(lj[0] - lse), std::exp(lj[1] - lse)};
}

std::vector<double> gaussian_nb_predict(const PredictorInput& window, const PredictorInput& queries,
                                        const GaussianNbOptions& options) {
    require_dims(window, queries);
    const auto model = GaussianNbModel::fit(window, options);
    std::vector<double> out(queries.size());
    for (std::size_t q = 0; q < queries.size(); ++q)
        out[q] = model.posterior(queries.encoded.row(static_cast<Eigen::Index>(q)).data())[1];
    return out;
}

namespace {

class NbState final : public ConditionedPredictor {
public:
    explicit NbState(GaussianNbModel m) : model_(std::move(m)) {}
    std::vector<double> predict_proba(const PredictorInput& q) const override {
        if (q.encoded.cols() != model_.mean[0].size())
            throw ContractError("window and queries have different feature counts");
        std::vector<double> out(q.size());
        for (std::size_t i = 0; i < q.size(); ++i)
            out[i] = model_.posterior(q.encoded.row(static_cast<Eigen::Index>(i)).data())[1];
        return out;
    }

private:
    GaussianNbModel model_;
};

}  // namespace

PredictorIdentity GaussianNbPredictor::identity() const { return {"gaussian_nb", "1"}; }

std::unique_ptr<ConditionedPredictor> GaussianNbPredictor::condition(const PredictorInput& window) const {
    return std::make_unique<NbState>(GaussianNbModel::fit(window, options_));
}

// ---- logistic -----------------------------------------------------------------------

namespace {

double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }
double sigmoid(double z) {
    if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

Vector linear_scores(const Matrix& x, const Vector& w) {
    const auto d = x.cols();
    return (x * w.tail(d)).array() + w(0);
}

}  // namespace

double logistic_objective(const Matrix& x, std::span<const int> y, const Vector& w, double l2) {
    const Vector z = linear_scores(x, w);
    double s = 0.0;
    for (Eigen::Index i = 0; i < z.size(); ++i) s += softplus(z(i)) - y[static_cast<std::size_t>(i)] * z(i);
    return s / static_cast<double>(z.size()) + 0.5 * l2 * w.tail(x.cols()).squaredNorm();
}

Vector logistic_gradient(const Matrix& x, std::span<const int> y, const Vector& w, double l2) {
    const auto n = x.rows(), d = x.cols();
    const Vector z = linear_scores(x, w);
    Vector r(n);
    for (Eigen::Index i = 0; i < n; ++i) r(i) = sigmoid(z(i)) - y[static_cast<std::size_t>(i)];
    Vector g(d + 1);
    g(0) = r.sum() / static_cast<double>(n);
    g.tail(d) = x.transpose() * r / static_cast<double>(n) + l2 * w.tail(d);
    return g;
}

LogisticFit logistic_fit(const Matrix& x, std::span<const int> y, const LogisticOptions& options) {
    const auto n = x.rows(), d = x.cols();
    LogisticFit fit;
    fit.weights = Vector::Zero(d + 1);
    Vector g = logistic_gradient(x, y, fit.weights, options.l2);
    fit.gradient_norm = g.norm();
    fit.converged = fit.gradient_norm <= options.tolerance;
    double f = logistic_objective(x, y, fit.weights, options.l2);
    while (!fit.converged && fit.epochs < options.max_epochs) {
        const Vector z = linear_scores(x, fit.weights);
        Eigen::MatrixXd h = Eigen::MatrixXd::Zero(d + 1, d + 1);
        Eigen::MatrixXd xa(n, d + 1);
        xa.col(0).setOnes();
        xa.rightCols(d) = x;
        Vector s(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            const double p = sigmoid(z(i));
            s(i) = p * (1.0 - p);
        }
        h = xa.transpose() * s.asDiagonal() * xa / static_cast<double>(n);
        h.diagonal().tail(d).array() += options.l2;
        h.diagonal().array() += 1e-12;
        const Vector step = h.ldlt().solve(g);
        double t = 1.0;
        const double slope = g.dot(step);
        Vector next = fit.weights - step;
        double f_next = logistic_objective(x, y, next, options.l2);
        for (int k = 0; k < 60 && !(f_next <= f - 1e-4 * t * slope); ++k) {
            t *= 0.5;
            next = fit.weights - t * step;
            f_next = logistic_objective(x, y, next, options.l2);
        }
        ++fit.epochs;
        if (!(f_next <= f)) break;  // no descent possible at machine precision
        fit.weights = std::move(next);
        f = f_next;
        g = logistic_gradient(x, y, fit.weights, options.l2);
        fit.gradient_norm = g.norm();
        fit.converged = fit.gradient_norm <= options.tolerance;
    }
    return fit;
}

std::vector<double> logistic_scores(const LogisticFit& fit, const Matrix& x) {
    const Vector z = linear_scores(x, fit.weights);
    std::vector<double> out(static_cast<std::size_t>(z.size()));
    for (Eigen::Index i = 0; i < z.size(); ++i) out[static_cast<std::size_t>(i)] = sigmoid(z(i));
    return out;
}

std::vector<double> logistic_context_fit_predict(const PredictorInput& window, const PredictorInput& queries,
                                                 const LogisticOptions& options, bool* converged) {
    require_window(window, true, "logistic");
    require_dims(window, queries);
    const auto fit = logistic_fit(window.encoded, window.labels, options);
    if (converged) *converged = fit.converged;
    return logistic_scores(fit, queries.encoded);
}

namespace {

class LogisticState final : public ConditionedPredictor {
public:
    LogisticState(LogisticFit fit, LogisticOptions options) : fit_(std::move(fit)), options_(options) {}
    std::vector<double> predict_proba(const PredictorInput& q) const override {
        if (q.encoded.cols() + 1 != fit_.weights.size())
            throw ContractError("window and queries have different feature counts");
        return logistic_scores(fit_, q.encoded);
    }
    std::vector<std::string> warnings() const override {
        if (fit_.converged) return {};
        char buf[160];
        std::snprintf(buf, sizeof buf, "logistic: not converged after %zu epochs (gradient norm %.3g > %.3g)",
                      fit_.epochs, fit_.gradient_norm, options_.tolerance);
        return {buf};
    }

private:
    LogisticFit fit_;
    LogisticOptions options_;
};

class ConstantState final : public ConditionedPredictor {
public:
    explicit ConstantState(double p) : p_(p) {}
    std::vector<double> predict_proba(const PredictorInput& q) const override {
        return std::vector<double>(q.size(), p_);
    }

private:
    double p_;
};

}  // namespace

PredictorIdentity LogisticPredictor::identity() const { return {"logistic", "1"}; }

std::unique_ptr<ConditionedPredictor> LogisticPredictor::condition(const PredictorInput& window) const {
    require_window(window, true, "logistic");
    return std::make_unique<LogisticState>(logistic_fit(window.encoded, window.labels, options_), options_);
}

PredictorIdentity ConstantPredictor::identity() const { return {"constant", "1"}; }

std::unique_ptr<ConditionedPredictor> ConstantPredictor::condition(const PredictorInput&) const {
    return std::make_unique<ConstantState>(p_);
}

std::string context_hash(std::span<const RowId> ids, std::span<const int> labels) {
    if (ids.size() != labels.size()) throw ContractError("context_hash: ids/labels length mismatch");
    std::uint64_t h = 0;
    for (std::size_t i = 0; i < ids.size(); ++i)
        h += mix64(ids[i].value ^ (static_cast<std::uint64_t>(labels[i]) * 0x9E3779B97F4A7C15ULL));
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace tabctx

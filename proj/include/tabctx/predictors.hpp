#pragma once

#include <array>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tabctx/context.hpp"
#include "tabctx/encoding.hpp"

namespace tabctx {

struct PredictorIdentity {
    std::string name;
    std::string version;
};

// Rows handed to a predictor. Native predictors read `encoded`; external
// backends read the raw values (`raw` addressed through `raw_rows`, which
// allows the same raw row to appear several times).
struct PredictorInput {
    Matrix encoded;
    std::vector<RowId> ids;
    std::vector<int> labels;  // empty for queries
    std::shared_ptr<const Table> raw;
    std::vector<std::size_t> raw_rows;

    std::size_t size() const noexcept { return ids.size(); }
    bool has_raw() const noexcept { return raw != nullptr; }
};

// Real rows come from the pool, synthetic rows from the window itself.
PredictorInput window_input(const ContextWindow& window, const ContextPool& pool);
PredictorInput query_input(const Table& queries, const EncodedMatrix& encoded);
// Encoded-only input (no raw rows); ids are 0..n-1.
PredictorInput matrix_input(Matrix encoded, std::vector<int> labels = {});

class ConditionedPredictor {
public:
    virtual ~ConditionedPredictor() = default;
    // One probability of class 1 per query row, in query order.
    virtual std::vector<double> predict_proba(const PredictorInput& queries) const = 0;
    virtual std::vector<std::string> warnings() const { return {}; }
    // Name/version reported by an external backend, if any.
    virtual std::optional<PredictorIdentity> backend_identity() const { return std::nullopt; }
};

// Conditioning never mutates the predictor; the returned state is immutable.
class Predictor {
public:
    virtual ~Predictor() = default;
    virtual PredictorIdentity identity() const = 0;
    virtual std::unique_ptr<ConditionedPredictor> condition(const PredictorInput& window) const = 0;
};

// ---- k nearest neighbours -------------------------------------------------------

struct KnnOptions {
    std::optional<std::size_t> k;  // default ceil(sqrt(|window|))
    bool distance_weighted = false;
    double epsilon = 1e-9;
};

std::vector<double> knn_predict(const PredictorInput& window, const PredictorInput& queries,
                                const KnnOptions& options = {});

class KnnPredictor final : public Predictor {
public:
    explicit KnnPredictor(KnnOptions options = {}) : options_(options) {}
    PredictorIdentity identity() const override;
    std::unique_ptr<ConditionedPredictor> condition(const PredictorInput& window) const override;

private:
    KnnOptions options_;
};

// ---- Gaussian naive Bayes ------------------------------------------------------------

struct GaussianNbOptions {
    double variance_floor = 1e-6;
};

struct GaussianNbModel {
    std::array<double, 2> log_prior{};
    std::array<Vector, 2> mean;
    std::array<Vector, 2> variance;

    static GaussianNbModel fit(const PredictorInput& window, const GaussianNbOptions& options = {});
    // Posterior (p0, p1) via log-sum-exp.
    std::array<double, 2> posterior(const double* x) const;
};

std::vector<double> gaussian_nb_predict(const PredictorInput& window, const PredictorInput& queries,
                                        const GaussianNbOptions& options = {});

class GaussianNbPredictor final : public Predictor {
public:
    explicit GaussianNbPredictor(GaussianNbOptions options = {}) : options_(options) {}
    PredictorIdentity identity() const override;
    std::unique_ptr<ConditionedPredictor> condition(const PredictorInput& window) const override;

private:
    GaussianNbOptions options_;
};

// ---- L2 logistic regression fitted on the window ----------------------------------------

struct LogisticOptions {
    double l2 = 1e-2;
    std::size_t max_epochs = 500;
    double tolerance = 1e-6;
};

struct LogisticFit {
    Vector weights;  // [bias, w_1..w_d]
    std::size_t epochs = 0;
    double gradient_norm = 0.0;
    bool converged = false;
};

// Mean log-loss plus (l2/2)|w|^2; the bias is not penalized.
double logistic_objective(const Matrix& x, std::span<const int> y, const Vector& weights, double l2);
Vector logistic_gradient(const Matrix& x, std::span<const int> y, const Vector& weights, double l2);

// Damped Newton from the zero vector; stops on gradient norm or epoch cap.
LogisticFit logistic_fit(const Matrix& x, std::span<const int> y, const LogisticOptions& options = {});
std::vector<double> logistic_scores(const LogisticFit& fit, const Matrix& x);

std::vector<double> logistic_context_fit_predict(const PredictorInput& window, const PredictorInput& queries,
                                                 const LogisticOptions& options = {},
                                                 bool* converged = nullptr);

class LogisticPredictor final : public Predictor {
public:
    explicit LogisticPredictor(LogisticOptions options = {}) : options_(options) {}
    PredictorIdentity identity() const override;
    std::unique_ptr<ConditionedPredictor> condition(const PredictorInput& window) const override;

private:
    LogisticOptions options_;
};

// Predicts a fixed probability; useful as a degenerate baseline and in tests.
class ConstantPredictor final : public Predictor {
public:
    explicit ConstantPredictor(double p) : p_(p) {}
    PredictorIdentity identity() const override;
    std::unique_ptr<ConditionedPredictor> condition(const PredictorInput& window) const override;

private:
    double p_;
};

// Order-independent digest of (row id, label) pairs as 16 lower-case hex
// digits: sum over rows of mix64(id ^ (label * 0x9E3779B97F4A7C15)) mod 2^64.
std::string context_hash(std::span<const RowId> ids, std::span<const int> labels);

}  // namespace tabctx

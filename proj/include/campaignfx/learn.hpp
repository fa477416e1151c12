#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "campaignfx/effect.hpp"
#include "campaignfx/error.hpp"
#include "campaignfx/features.hpp"

namespace campaignfx {

/// Row-major feature matrix over the full column layout plus binary labels.
struct Dataset {
    std::vector<std::vector<double>> x;
    std::vector<int> y;

    std::size_t size() const noexcept { return y.size(); }
    std::size_t positives() const noexcept;
};

/// Significant-labeled rows of one horizon (Inconclusive excluded).
Dataset labeled_dataset(const FeatureTable& table, Horizon horizon);

/// Inconclusive rows of one horizon labeled by the sign of the observed d;
/// rows with d == 0 or undefined are dropped.
Dataset inconclusive_dataset(const FeatureTable& table, Horizon horizon);

/// Column indices (into feature_columns()) that belong to the selected sets.
std::vector<std::size_t> columns_for(unsigned sets);

struct MannWhitneyResult {
    double u = 0.0;  // pairs won by `pos`, ties counted half
    double p_value = 1.0;
    bool exact = false;
};

inline constexpr std::size_t kExactPairLimit = 400;

/// Two-sided Mann-Whitney U with average ranks. Exact null distribution of the
/// (tied) rank sum when n_p*n_n <= 400, otherwise the tie-corrected normal
/// approximation with continuity correction.
MannWhitneyResult mann_whitney(std::span<const double> pos, std::span<const double> neg);

/// AUC = U / (n_p * n_n).
double feature_auc(std::span<const double> pos, std::span<const double> neg);

struct Metrics {
    double accuracy = 0.0;
    double f_measure = 0.0;
    std::optional<double> auc;  // empty when one class is absent
    std::size_t n = 0;
};

/// Accuracy and positive-class F1 at threshold 0.5, rank-based AUC on the scores.
Metrics compute_metrics(std::span<const double> scores, std::span<const int> labels);

struct LogisticConfig {
    double l2 = 1e-6;
    double tolerance = 1e-8;
    int max_iterations = 1000;
};

class LogisticModel {
public:
    double predict_proba(std::span<const double> row) const;

    /// Coefficients on the original (unstandardized) scale, aligned with used_columns().
    std::vector<double> raw_coefficients() const;
    double raw_intercept() const;

    const std::vector<std::size_t>& used_columns() const noexcept { return columns_; }
    const std::vector<std::size_t>& dropped_columns() const noexcept { return dropped_; }
    int iterations() const noexcept { return iterations_; }
    bool converged() const noexcept { return converged_; }

private:
    friend LogisticModel train_logistic(const Dataset&, std::span<const std::size_t>, const LogisticConfig&,
                                        IssueLog*);
    std::vector<std::size_t> columns_;
    std::vector<std::size_t> dropped_;
    std::vector<double> mean_;
    std::vector<double> scale_;
    std::vector<double> weights_;  // standardized space
    double intercept_ = 0.0;
    int iterations_ = 0;
    bool converged_ = false;
};

/// Penalized maximum likelihood by Newton steps with backtracking. Features are
/// standardized on the training rows; constant columns are dropped (SingularFit
/// warning). Throws DegenerateSample with fewer than 2 rows per class.
LogisticModel train_logistic(const Dataset& ds, std::span<const std::size_t> columns,
                             const LogisticConfig& cfg = {}, IssueLog* warnings = nullptr);

struct ForestConfig {
    int n_trees = 100;
    std::size_t min_leaf = 2;
    std::size_t max_features = 0;  // 0: floor(sqrt(p))
    std::uint64_t seed = 0;
};

class ForestModel {
public:
    struct Node {
        int feature = -1;  // -1 marks a leaf
        double threshold = 0.0;
        int left = -1;
        int right = -1;
        double value = 0.0;  // positive share at the leaf
    };
    using Tree = std::vector<Node>;

    double predict_proba(std::span<const double> row) const;
    std::size_t tree_count() const noexcept { return trees_.size(); }
    const std::vector<std::size_t>& used_columns() const noexcept { return columns_; }

private:
    friend ForestModel train_forest(const Dataset&, std::span<const std::size_t>, const ForestConfig&, IssueLog*);
    std::vector<std::size_t> columns_;
    std::vector<Tree> trees_;
};

/// Bagged CART trees with Gini splits over a random feature subset per node,
/// grown until pure or no split leaves min_leaf rows on both sides.
ForestModel train_forest(const Dataset& ds, std::span<const std::size_t> columns, const ForestConfig& cfg = {},
                         IssueLog* warnings = nullptr);

enum class ModelKind { Logistic, Forest };

std::string_view to_string(ModelKind kind) noexcept;
std::optional<ModelKind> parse_model_kind(std::string_view text) noexcept;

struct ModelConfig {
    ModelKind kind = ModelKind::Logistic;
    LogisticConfig logistic;
    ForestConfig forest;
};

using Model = std::variant<LogisticModel, ForestModel>;

Model train_model(const Dataset& ds, std::span<const std::size_t> columns, const ModelConfig& cfg,
                  IssueLog* warnings = nullptr);
double predict_proba(const Model& model, std::span<const double> row);
std::vector<double> predict_all(const Model& model, const Dataset& ds);

/// Class-stratified assignment of row indices to k folds (round-robin after a
/// seeded shuffle within each class).
std::vector<std::vector<std::size_t>> stratified_folds(std::span<const int> labels, int k, std::uint64_t seed);

struct CvResult {
    Metrics metrics;
    std::vector<double> scores;  // out-of-fold probabilities aligned with ds rows
};

/// Stratified k-fold CV; metrics computed on pooled out-of-fold predictions.
/// Throws TooFewRows when len(ds) < k.
CvResult cross_validate(const Dataset& ds, const ModelConfig& cfg, unsigned feature_sets, int k = 10,
                        std::uint64_t seed = 0);

/// Scores a model trained on significant rows against sign-of-d labels.
Metrics out_of_sample_eval(const Model& model, const Dataset& eval);

double rms_probability_gap(std::span<const double> a, std::span<const double> b);
double rms_probability_gap(const Model& a, const Model& b, const Dataset& rows);

}  // namespace campaignfx

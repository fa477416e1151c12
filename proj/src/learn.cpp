#include "campaignfx/learn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Dense>

#include "campaignfx/random.hpp"
#include "campaignfx/stats.hpp"

namespace campaignfx {

std::size_t Dataset::positives() const noexcept {
    return static_cast<std::size_t>(std::count(y.begin(), y.end(), 1));
}

Dataset labeled_dataset(const FeatureTable& table, Horizon horizon) {
    Dataset ds;
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        if (table.horizons[i] != horizon) continue;
        const auto label = class_label(table.labels[i]);
        if (!label) continue;
        ds.x.push_back(table.rows[i]);
        ds.y.push_back(*label);
    }
    return ds;
}

Dataset inconclusive_dataset(const FeatureTable& table, Horizon horizon) {
    Dataset ds;
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        if (table.horizons[i] != horizon || table.labels[i] != EffectLabel::Inconclusive) continue;
        const auto& d = table.observed_d[i];
        if (!d || *d == 0.0) continue;
        ds.x.push_back(table.rows[i]);
        ds.y.push_back(*d > 0.0 ? 1 : 0);
    }
    return ds;
}

std::vector<std::size_t> columns_for(unsigned sets) {
    std::vector<std::size_t> out;
    const auto& cols = feature_columns();
    for (std::size_t i = 0; i < cols.size(); ++i)
        if (sets & cols[i].set) out.push_back(i);
    return out;
}

// ---------------------------------------------------------------------------
// Rank statistics

namespace {

double exact_two_sided_p(std::span<const double> ranks, std::size_t subset_size, double observed_rank_sum) {
    // Doubled average ranks are integers, so the rank-sum distribution is a
    // subset-sum count over integers.
    std::vector<std::size_t> r2(ranks.size());
    std::size_t total = 0;
    for (std::size_t i = 0; i < ranks.size(); ++i) {
        r2[i] = static_cast<std::size_t>(std::llround(ranks[i] * 2.0));
        total += r2[i];
    }
    const std::size_t m = subset_size;
    std::vector<std::vector<double>> ways(m + 1, std::vector<double>(total + 1, 0.0));
    ways[0][0] = 1.0;
    for (std::size_t i = 0; i < r2.size(); ++i) {
        for (std::size_t j = std::min(i + 1, m); j >= 1; --j) {
            const auto& prev = ways[j - 1];
            auto& cur = ways[j];
            for (std::size_t s = total; s + 1 > r2[i]; --s) {
                if (prev[s - r2[i]] != 0.0) cur[s] += prev[s - r2[i]];
                if (s == 0) break;
            }
        }
    }
    const auto w = static_cast<std::size_t>(std::llround(observed_rank_sum * 2.0));
    double all = 0.0;
    double lower = 0.0;
    double upper = 0.0;
    for (std::size_t s = 0; s <= total; ++s) {
        const double c = ways[m][s];
        all += c;
        if (s <= w) lower += c;
        if (s >= w) upper += c;
    }
    return std::min(1.0, 2.0 * std::min(lower, upper) / all);
}

}  // namespace

MannWhitneyResult mann_whitney(std::span<const double> pos, std::span<const double> neg) {
    if (pos.empty() || neg.empty()) throw Error(ErrorKind::DegenerateSample, "Mann-Whitney needs two non-empty samples");
    std::vector<double> pooled(pos.begin(), pos.end());
    pooled.insert(pooled.end(), neg.begin(), neg.end());
    const auto ranks = average_ranks(pooled);
    const double np = static_cast<double>(pos.size());
    const double nn = static_cast<double>(neg.size());
    double rank_sum_pos = 0.0;
    for (std::size_t i = 0; i < pos.size(); ++i) rank_sum_pos += ranks[i];

    MannWhitneyResult r;
    r.u = rank_sum_pos - np * (np + 1.0) / 2.0;

    if (pos.size() * neg.size() <= kExactPairLimit) {
        r.exact = true;
        if (pos.size() <= neg.size()) {
            r.p_value = exact_two_sided_p(ranks, pos.size(), rank_sum_pos);
        } else {
            const double rank_sum_neg = std::accumulate(ranks.begin() + static_cast<std::ptrdiff_t>(pos.size()),
                                                        ranks.end(), 0.0);
            r.p_value = exact_two_sided_p(ranks, neg.size(), rank_sum_neg);
        }
        return r;
    }

    std::vector<double> sorted = pooled;
    std::sort(sorted.begin(), sorted.end());
    double tie_term = 0.0;
    for (std::size_t i = 0; i < sorted.size();) {
        std::size_t j = i + 1;
        while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
        const double t = static_cast<double>(j - i);
        tie_term += t * t * t - t;
        i = j;
    }
    const double n = np + nn;
    const double variance = np * nn / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
    if (variance <= 0.0) {
        r.p_value = 1.0;
        return r;
    }
    const double z = std::max(0.0, std::abs(r.u - np * nn / 2.0) - 0.5) / std::sqrt(variance);
    r.p_value = std::min(1.0, normal_two_sided_p(z));
    return r;
}

double feature_auc(std::span<const double> pos, std::span<const double> neg) {
    if (pos.empty() || neg.empty()) throw Error(ErrorKind::DegenerateSample, "AUC needs two non-empty samples");
    std::vector<double> pooled(pos.begin(), pos.end());
    pooled.insert(pooled.end(), neg.begin(), neg.end());
    const auto ranks = average_ranks(pooled);
    const double np = static_cast<double>(pos.size());
    double rank_sum = 0.0;
    for (std::size_t i = 0; i < pos.size(); ++i) rank_sum += ranks[i];
    const double u = rank_sum - np * (np + 1.0) / 2.0;
    return u / (np * static_cast<double>(neg.size()));
}

Metrics compute_metrics(std::span<const double> scores, std::span<const int> labels) {
    Metrics m;
    m.n = labels.size();
    if (m.n == 0) return m;
    std::size_t tp = 0, fp = 0, fn = 0, correct = 0;
    std::vector<double> pos, neg;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const bool predicted = scores[i] >= 0.5;
        const bool actual = labels[i] == 1;
        if (predicted == actual) ++correct;
        if (predicted && actual) ++tp;
        if (predicted && !actual) ++fp;
        if (!predicted && actual) ++fn;
        (actual ? pos : neg).push_back(scores[i]);
    }
    m.accuracy = static_cast<double>(correct) / static_cast<double>(m.n);
    const std::size_t denom = 2 * tp + fp + fn;
    m.f_measure = denom == 0 ? 0.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
    if (!pos.empty() && !neg.empty()) m.auc = feature_auc(pos, neg);
    return m;
}

// ---------------------------------------------------------------------------
// Logistic regression

namespace {

void require_two_classes(const Dataset& ds) {
    const std::size_t p = ds.positives();
    if (p < 2 || ds.size() - p < 2)
        throw Error(ErrorKind::DegenerateSample, "training needs at least 2 rows of each class");
}

double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }
double sigmoid(double z) {
    if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

}  // namespace

LogisticModel train_logistic(const Dataset& ds, std::span<const std::size_t> columns, const LogisticConfig& cfg,
                             IssueLog* warnings) {
    require_two_classes(ds);
    LogisticModel model;
    const std::size_t n = ds.size();
    for (std::size_t c : columns) {
        double mu = 0.0;
        for (const auto& row : ds.x) mu += row[c];
        mu /= static_cast<double>(n);
        double var = 0.0;
        for (const auto& row : ds.x) var += (row[c] - mu) * (row[c] - mu);
        const double sd = std::sqrt(var / static_cast<double>(n));
        if (!(sd > 1e-12 * std::max(1.0, std::abs(mu)))) {
            model.dropped_.push_back(c);
            if (warnings)
                warnings->push_back({ErrorKind::SingularFit, feature_columns().at(c).name, "constant column dropped"});
            continue;
        }
        model.columns_.push_back(c);
        model.mean_.push_back(mu);
        model.scale_.push_back(sd);
    }
    const auto p = static_cast<Eigen::Index>(model.columns_.size());
    Eigen::MatrixXd x(static_cast<Eigen::Index>(n), p + 1);
    Eigen::VectorXd y(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        for (Eigen::Index j = 0; j < p; ++j) {
            const auto ju = static_cast<std::size_t>(j);
            x(r, j) = (ds.x[i][model.columns_[ju]] - model.mean_[ju]) / model.scale_[ju];
        }
        x(r, p) = 1.0;
        y(r) = ds.y[i];
    }

    Eigen::VectorXd penalty = Eigen::VectorXd::Constant(p + 1, cfg.l2);
    penalty(p) = 0.0;
    const double inv_n = 1.0 / static_cast<double>(n);
    auto objective = [&](const Eigen::VectorXd& beta) {
        const Eigen::VectorXd eta = x * beta;
        double loss = 0.0;
        for (Eigen::Index i = 0; i < eta.size(); ++i) loss += softplus(eta(i)) - y(i) * eta(i);
        return loss * inv_n + 0.5 * beta.cwiseProduct(penalty).dot(beta);
    };

    Eigen::VectorXd beta = Eigen::VectorXd::Zero(p + 1);
    double current = objective(beta);
    for (int iter = 0; iter < cfg.max_iterations; ++iter) {
        const Eigen::VectorXd eta = x * beta;
        Eigen::VectorXd mu(eta.size());
        Eigen::VectorXd w(eta.size());
        for (Eigen::Index i = 0; i < eta.size(); ++i) {
            mu(i) = sigmoid(eta(i));
            w(i) = mu(i) * (1.0 - mu(i));
        }
        const Eigen::VectorXd grad = x.transpose() * (mu - y) * inv_n + penalty.cwiseProduct(beta);
        model.iterations_ = iter;
        if (grad.cwiseAbs().maxCoeff() < cfg.tolerance) {
            model.converged_ = true;
            break;
        }
        Eigen::MatrixXd hessian = x.transpose() * w.asDiagonal() * x * inv_n;
        hessian.diagonal() += penalty;
        hessian.diagonal().array() += 1e-12;
        const Eigen::VectorXd step = hessian.ldlt().solve(grad);
        double t = 1.0;
        const double slope = grad.dot(step);
        bool moved = false;
        for (int halving = 0; halving < 60; ++halving) {
            const Eigen::VectorXd trial = beta - t * step;
            const double value = objective(trial);
            if (std::isfinite(value) && value <= current - 1e-4 * t * slope) {
                beta = trial;
                current = value;
                moved = true;
                break;
            }
            t *= 0.5;
        }
        if (!moved) {
            // no further decrease representable in double precision
            model.converged_ = grad.cwiseAbs().maxCoeff() < std::sqrt(cfg.tolerance);
            break;
        }
        model.iterations_ = iter + 1;
    }
    model.weights_.assign(beta.data(), beta.data() + p);
    model.intercept_ = beta(p);
    return model;
}

double LogisticModel::predict_proba(std::span<const double> row) const {
    double eta = intercept_;
    for (std::size_t j = 0; j < columns_.size(); ++j) eta += weights_[j] * (row[columns_[j]] - mean_[j]) / scale_[j];
    return sigmoid(eta);
}

std::vector<double> LogisticModel::raw_coefficients() const {
    std::vector<double> out(weights_.size());
    for (std::size_t j = 0; j < weights_.size(); ++j) out[j] = weights_[j] / scale_[j];
    return out;
}

double LogisticModel::raw_intercept() const {
    double b = intercept_;
    for (std::size_t j = 0; j < weights_.size(); ++j) b -= weights_[j] * mean_[j] / scale_[j];
    return b;
}

// ---------------------------------------------------------------------------
// Random forest

namespace {

struct TreeBuilder {
    const Dataset& ds;
    std::span<const std::size_t> columns;
    std::size_t max_features;
    std::size_t min_leaf;
    Rng& rng;
    ForestModel::Tree nodes;

    struct Split {
        std::size_t column = 0;
        double threshold = 0.0;
        double score = 0.0;  // weighted child Gini, lower is better
        bool found = false;
    };

    static double gini_sum(double pos, double total) {
        if (total <= 0.0) return 0.0;
        const double q = pos / total;
        return total * 2.0 * q * (1.0 - q);
    }

    Split best_split(std::span<const std::size_t> rows) {
        Split best;
        std::vector<std::size_t> order(columns.begin(), columns.end());
        std::size_t informative = 0;
        std::vector<std::pair<double, int>> values(rows.size());
        double total_pos = 0.0;
        for (std::size_t r : rows) total_pos += ds.y[r];
        const auto n = static_cast<double>(rows.size());
        for (std::size_t k = 0; k < order.size() && informative < max_features; ++k) {
            std::swap(order[k], order[k + uniform_index(rng, order.size() - k)]);
            const std::size_t c = order[k];
            for (std::size_t i = 0; i < rows.size(); ++i) values[i] = {ds.x[rows[i]][c], ds.y[rows[i]]};
            std::sort(values.begin(), values.end());
            if (values.front().first == values.back().first) continue;
            ++informative;
            double left_pos = 0.0;
            for (std::size_t i = 0; i + 1 < values.size(); ++i) {
                left_pos += values[i].second;
                if (values[i].first == values[i + 1].first) continue;
                const auto left_n = static_cast<double>(i + 1);
                if (i + 1 < min_leaf || values.size() - (i + 1) < min_leaf) continue;
                const double score = gini_sum(left_pos, left_n) + gini_sum(total_pos - left_pos, n - left_n);
                if (!best.found || score < best.score) {
                    best = {c, 0.5 * (values[i].first + values[i + 1].first), score, true};
                    // midpoint can round onto the upper value for adjacent doubles
                    if (!(best.threshold < values[i + 1].first)) best.threshold = values[i].first;
                }
            }
        }
        return best;
    }

    int grow(std::vector<std::size_t> rows) {
        const int id = static_cast<int>(nodes.size());
        nodes.emplace_back();
        double pos = 0.0;
        for (std::size_t r : rows) pos += ds.y[r];
        nodes[static_cast<std::size_t>(id)].value = pos / static_cast<double>(rows.size());
        if (pos == 0.0 || pos == static_cast<double>(rows.size()) || rows.size() < 2 * min_leaf) return id;
        const Split split = best_split(rows);
        if (!split.found) return id;
        std::vector<std::size_t> left, right;
        for (std::size_t r : rows) (ds.x[r][split.column] <= split.threshold ? left : right).push_back(r);
        rows.clear();
        rows.shrink_to_fit();
        const int l = grow(std::move(left));
        const int r = grow(std::move(right));
        auto& node = nodes[static_cast<std::size_t>(id)];
        node.feature = static_cast<int>(split.column);
        node.threshold = split.threshold;
        node.left = l;
        node.right = r;
        return id;
    }
};

}  // namespace

ForestModel train_forest(const Dataset& ds, std::span<const std::size_t> columns, const ForestConfig& cfg,
                         IssueLog* warnings) {
    require_two_classes(ds);
    if (cfg.n_trees < 1) throw Error(ErrorKind::InvalidConfig, "forest needs at least one tree");
    ForestModel model;
    for (std::size_t c : columns) {
        const double first = ds.x.front()[c];
        const bool constant =
            std::all_of(ds.x.begin(), ds.x.end(), [&](const std::vector<double>& row) { return row[c] == first; });
        if (constant) {
            if (warnings)
                warnings->push_back({ErrorKind::SingularFit, feature_columns().at(c).name, "constant column dropped"});
            continue;
        }
        model.columns_.push_back(c);
    }
    const std::size_t p = model.columns_.size();
    const std::size_t mtry =
        cfg.max_features > 0 ? std::min(cfg.max_features, std::max<std::size_t>(p, 1))
                             : std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(p)))));
    const std::size_t n = ds.size();
    for (int t = 0; t < cfg.n_trees; ++t) {
        Rng rng = make_rng(cfg.seed, "tree", static_cast<std::uint64_t>(t));
        std::vector<std::size_t> rows(n);
        for (auto& r : rows) r = uniform_index(rng, n);
        TreeBuilder builder{ds, model.columns_, mtry, cfg.min_leaf, rng, {}};
        if (p == 0) {
            builder.nodes.emplace_back();
            double pos = 0.0;
            for (std::size_t r : rows) pos += ds.y[r];
            builder.nodes.back().value = pos / static_cast<double>(n);
        } else {
            builder.grow(std::move(rows));
        }
        model.trees_.push_back(std::move(builder.nodes));
    }
    return model;
}

double ForestModel::predict_proba(std::span<const double> row) const {
    double sum = 0.0;
    for (const auto& tree : trees_) {
        std::size_t i = 0;
        while (tree[i].feature >= 0) {
            i = static_cast<std::size_t>(row[static_cast<std::size_t>(tree[i].feature)] <= tree[i].threshold
                                             ? tree[i].left
                                             : tree[i].right);
        }
        sum += tree[i].value;
    }
    return sum / static_cast<double>(trees_.size());
}

// ---------------------------------------------------------------------------
// Model plumbing and evaluation

std::string_view to_string(ModelKind kind) noexcept {
    return kind == ModelKind::Logistic ? "logistic" : "forest";
}

std::optional<ModelKind> parse_model_kind(std::string_view text) noexcept {
    if (text == "logistic") return ModelKind::Logistic;
    if (text == "forest") return ModelKind::Forest;
    return std::nullopt;
}

Model train_model(const Dataset& ds, std::span<const std::size_t> columns, const ModelConfig& cfg,
                  IssueLog* warnings) {
    if (cfg.kind == ModelKind::Logistic) return train_logistic(ds, columns, cfg.logistic, warnings);
    return train_forest(ds, columns, cfg.forest, warnings);
}

double predict_proba(const Model& model, std::span<const double> row) {
    return std::visit([&](const auto& m) { return m.predict_proba(row); }, model);
}

std::vector<double> predict_all(const Model& model, const Dataset& ds) {
    std::vector<double> out(ds.size());
    for (std::size_t i = 0; i < ds.size(); ++i) out[i] = predict_proba(model, ds.x[i]);
    return out;
}

std::vector<std::vector<std::size_t>> stratified_folds(std::span<const int> labels, int k, std::uint64_t seed) {
    if (k < 2) throw Error(ErrorKind::InvalidConfig, "need at least 2 folds");
    std::vector<std::size_t> pos, neg;
    for (std::size_t i = 0; i < labels.size(); ++i) (labels[i] == 1 ? pos : neg).push_back(i);
    Rng rng = make_rng(seed, "folds");
    std::shuffle(pos.begin(), pos.end(), rng);
    std::shuffle(neg.begin(), neg.end(), rng);
    std::vector<std::vector<std::size_t>> folds(static_cast<std::size_t>(k));
    std::size_t next = 0;
    for (const auto* cls : {&pos, &neg}) {
        for (std::size_t i : *cls) {
            folds[next].push_back(i);
            next = (next + 1) % folds.size();
        }
    }
    for (auto& f : folds) std::sort(f.begin(), f.end());
    return folds;
}

CvResult cross_validate(const Dataset& ds, const ModelConfig& cfg, unsigned feature_sets, int k,
                        std::uint64_t seed) {
    if (k < 2) throw Error(ErrorKind::InvalidConfig, "need at least 2 folds");
    if (ds.size() < static_cast<std::size_t>(k))
        throw Error(ErrorKind::TooFewRows, std::to_string(ds.size()) + " rows for " + std::to_string(k) + " folds");
    const auto columns = columns_for(feature_sets);
    const auto folds = stratified_folds(ds.y, k, seed);
    CvResult result;
    result.scores.assign(ds.size(), 0.0);
    for (std::size_t f = 0; f < folds.size(); ++f) {
        Dataset train;
        std::vector<bool> held(ds.size(), false);
        for (std::size_t i : folds[f]) held[i] = true;
        for (std::size_t i = 0; i < ds.size(); ++i) {
            if (held[i]) continue;
            train.x.push_back(ds.x[i]);
            train.y.push_back(ds.y[i]);
        }
        ModelConfig fold_cfg = cfg;
        fold_cfg.forest.seed = derive_seed(seed, "fold", f);
        const Model model = train_model(train, columns, fold_cfg);
        for (std::size_t i : folds[f]) result.scores[i] = predict_proba(model, ds.x[i]);
    }
    result.metrics = compute_metrics(result.scores, ds.y);
    return result;
}

Metrics out_of_sample_eval(const Model& model, const Dataset& eval) {
    if (eval.size() == 0) throw Error(ErrorKind::EmptyEvalSet, "no inconclusive rows with a signed d");
    return compute_metrics(predict_all(model, eval), eval.y);
}

double rms_probability_gap(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || a.size() != b.size())
        throw Error(ErrorKind::EmptyEvalSet, "probability vectors empty or misaligned");
    double ss = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) ss += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(ss / static_cast<double>(a.size()));
}

double rms_probability_gap(const Model& a, const Model& b, const Dataset& rows) {
    if (rows.size() == 0) throw Error(ErrorKind::EmptyEvalSet, "no rows to compare");
    return rms_probability_gap(predict_all(a, rows), predict_all(b, rows));
}

}  // namespace campaignfx

#include "flowlens/model.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "flowlens/common.hpp"
#include "flowlens/rng.hpp"

namespace flowlens {

double sigmoid(double margin) { return 1.0 / (1.0 + std::exp(-margin)); }

double clamped_logit(double probability) {
    const double lo = sigmoid(-kLogitClamp);
    const double hi = sigmoid(kLogitClamp);
    if (probability <= lo) return -kLogitClamp;
    if (probability >= hi) return kLogitClamp;
    return std::log(probability / (1.0 - probability));
}

int Tree::leaf_index(std::span<const double> x) const {
    int node = 0;
    while (!nodes[static_cast<std::size_t>(node)].is_leaf()) {
        const TreeNode& n = nodes[static_cast<std::size_t>(node)];
        node = x[static_cast<std::size_t>(n.feature)] < n.threshold ? n.left : n.right;
    }
    return node;
}

const char* kind_name(EnsembleKind k) {
    switch (k) {
    case EnsembleKind::forest_average: return "forest-average";
    case EnsembleKind::boosted_sum: return "boosted-sum";
    case EnsembleKind::extra_average: return "extra-average";
    }
    return "?";
}

EnsembleKind kind_from_name(const std::string& name) {
    if (name == "forest-average") return EnsembleKind::forest_average;
    if (name == "boosted-sum") return EnsembleKind::boosted_sum;
    if (name == "extra-average") return EnsembleKind::extra_average;
    throw Error(Errc::bad_config, "unknown ensemble kind '" + name + "'");
}

HyperParams HyperParams::rf_defaults() {
    HyperParams p;
    p.n_estimators = 23;
    p.max_depth = 42;
    p.min_samples_split = 6;
    p.min_samples_leaf = 2;
    return p;
}

HyperParams HyperParams::xgb_defaults() {
    HyperParams p;
    p.n_estimators = 23;
    p.max_depth = 43;
    p.min_samples_split = 2;
    p.min_samples_leaf = 1;
    p.learning_rate = 0.47;
    p.min_child_weight = 0.4;
    p.gamma = 3.28;
    p.colsample = 1.0;
    p.subsample = 0.82;
    p.lambda_l2 = 1.0;
    return p;
}

HyperParams HyperParams::extra_defaults() {
    HyperParams p;
    p.n_estimators = 100;
    p.max_depth = 64; // effectively unbounded at desk scale
    p.min_samples_split = 2;
    p.min_samples_leaf = 1;
    return p;
}

void HyperParams::validate() const {
    if (n_estimators < 1 || max_depth < 1 || min_samples_split < 1 || min_samples_leaf < 1)
        throw Error(Errc::bad_config, "tree counts and depth limits must be >= 1");
    if (learning_rate <= 0 || learning_rate > 1)
        throw Error(Errc::bad_config, "learning_rate must lie in (0,1]");
    if (subsample <= 0 || subsample > 1 || colsample <= 0 || colsample > 1)
        throw Error(Errc::bad_config, "subsample and colsample must lie in (0,1]");
    if (gamma < 0 || min_child_weight < 0 || lambda_l2 < 0)
        throw Error(Errc::bad_config, "gamma, min_child_weight, lambda_l2 must be >= 0");
}

void HyperParams::set(const std::string& name, double value) {
    if (name == "n_estimators") n_estimators = static_cast<int>(std::llround(value));
    else if (name == "max_depth") max_depth = static_cast<int>(std::llround(value));
    else if (name == "min_samples_split") min_samples_split = static_cast<int>(std::llround(value));
    else if (name == "min_samples_leaf") min_samples_leaf = static_cast<int>(std::llround(value));
    else if (name == "learning_rate") learning_rate = value;
    else if (name == "min_child_weight") min_child_weight = value;
    else if (name == "gamma") gamma = value;
    else if (name == "colsample") colsample = value;
    else if (name == "subsample") subsample = value;
    else if (name == "lambda_l2") lambda_l2 = value;
    else throw Error(Errc::bad_config, "unknown hyperparameter '" + name + "'");
}

TrainData TrainData::from_dataset(const Dataset& ds) {
    if (!ds.fully_labeled())
        throw Error(Errc::bad_config, "training requires labels on every row");
    TrainData d;
    d.rows = ds.rows.size();
    d.cols = ds.dimension();
    d.x.reserve(d.rows * d.cols);
    d.y.reserve(d.rows);
    for (const FeatureVector& row : ds.rows) {
        if (row.values.size() != d.cols)
            throw Error(Errc::dimension_mismatch, "row width differs from header");
        d.x.insert(d.x.end(), row.values.begin(), row.values.end());
        d.y.push_back(*row.label);
    }
    return d;
}

TrainData TrainData::subset(std::span<const std::size_t> indices) const {
    TrainData d;
    d.rows = indices.size();
    d.cols = cols;
    d.x.reserve(d.rows * d.cols);
    d.y.reserve(d.rows);
    for (std::size_t i : indices) {
        auto r = row(i);
        d.x.insert(d.x.end(), r.begin(), r.end());
        d.y.push_back(y[i]);
    }
    return d;
}

// --- CART ---------------------------------------------------------------------

namespace {

constexpr double kMinGain = 1e-12;

struct SplitChoice {
    bool found = false;
    int feature = -1;
    double threshold = 0.0;
    double gain = 0.0;
};

double gini_impurity(double n, double n1) {
    if (n <= 0) return 0.0;
    const double p1 = n1 / n;
    const double p0 = 1.0 - p1;
    return 1.0 - p1 * p1 - p0 * p0;
}

struct CartBuilder {
    const TrainData& data;
    std::span<const double> grad, hess; // boosted only
    const CartConfig& cfg;
    Rng& rng;
    std::vector<TreeNode> nodes;

    // Draws cfg.features_per_split distinct features (or returns the whole
    // pool), ascending for deterministic scan order.
    std::vector<int> sample_features(std::span<const int> pool) {
        if (cfg.features_per_split <= 0 ||
            static_cast<std::size_t>(cfg.features_per_split) >= pool.size())
            return {pool.begin(), pool.end()};
        std::vector<int> bag(pool.begin(), pool.end());
        for (int i = 0; i < cfg.features_per_split; ++i) {
            const std::size_t j = i + rng.uniform_index(bag.size() - static_cast<std::size_t>(i));
            std::swap(bag[static_cast<std::size_t>(i)], bag[j]);
        }
        bag.resize(static_cast<std::size_t>(cfg.features_per_split));
        std::sort(bag.begin(), bag.end());
        return bag;
    }

    SplitChoice best_gini_split(std::span<const std::size_t> rows,
                                std::span<const int> features) {
        const auto n = static_cast<double>(rows.size());
        double n1 = 0;
        for (std::size_t r : rows) n1 += data.y[r];
        const double parent = gini_impurity(n, n1);
        SplitChoice best;
        if (parent <= 0.0) return best;

        std::vector<std::pair<double, int>> vals(rows.size());
        for (int f : features) {
            for (std::size_t i = 0; i < rows.size(); ++i)
                vals[i] = {data.at(rows[i], static_cast<std::size_t>(f)), data.y[rows[i]]};
            std::sort(vals.begin(), vals.end());

            if (cfg.random_thresholds) {
                // extra-trees: one uniform cut inside the observed range
                const double lo = vals.front().first, hi = vals.back().first;
                if (!(lo < hi)) continue;
                const double t = rng.uniform(lo, hi);
                if (!(t > lo) || !(t < hi)) continue;
                double nl = 0, nl1 = 0;
                for (const auto& [v, label] : vals) {
                    if (v < t) {
                        nl += 1;
                        nl1 += label;
                    }
                }
                const double nr = n - nl;
                if (nl < cfg.min_samples_leaf || nr < cfg.min_samples_leaf) continue;
                if (nl == 0 || nr == 0) continue;
                const double gain = parent - (nl / n) * gini_impurity(nl, nl1) -
                                    (nr / n) * gini_impurity(nr, n1 - nl1);
                if (!best.found || gain > best.gain) {
                    best = {true, f, t, gain};
                }
                continue;
            }

            double nl = 0, nl1 = 0;
            for (std::size_t i = 0; i + 1 < vals.size(); ++i) {
                nl += 1;
                nl1 += vals[i].second;
                if (!(vals[i].first < vals[i + 1].first)) continue;
                const double nr = n - nl;
                if (nl < cfg.min_samples_leaf || nr < cfg.min_samples_leaf) continue;
                const double gain = parent - (nl / n) * gini_impurity(nl, nl1) -
                                    (nr / n) * gini_impurity(nr, n1 - nl1);
                if (gain > best.gain + kMinGain) {
                    best = {true, f, vals[i].first + (vals[i + 1].first - vals[i].first) / 2,
                            gain};
                }
            }
        }
        return best;
    }

    SplitChoice best_boosted_split(std::span<const std::size_t> rows,
                                   std::span<const int> features) {
        double g_total = 0, h_total = 0;
        for (std::size_t r : rows) {
            g_total += grad[r];
            h_total += hess[r];
        }
        const double parent_score = g_total * g_total / (h_total + cfg.lambda_l2);

        SplitChoice best;
        std::vector<std::pair<double, std::size_t>> vals(rows.size());
        for (int f : features) {
            for (std::size_t i = 0; i < rows.size(); ++i)
                vals[i] = {data.at(rows[i], static_cast<std::size_t>(f)), rows[i]};
            std::sort(vals.begin(), vals.end());

            double gl = 0, hl = 0;
            for (std::size_t i = 0; i + 1 < vals.size(); ++i) {
                gl += grad[vals[i].second];
                hl += hess[vals[i].second];
                if (!(vals[i].first < vals[i + 1].first)) continue;
                const double gr = g_total - gl, hr = h_total - hl;
                if (hl < cfg.min_child_weight || hr < cfg.min_child_weight) continue;
                const double gain = 0.5 * (gl * gl / (hl + cfg.lambda_l2) +
                                           gr * gr / (hr + cfg.lambda_l2) - parent_score) -
                                    cfg.gamma;
                if (gain > best.gain + kMinGain) {
                    best = {true, f, vals[i].first + (vals[i + 1].first - vals[i].first) / 2,
                            gain};
                }
            }
        }
        return best;
    }

    int build(std::vector<std::size_t>& rows, int depth, std::span<const int> feature_pool) {
        const auto node_index = static_cast<int>(nodes.size());
        nodes.emplace_back();

        double cover, leaf_value;
        if (cfg.rule == SplitRule::gini) {
            double n1 = 0;
            for (std::size_t r : rows) n1 += data.y[r];
            cover = static_cast<double>(rows.size());
            leaf_value = n1 / cover; // class-1 probability
        } else {
            double g = 0, h = 0;
            for (std::size_t r : rows) {
                g += grad[r];
                h += hess[r];
            }
            cover = h;
            leaf_value = -g / (h + cfg.lambda_l2) * cfg.learning_rate;
        }
        nodes[static_cast<std::size_t>(node_index)].cover = cover;
        nodes[static_cast<std::size_t>(node_index)].value = leaf_value;

        const bool can_split = depth < cfg.max_depth &&
                               rows.size() >= static_cast<std::size_t>(cfg.min_samples_split);
        if (can_split) {
            const std::vector<int> features = sample_features(feature_pool);
            const SplitChoice split = cfg.rule == SplitRule::gini
                                          ? best_gini_split(rows, features)
                                          : best_boosted_split(rows, features);
            if (split.found) {
                std::vector<std::size_t> left_rows, right_rows;
                left_rows.reserve(rows.size());
                right_rows.reserve(rows.size());
                for (std::size_t r : rows)
                    (data.at(r, static_cast<std::size_t>(split.feature)) < split.threshold
                         ? left_rows
                         : right_rows)
                        .push_back(r);
                rows.clear();
                rows.shrink_to_fit();

                const int left = build(left_rows, depth + 1, feature_pool);
                const int right = build(right_rows, depth + 1, feature_pool);
                TreeNode& node = nodes[static_cast<std::size_t>(node_index)];
                node.feature = split.feature;
                node.threshold = split.threshold;
                node.left = left;
                node.right = right;
                node.value = 0.0;
            }
        }
        return node_index;
    }
};

} // namespace

Tree train_cart(const TrainData& data, std::span<const std::size_t> rows,
                std::span<const double> grad, std::span<const double> hess,
                std::span<const int> feature_pool, const CartConfig& cfg, Rng& rng) {
    if (rows.empty()) throw Error(Errc::empty_data, "cannot grow a tree on zero rows");
    CartBuilder builder{data, grad, hess, cfg, rng, {}};
    std::vector<std::size_t> root_rows(rows.begin(), rows.end());
    builder.build(root_rows, 0, feature_pool);
    return Tree{std::move(builder.nodes)};
}

// --- ensembles ----------------------------------------------------------------

namespace {

std::vector<int> all_features(std::size_t cols) {
    std::vector<int> out(cols);
    for (std::size_t i = 0; i < cols; ++i) out[i] = static_cast<int>(i);
    return out;
}

int sqrt_features(std::size_t cols) {
    return std::max(1, static_cast<int>(std::floor(std::sqrt(static_cast<double>(cols)))));
}

} // namespace

TreeEnsemble train_random_forest(const TrainData& data, const HyperParams& params,
                                 ForestDiagnostics* diag) {
    params.validate();
    if (data.rows == 0) throw Error(Errc::empty_data, "empty training data");

    TreeEnsemble ens;
    ens.kind = EnsembleKind::forest_average;
    ens.feature_count = static_cast<int>(data.cols);

    CartConfig cfg;
    cfg.rule = SplitRule::gini;
    cfg.max_depth = params.max_depth;
    cfg.min_samples_split = params.min_samples_split;
    cfg.min_samples_leaf = params.min_samples_leaf;
    cfg.features_per_split = sqrt_features(data.cols);

    const std::vector<int> pool = all_features(data.cols);
    for (int t = 0; t < params.n_estimators; ++t) {
        Rng rng(params.seed ^ static_cast<std::uint64_t>(t));
        std::vector<std::size_t> rows(data.rows);
        for (std::size_t i = 0; i < data.rows; ++i) rows[i] = rng.uniform_index(data.rows);
        if (diag) diag->bootstrap_rows.push_back(rows);
        ens.trees.push_back(train_cart(data, rows, {}, {}, pool, cfg, rng));
    }
    return ens;
}

TreeEnsemble train_extra_trees(const TrainData& data, const HyperParams& params) {
    params.validate();
    if (data.rows == 0) throw Error(Errc::empty_data, "empty training data");

    TreeEnsemble ens;
    ens.kind = EnsembleKind::extra_average;
    ens.feature_count = static_cast<int>(data.cols);

    CartConfig cfg;
    cfg.rule = SplitRule::gini;
    cfg.max_depth = params.max_depth;
    cfg.min_samples_split = params.min_samples_split;
    cfg.min_samples_leaf = params.min_samples_leaf;
    cfg.features_per_split = sqrt_features(data.cols);
    cfg.random_thresholds = true;

    std::vector<std::size_t> rows(data.rows); // no bootstrap: full data per tree
    for (std::size_t i = 0; i < data.rows; ++i) rows[i] = i;
    const std::vector<int> pool = all_features(data.cols);
    for (int t = 0; t < params.n_estimators; ++t) {
        Rng rng(params.seed ^ static_cast<std::uint64_t>(t));
        ens.trees.push_back(train_cart(data, rows, {}, {}, pool, cfg, rng));
    }
    return ens;
}

TreeEnsemble train_boosted(const TrainData& data, const HyperParams& params,
                           std::vector<double>* round_train_loss,
                           std::vector<std::string>* warnings) {
    params.validate();
    if (data.rows == 0) throw Error(Errc::empty_data, "empty training data");

    TreeEnsemble ens;
    ens.kind = EnsembleKind::boosted_sum;
    ens.feature_count = static_cast<int>(data.cols);
    ens.learning_rate = params.learning_rate;

    double positives = 0;
    for (int label : data.y) positives += label;
    const double base_rate = positives / static_cast<double>(data.rows);
    ens.base_score = clamped_logit(base_rate);

    if (positives == 0 || positives == static_cast<double>(data.rows)) {
        if (warnings)
            warnings->push_back("single-class training data: boosted model is the constant "
                                "base score with no trees");
        return ens;
    }

    std::vector<double> margin(data.rows, ens.base_score);
    std::vector<double> grad(data.rows), hess(data.rows);

    CartConfig cfg;
    cfg.rule = SplitRule::boosted_gain;
    cfg.max_depth = params.max_depth;
    cfg.min_samples_split = params.min_samples_split;
    cfg.min_samples_leaf = params.min_samples_leaf;
    cfg.min_child_weight = params.min_child_weight;
    cfg.gamma = params.gamma;
    cfg.lambda_l2 = params.lambda_l2;
    cfg.learning_rate = params.learning_rate;

    Rng rng(params.seed);
    const std::vector<int> pool = all_features(data.cols);

    auto mean_log_loss = [&]() {
        double total = 0;
        for (std::size_t i = 0; i < data.rows; ++i) {
            const double p = std::clamp(sigmoid(margin[i]), 1e-15, 1.0 - 1e-15);
            total += data.y[i] ? -std::log(p) : -std::log(1.0 - p);
        }
        return total / static_cast<double>(data.rows);
    };

    for (int round = 0; round < params.n_estimators; ++round) {
        for (std::size_t i = 0; i < data.rows; ++i) {
            const double p = sigmoid(margin[i]);
            grad[i] = p - data.y[i];
            hess[i] = p * (1.0 - p);
        }

        // without-replacement row subsample
        std::vector<std::size_t> rows(data.rows);
        for (std::size_t i = 0; i < data.rows; ++i) rows[i] = i;
        const auto n_rows = static_cast<std::size_t>(std::max<double>(
            1.0, std::floor(params.subsample * static_cast<double>(data.rows))));
        if (n_rows < data.rows) {
            for (std::size_t i = 0; i < n_rows; ++i) {
                const std::size_t j = i + rng.uniform_index(data.rows - i);
                std::swap(rows[i], rows[j]);
            }
            rows.resize(n_rows);
            std::sort(rows.begin(), rows.end());
        }

        // column subsample per tree
        std::vector<int> features = pool;
        const auto n_cols = static_cast<std::size_t>(std::max<double>(
            1.0, std::floor(params.colsample * static_cast<double>(data.cols))));
        if (n_cols < data.cols) {
            for (std::size_t i = 0; i < n_cols; ++i) {
                const std::size_t j = i + rng.uniform_index(data.cols - i);
                std::swap(features[i], features[j]);
            }
            features.resize(n_cols);
            std::sort(features.begin(), features.end());
        }

        Tree tree = train_cart(data, rows, grad, hess, features, cfg, rng);
        for (std::size_t i = 0; i < data.rows; ++i) margin[i] += tree.leaf_output(data.row(i));
        ens.trees.push_back(std::move(tree));
        if (round_train_loss) round_train_loss->push_back(mean_log_loss());
    }
    return ens;
}

ModelKind model_kind_from_name(const std::string& name) {
    if (name == "rf") return ModelKind::rf;
    if (name == "xgb") return ModelKind::xgb;
    if (name == "extra") return ModelKind::extra;
    throw Error(Errc::bad_config, "unknown model kind '" + name + "' (rf|xgb|extra)");
}

const char* model_kind_name(ModelKind k) {
    switch (k) {
    case ModelKind::rf: return "rf";
    case ModelKind::xgb: return "xgb";
    case ModelKind::extra: return "extra";
    }
    return "?";
}

HyperParams default_params(ModelKind kind) {
    switch (kind) {
    case ModelKind::rf: return HyperParams::rf_defaults();
    case ModelKind::xgb: return HyperParams::xgb_defaults();
    case ModelKind::extra: return HyperParams::extra_defaults();
    }
    return {};
}

TreeEnsemble train_model(ModelKind kind, const TrainData& data, const HyperParams& params) {
    switch (kind) {
    case ModelKind::rf: return train_random_forest(data, params);
    case ModelKind::xgb: return train_boosted(data, params);
    case ModelKind::extra: return train_extra_trees(data, params);
    }
    throw Error(Errc::bad_config, "unreachable model kind");
}

// --- prediction ----------------------------------------------------------------

Prediction predict(const TreeEnsemble& ensemble, std::span<const double> x) {
    if (x.size() != static_cast<std::size_t>(ensemble.feature_count))
        throw Error(Errc::dimension_mismatch,
                    "sample has " + std::to_string(x.size()) + " features, model expects " +
                        std::to_string(ensemble.feature_count));
    Prediction out;
    if (ensemble.kind == EnsembleKind::boosted_sum) {
        double margin = ensemble.base_score;
        for (const Tree& t : ensemble.trees) margin += t.leaf_output(x);
        out.margin = margin;
        out.probability = sigmoid(margin);
    } else {
        double total = 0;
        for (const Tree& t : ensemble.trees) total += t.leaf_output(x);
        out.probability = ensemble.trees.empty()
                              ? 0.5
                              : total / static_cast<double>(ensemble.trees.size());
        out.margin = clamped_logit(out.probability);
    }
    out.label = out.probability >= 0.5 ? 1 : 0;
    return out;
}

std::vector<int> predict_labels(const TreeEnsemble& ensemble, const TrainData& data) {
    std::vector<int> out;
    out.reserve(data.rows);
    for (std::size_t i = 0; i < data.rows; ++i) out.push_back(predict(ensemble, data.row(i)).label);
    return out;
}

double log_loss(const TreeEnsemble& ensemble, const TrainData& data) {
    double total = 0;
    for (std::size_t i = 0; i < data.rows; ++i) {
        const double p = std::clamp(predict(ensemble, data.row(i)).probability, 1e-15, 1.0 - 1e-15);
        total += data.y[i] ? -std::log(p) : -std::log(1.0 - p);
    }
    return total / static_cast<double>(data.rows);
}

// --- metrics --------------------------------------------------------------------

MetricsReport compute_metrics(std::span<const int> y_true, std::span<const int> y_pred) {
    if (y_true.size() != y_pred.size())
        throw Error(Errc::length_mismatch, "y_true and y_pred lengths differ");
    MetricsReport m;
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        if ((y_true[i] != 0 && y_true[i] != 1) || (y_pred[i] != 0 && y_pred[i] != 1))
            throw Error(Errc::non_binary_label, "labels must be 0 or 1");
        if (y_true[i] == 1)
            ++(y_pred[i] == 1 ? m.tp : m.fn);
        else
            ++(y_pred[i] == 1 ? m.fp : m.tn);
    }
    const auto n = static_cast<double>(y_true.size());
    m.accuracy = n > 0 ? static_cast<double>(m.tp + m.tn) / n : 0.0;
    m.precision = (m.tp + m.fp) > 0 ? static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fp)
                                    : 0.0;
    m.recall =
        (m.tp + m.fn) > 0 ? static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fn) : 0.0;
    m.f1 = (m.precision + m.recall) > 0
               ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
               : 0.0;
    const double d1 = static_cast<double>(m.tp + m.fp);
    const double d2 = static_cast<double>(m.tp + m.fn);
    const double d3 = static_cast<double>(m.tn + m.fp);
    const double d4 = static_cast<double>(m.tn + m.fn);
    if (d1 > 0 && d2 > 0 && d3 > 0 && d4 > 0) {
        m.mcc = (static_cast<double>(m.tp) * static_cast<double>(m.tn) -
                 static_cast<double>(m.fp) * static_cast<double>(m.fn)) /
                std::sqrt(d1 * d2 * d3 * d4);
    }
    return m;
}

std::string metrics_to_json(const MetricsReport& m) {
    nlohmann::ordered_json j;
    j["tp"] = m.tp;
    j["tn"] = m.tn;
    j["fp"] = m.fp;
    j["fn"] = m.fn;
    j["accuracy"] = m.accuracy;
    j["precision"] = m.precision;
    j["recall"] = m.recall;
    j["f1"] = m.f1;
    j["mcc"] = m.mcc;
    return j.dump(2);
}

// --- validation curves -----------------------------------------------------------

CurveReport validation_curve(const TrainData& data, ModelKind kind, const HyperParams& base,
                             const std::string& param_name, std::span<const double> values,
                             int k_folds, std::uint64_t seed) {
    if (values.empty()) throw Error(Errc::bad_config, "validation curve needs candidate values");
    const auto folds = kfold_split(data.rows, k_folds, seed, data.y);

    CurveReport report;
    report.param = param_name;

    for (double value : values) {
        HyperParams params = base;
        params.set(param_name, value);
        params.validate();

        std::vector<double> train_scores, val_scores;
        for (std::size_t f = 0; f < folds.size(); ++f) {
            std::vector<std::size_t> train_idx;
            for (std::size_t g = 0; g < folds.size(); ++g)
                if (g != f) train_idx.insert(train_idx.end(), folds[g].begin(), folds[g].end());
            std::sort(train_idx.begin(), train_idx.end());

            const TrainData train = data.subset(train_idx);
            const TrainData val = data.subset(folds[f]);
            const TreeEnsemble model = train_model(kind, train, params);
            train_scores.push_back(
                compute_metrics(train.y, predict_labels(model, train)).accuracy);
            val_scores.push_back(compute_metrics(val.y, predict_labels(model, val)).accuracy);
        }

        auto mean_std = [](const std::vector<double>& v) {
            double mean = 0;
            for (double x : v) mean += x;
            mean /= static_cast<double>(v.size());
            double ss = 0;
            for (double x : v) ss += (x - mean) * (x - mean);
            return std::pair<double, double>{mean,
                                             std::sqrt(ss / static_cast<double>(v.size()))};
        };
        CurvePoint point;
        point.value = value;
        std::tie(point.train_mean, point.train_std) = mean_std(train_scores);
        std::tie(point.val_mean, point.val_std) = mean_std(val_scores);
        report.points.push_back(point);
    }

    const CurvePoint* best = &report.points.front();
    for (const CurvePoint& p : report.points) {
        if (p.val_mean > best->val_mean ||
            (p.val_mean == best->val_mean && p.value < best->value))
            best = &p;
    }
    report.best_value = best->value;
    return report;
}

// --- serialization ------------------------------------------------------------------

std::string model_to_json(const TreeEnsemble& ensemble) {
    nlohmann::ordered_json j;
    j["kind"] = kind_name(ensemble.kind);
    j["base_score"] = ensemble.base_score;
    j["learning_rate"] = ensemble.learning_rate;
    j["feature_count"] = ensemble.feature_count;
    j["schema_version"] = ensemble.schema_version;
    j["trees"] = nlohmann::ordered_json::array();
    for (const Tree& tree : ensemble.trees) {
        nlohmann::ordered_json jt;
        jt["nodes"] = nlohmann::ordered_json::array();
        for (const TreeNode& n : tree.nodes) {
            jt["nodes"].push_back(nlohmann::ordered_json{{"feature", n.feature},
                                                         {"threshold", n.threshold},
                                                         {"left", n.left},
                                                         {"right", n.right},
                                                         {"value", n.value},
                                                         {"cover", n.cover}});
        }
        j["trees"].push_back(std::move(jt));
    }
    return j.dump(2);
}

TreeEnsemble model_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::io_error, std::string("model file is not valid JSON: ") + e.what());
    }
    TreeEnsemble ens;
    ens.kind = kind_from_name(j.at("kind").get<std::string>());
    ens.base_score = j.at("base_score").get<double>();
    ens.learning_rate = j.at("learning_rate").get<double>();
    ens.feature_count = j.at("feature_count").get<int>();
    ens.schema_version = j.at("schema_version").get<std::string>();
    for (const auto& jt : j.at("trees")) {
        Tree tree;
        for (const auto& jn : jt.at("nodes")) {
            TreeNode n;
            n.feature = jn.at("feature").get<int>();
            n.threshold = jn.at("threshold").get<double>();
            n.left = jn.at("left").get<int>();
            n.right = jn.at("right").get<int>();
            n.value = jn.at("value").get<double>();
            n.cover = jn.at("cover").get<double>();
            if (n.feature >= ens.feature_count)
                throw Error(Errc::dimension_mismatch, "node feature index out of range");
            tree.nodes.push_back(n);
        }
        if (tree.nodes.empty()) throw Error(Errc::io_error, "tree with no nodes");
        ens.trees.push_back(std::move(tree));
    }
    return ens;
}

void check_cover_consistency(const TreeEnsemble& ensemble, double tol) {
    for (const Tree& tree : ensemble.trees) {
        if (tree.nodes.empty()) throw Error(Errc::missing_cover, "tree has no nodes");
        if (!(tree.nodes[0].cover > 0))
            throw Error(Errc::missing_cover, "root cover must be positive");
        for (const TreeNode& n : tree.nodes) {
            if (n.is_leaf()) continue;
            const double child_sum = tree.nodes[static_cast<std::size_t>(n.left)].cover +
                                     tree.nodes[static_cast<std::size_t>(n.right)].cover;
            if (std::abs(n.cover - child_sum) > tol * std::max(1.0, std::abs(n.cover)))
                throw Error(Errc::missing_cover, "internal cover != sum of child covers");
        }
    }
}

} // namespace flowlens

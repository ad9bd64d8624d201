#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "flowlens/dataset.hpp"

namespace flowlens {

// Pre-sigmoid outputs are clamped to this margin; pure leaves otherwise
// map to infinite log-odds.
inline constexpr double kLogitClamp = 15.0;

double sigmoid(double margin);
double clamped_logit(double probability);

struct TreeNode {
    int feature = -1; // -1: leaf
    double threshold = 0.0;
    int left = -1, right = -1;
    double value = 0.0; // leaf only: probability (gini trees) or margin step (boosted)
    double cover = 0.0; // training weight reaching the node
    bool is_leaf() const { return feature < 0; }
};

struct Tree {
    std::vector<TreeNode> nodes; // index 0 is the root

    // Routing rule everywhere: x[feature] < threshold goes left.
    int leaf_index(std::span<const double> x) const;
    double leaf_output(std::span<const double> x) const {
        return nodes[static_cast<std::size_t>(leaf_index(x))].value;
    }
};

enum class EnsembleKind { forest_average, boosted_sum, extra_average };

const char* kind_name(EnsembleKind k);
EnsembleKind kind_from_name(const std::string& name);

struct TreeEnsemble {
    EnsembleKind kind = EnsembleKind::forest_average;
    double base_score = 0.0;     // boosted only
    double learning_rate = 0.0;  // boosted only
    int feature_count = 0;
    std::string schema_version;
    std::vector<Tree> trees;
};

struct HyperParams {
    int n_estimators = 23;
    int max_depth = 42;
    int min_samples_split = 6;
    int min_samples_leaf = 2;
    double learning_rate = 0.47;
    double min_child_weight = 0.4;
    double gamma = 3.28;
    double colsample = 1.0;
    double subsample = 0.82;
    double lambda_l2 = 1.0;
    std::uint64_t seed = 0;

    static HyperParams rf_defaults();
    static HyperParams xgb_defaults();
    static HyperParams extra_defaults();
    void validate() const;
    void set(const std::string& name, double value); // for validation curves / CLI grids
};

// Row-major training matrix with binary labels.
struct TrainData {
    std::vector<double> x;
    std::size_t rows = 0, cols = 0;
    std::vector<int> y;

    double at(std::size_t r, std::size_t c) const { return x[r * cols + c]; }
    std::span<const double> row(std::size_t r) const { return {x.data() + r * cols, cols}; }
    static TrainData from_dataset(const Dataset& ds);
    TrainData subset(std::span<const std::size_t> indices) const;
};

enum class SplitRule { gini, boosted_gain };

// Greedy CART. Gini trees store leaf class-1 probabilities; boosted trees
// store learning-rate-scaled Newton steps -G/(H+lambda)*lr and use hessian
// sums as cover. rows may carry multiplicity (bootstrap).
struct CartConfig {
    SplitRule rule = SplitRule::gini;
    int max_depth = 42;
    int min_samples_split = 2;
    int min_samples_leaf = 1;
    double min_child_weight = 0.0;
    double gamma = 0.0;
    double lambda_l2 = 1.0;
    double learning_rate = 1.0;
    int features_per_split = 0; // 0: all features at every split
    bool random_thresholds = false; // extra-trees style single random cut
};

class Rng;
Tree train_cart(const TrainData& data, std::span<const std::size_t> rows,
                std::span<const double> grad, std::span<const double> hess,
                std::span<const int> feature_pool, const CartConfig& cfg, Rng& rng);

struct ForestDiagnostics {
    std::vector<std::vector<std::size_t>> bootstrap_rows; // per tree, with multiplicity
};

TreeEnsemble train_random_forest(const TrainData& data, const HyperParams& params,
                                 ForestDiagnostics* diag = nullptr);
TreeEnsemble train_boosted(const TrainData& data, const HyperParams& params,
                           std::vector<double>* round_train_loss = nullptr,
                           std::vector<std::string>* warnings = nullptr);
TreeEnsemble train_extra_trees(const TrainData& data, const HyperParams& params);

enum class ModelKind { rf, xgb, extra };
ModelKind model_kind_from_name(const std::string& name);
const char* model_kind_name(ModelKind k);
HyperParams default_params(ModelKind kind);
TreeEnsemble train_model(ModelKind kind, const TrainData& data, const HyperParams& params);

struct Prediction {
    double margin = 0.0;
    double probability = 0.0;
    int label = 0;
};

Prediction predict(const TreeEnsemble& ensemble, std::span<const double> x);
std::vector<int> predict_labels(const TreeEnsemble& ensemble, const TrainData& data);

double log_loss(const TreeEnsemble& ensemble, const TrainData& data);

struct MetricsReport {
    long long tp = 0, tn = 0, fp = 0, fn = 0;
    double accuracy = 0, precision = 0, recall = 0, f1 = 0, mcc = 0;
};

// Binary metrics with the zero-denominator convention: any undefined rate
// (including a zero factor under the MCC square root) reports as 0.
MetricsReport compute_metrics(std::span<const int> y_true, std::span<const int> y_pred);

std::string metrics_to_json(const MetricsReport& m);

// --- validation curves -------------------------------------------------------

struct CurvePoint {
    double value = 0;
    double train_mean = 0, train_std = 0;
    double val_mean = 0, val_std = 0;
};

struct CurveReport {
    std::string param;
    std::vector<CurvePoint> points;
    double best_value = 0; // argmax mean val accuracy, ties -> smallest value
};

CurveReport validation_curve(const TrainData& data, ModelKind kind, const HyperParams& base,
                             const std::string& param_name, std::span<const double> values,
                             int k_folds, std::uint64_t seed);

// --- serialization -----------------------------------------------------------

std::string model_to_json(const TreeEnsemble& ensemble);
TreeEnsemble model_from_json(const std::string& text);

// Internal cover == sum of child covers, root cover > 0, for every tree.
void check_cover_consistency(const TreeEnsemble& ensemble, double tol = 1e-9);

} // namespace flowlens

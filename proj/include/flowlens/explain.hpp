#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "flowlens/model.hpp"
#include "flowlens/schema.hpp"

namespace flowlens {

// Per-sample attribution in the ensemble's additive output space: margin
// (log-odds) for boosted models, averaged leaf probability for forest and
// extra-trees models. In either space base_value + sum(phi) == fx exactly
// up to floating error.
struct ShapExplanation {
    double base_value = 0.0;
    std::vector<double> phi;
    double fx = 0.0;
    std::string flow_id;
};

inline constexpr double kEfficiencyTol = 1e-6;

// Path-dependent TreeSHAP (cover-weighted conditioning) summed across
// trees; forest-kind attributions are divided by the tree count. Requires
// positive covers recorded at training (Error{missing_cover} otherwise).
ShapExplanation tree_shap(const TreeEnsemble& ensemble, std::span<const double> x);

// Cover-weighted expectation of the ensemble output; equals the
// explanation's base_value.
double expected_value(const TreeEnsemble& ensemble);

// Exhaustive-subset Shapley oracle with the same path-dependent conditional
// expectation v(S). Only viable for feature_count <= 14
// (Error{too_many_features}).
ShapExplanation brute_force_shap(const TreeEnsemble& ensemble, std::span<const double> x);

// |base + sum(phi) - fx| <= tol * max(1, |fx|)
bool efficiency_holds(const ShapExplanation& e, double tol = kEfficiencyTol);

struct FeatureImportance {
    std::size_t feature = 0;
    double mean_abs_phi = 0.0;
    // signed phi distribution quantiles across samples
    double phi_min = 0.0, phi_q25 = 0.0, phi_median = 0.0, phi_q75 = 0.0, phi_max = 0.0;
    std::size_t rank = 0; // 1 = most influential
};

struct GlobalSummary {
    std::vector<FeatureImportance> per_feature; // in feature order
    std::vector<std::size_t> top;               // feature indices, best first
};

// Mean |phi| ranking across samples; ties keep feature order. k is
// truncated to the dimension.
GlobalSummary global_summary(const std::vector<ShapExplanation>& explanations, std::size_t k);

struct LocalEntry {
    std::string feature;
    double value = 0.0;
    double phi = 0.0;
    std::string direction; // pushes-malware | pushes-normal | neutral
};

struct LocalReport {
    std::string flow_id;
    double base_value = 0.0;
    double fx = 0.0;
    double probability = 0.0;
    double margin = 0.0;
    std::vector<LocalEntry> entries; // |phi| descending, top_k of them
    double others_phi = 0.0;         // remainder so the shown sum still closes
    bool has_others = false;
};

// Force-plot data: top_k contributions by |phi| plus an "others" aggregate;
// base + listed phis + others == fx.
LocalReport local_report(const ShapExplanation& explanation, std::span<const double> x,
                         const std::vector<std::string>& feature_names, EnsembleKind kind,
                         std::size_t top_k);

std::string local_report_to_json(const LocalReport& report);
std::string global_summary_to_json(const GlobalSummary& summary,
                                   const std::vector<std::string>& feature_names);
std::string global_summary_to_csv(const GlobalSummary& summary,
                                  const std::vector<std::string>& feature_names);

} // namespace flowlens

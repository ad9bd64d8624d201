#include "flowlens/explain.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include <json.hpp>

#include "flowlens/common.hpp"

namespace flowlens {

namespace {

// One step of the decision path kept by the TreeSHAP recursion. pweight of
// element i is the permutation weight of paths with i-1 "one" features.
struct PathElement {
    int feature = -1;
    double zero_fraction = 0.0;
    double one_fraction = 0.0;
    double pweight = 0.0;
};

void extend_path(PathElement* path, int depth, double zero_fraction, double one_fraction,
                 int feature) {
    path[depth] = {feature, zero_fraction, one_fraction, depth == 0 ? 1.0 : 0.0};
    for (int i = depth - 1; i >= 0; --i) {
        path[i + 1].pweight += one_fraction * path[i].pweight * (i + 1) /
                               static_cast<double>(depth + 1);
        path[i].pweight = zero_fraction * path[i].pweight * (depth - i) /
                          static_cast<double>(depth + 1);
    }
}

void unwind_path(PathElement* path, int depth, int index) {
    const double one_fraction = path[index].one_fraction;
    const double zero_fraction = path[index].zero_fraction;
    double next_one_portion = path[depth].pweight;

    for (int i = depth - 1; i >= 0; --i) {
        if (one_fraction != 0.0) {
            const double tmp = path[i].pweight;
            path[i].pweight = next_one_portion * (depth + 1) /
                              static_cast<double>((i + 1) * one_fraction);
            next_one_portion = tmp - path[i].pweight * zero_fraction * (depth - i) /
                                         static_cast<double>(depth + 1);
        } else {
            path[i].pweight =
                path[i].pweight * (depth + 1) / (zero_fraction * (depth - i));
        }
    }
    for (int i = index; i < depth; ++i) {
        path[i].feature = path[i + 1].feature;
        path[i].zero_fraction = path[i + 1].zero_fraction;
        path[i].one_fraction = path[i + 1].one_fraction;
    }
}

double unwound_path_sum(const PathElement* path, int depth, int index) {
    const double one_fraction = path[index].one_fraction;
    const double zero_fraction = path[index].zero_fraction;
    double next_one_portion = path[depth].pweight;
    double total = 0.0;
    for (int i = depth - 1; i >= 0; --i) {
        if (one_fraction != 0.0) {
            const double tmp = next_one_portion * (depth + 1) /
                               static_cast<double>((i + 1) * one_fraction);
            total += tmp;
            next_one_portion = path[i].pweight -
                               tmp * zero_fraction * (depth - i) / static_cast<double>(depth + 1);
        } else if (zero_fraction != 0.0) {
            total += (path[i].pweight / zero_fraction) /
                     ((depth - i) / static_cast<double>(depth + 1));
        }
    }
    return total;
}

struct TreeShapWalker {
    const Tree& tree;
    std::span<const double> x;
    std::span<double> phi;

    void recurse(int node_index, int depth, PathElement* parent_path, double parent_zero,
                 double parent_one, int parent_feature) {
        PathElement* path = parent_path + depth + 1;
        std::copy(parent_path, parent_path + depth + 1, path);
        extend_path(path, depth, parent_zero, parent_one, parent_feature);

        const TreeNode& node = tree.nodes[static_cast<std::size_t>(node_index)];
        if (node.is_leaf()) {
            for (int i = 1; i <= depth; ++i) {
                const double w = unwound_path_sum(path, depth, i);
                const PathElement& el = path[i];
                phi[static_cast<std::size_t>(el.feature)] +=
                    w * (el.one_fraction - el.zero_fraction) * node.value;
            }
            return;
        }

        const int hot =
            x[static_cast<std::size_t>(node.feature)] < node.threshold ? node.left : node.right;
        const int cold = hot == node.left ? node.right : node.left;
        const double hot_zero =
            tree.nodes[static_cast<std::size_t>(hot)].cover / node.cover;
        const double cold_zero =
            tree.nodes[static_cast<std::size_t>(cold)].cover / node.cover;

        // repeated split on the same feature: undo the earlier extension
        double incoming_zero = 1.0, incoming_one = 1.0;
        int path_index = 0;
        for (; path_index <= depth; ++path_index)
            if (path[path_index].feature == node.feature) break;
        if (path_index != depth + 1) {
            incoming_zero = path[path_index].zero_fraction;
            incoming_one = path[path_index].one_fraction;
            unwind_path(path, depth, path_index);
            depth -= 1;
        }

        recurse(hot, depth + 1, path, hot_zero * incoming_zero, incoming_one, node.feature);
        recurse(cold, depth + 1, path, cold_zero * incoming_zero, 0.0, node.feature);
    }
};

int tree_max_depth(const Tree& tree, int node, int depth) {
    const TreeNode& n = tree.nodes[static_cast<std::size_t>(node)];
    if (n.is_leaf()) return depth;
    return std::max(tree_max_depth(tree, n.left, depth + 1),
                    tree_max_depth(tree, n.right, depth + 1));
}

void single_tree_shap(const Tree& tree, std::span<const double> x, std::span<double> phi) {
    const int depth = tree_max_depth(tree, 0, 0);
    // path arena: recursion at depth d copies a path of length d+1
    std::vector<PathElement> arena(static_cast<std::size_t>((depth + 2) * (depth + 3)) / 2 +
                                   static_cast<std::size_t>(depth + 2));
    TreeShapWalker walker{tree, x, phi};
    walker.recurse(0, 0, arena.data(), 1.0, 1.0, -1);
}

double tree_expected_value(const Tree& tree, int node) {
    const TreeNode& n = tree.nodes[static_cast<std::size_t>(node)];
    if (n.is_leaf()) return n.value;
    const double cl = tree.nodes[static_cast<std::size_t>(n.left)].cover;
    const double cr = tree.nodes[static_cast<std::size_t>(n.right)].cover;
    return (cl * tree_expected_value(tree, n.left) + cr * tree_expected_value(tree, n.right)) /
           (cl + cr);
}

void require_covers(const TreeEnsemble& ensemble) {
    for (const Tree& tree : ensemble.trees) {
        for (const TreeNode& n : tree.nodes) {
            if (!n.is_leaf() && !(n.cover > 0.0))
                throw Error(Errc::missing_cover,
                            "ensemble lacks positive cover data required by TreeSHAP");
        }
        if (!tree.nodes.empty() && !(tree.nodes[0].cover > 0.0))
            throw Error(Errc::missing_cover,
                        "ensemble lacks positive cover data required by TreeSHAP");
    }
}

} // namespace

double expected_value(const TreeEnsemble& ensemble) {
    require_covers(ensemble);
    double total = 0.0;
    for (const Tree& tree : ensemble.trees) total += tree_expected_value(tree, 0);
    if (ensemble.kind == EnsembleKind::boosted_sum) return ensemble.base_score + total;
    return ensemble.trees.empty() ? 0.5 : total / static_cast<double>(ensemble.trees.size());
}

ShapExplanation tree_shap(const TreeEnsemble& ensemble, std::span<const double> x) {
    if (x.size() != static_cast<std::size_t>(ensemble.feature_count))
        throw Error(Errc::dimension_mismatch, "sample dimension differs from model");
    require_covers(ensemble);

    ShapExplanation out;
    out.phi.assign(x.size(), 0.0);
    for (const Tree& tree : ensemble.trees) single_tree_shap(tree, x, out.phi);

    if (ensemble.kind == EnsembleKind::boosted_sum) {
        out.base_value = expected_value(ensemble);
        out.fx = predict(ensemble, x).margin;
    } else {
        const auto m = static_cast<double>(ensemble.trees.size());
        for (double& p : out.phi) p /= m;
        out.base_value = expected_value(ensemble);
        out.fx = predict(ensemble, x).probability;
    }
    return out;
}

namespace {

// v(S) for one tree: follow x on conditioned features, split by cover
// fractions on the rest.
double subset_value(const Tree& tree, int node, std::span<const double> x, std::uint32_t mask) {
    const TreeNode& n = tree.nodes[static_cast<std::size_t>(node)];
    if (n.is_leaf()) return n.value;
    if (mask & (1u << n.feature)) {
        const int next =
            x[static_cast<std::size_t>(n.feature)] < n.threshold ? n.left : n.right;
        return subset_value(tree, next, x, mask);
    }
    const double cl = tree.nodes[static_cast<std::size_t>(n.left)].cover;
    const double cr = tree.nodes[static_cast<std::size_t>(n.right)].cover;
    return (cl * subset_value(tree, n.left, x, mask) +
            cr * subset_value(tree, n.right, x, mask)) /
           (cl + cr);
}

} // namespace

ShapExplanation brute_force_shap(const TreeEnsemble& ensemble, std::span<const double> x) {
    const int d = ensemble.feature_count;
    if (d > 14)
        throw Error(Errc::too_many_features,
                    "brute-force Shapley enumerates 2^d subsets; refuse d > 14");
    if (x.size() != static_cast<std::size_t>(d))
        throw Error(Errc::dimension_mismatch, "sample dimension differs from model");
    require_covers(ensemble);

    const std::uint32_t n_masks = 1u << d;

    // |S|! (d-|S|-1)! / d!
    std::vector<double> weight(static_cast<std::size_t>(d), 0.0);
    {
        std::vector<double> factorial(static_cast<std::size_t>(d) + 1, 1.0);
        for (std::size_t i = 1; i < factorial.size(); ++i)
            factorial[i] = factorial[i - 1] * static_cast<double>(i);
        for (int s = 0; s < d; ++s)
            weight[static_cast<std::size_t>(s)] =
                factorial[static_cast<std::size_t>(s)] *
                factorial[static_cast<std::size_t>(d - s - 1)] /
                factorial[static_cast<std::size_t>(d)];
    }

    ShapExplanation out;
    out.phi.assign(static_cast<std::size_t>(d), 0.0);
    std::vector<double> value(n_masks, 0.0);

    for (const Tree& tree : ensemble.trees) {
        for (std::uint32_t mask = 0; mask < n_masks; ++mask)
            value[mask] = subset_value(tree, 0, x, mask);
        for (std::uint32_t mask = 0; mask < n_masks; ++mask) {
            const int size = std::popcount(mask);
            for (int i = 0; i < d; ++i) {
                if (mask & (1u << i)) continue;
                out.phi[static_cast<std::size_t>(i)] +=
                    weight[static_cast<std::size_t>(size)] *
                    (value[mask | (1u << i)] - value[mask]);
            }
        }
    }

    if (ensemble.kind == EnsembleKind::boosted_sum) {
        out.base_value = expected_value(ensemble);
        out.fx = predict(ensemble, x).margin;
    } else {
        const auto m = static_cast<double>(ensemble.trees.size());
        for (double& p : out.phi) p /= m;
        out.base_value = expected_value(ensemble);
        out.fx = predict(ensemble, x).probability;
    }
    return out;
}

bool efficiency_holds(const ShapExplanation& e, double tol) {
    double total = e.base_value;
    for (double p : e.phi) total += p;
    return std::abs(total - e.fx) <= tol * std::max(1.0, std::abs(e.fx));
}

GlobalSummary global_summary(const std::vector<ShapExplanation>& explanations, std::size_t k) {
    if (explanations.empty())
        throw Error(Errc::empty_data, "global summary needs at least one explanation");
    const std::size_t d = explanations.front().phi.size();
    for (const ShapExplanation& e : explanations)
        if (e.phi.size() != d)
            throw Error(Errc::dimension_mismatch, "explanations have mixed dimensions");

    GlobalSummary summary;
    summary.per_feature.resize(d);
    std::vector<double> column(explanations.size());
    for (std::size_t f = 0; f < d; ++f) {
        FeatureImportance& imp = summary.per_feature[f];
        imp.feature = f;
        double abs_sum = 0.0;
        for (std::size_t s = 0; s < explanations.size(); ++s) {
            column[s] = explanations[s].phi[f];
            abs_sum += std::abs(column[s]);
        }
        imp.mean_abs_phi = abs_sum / static_cast<double>(explanations.size());
        std::sort(column.begin(), column.end());
        auto quantile = [&](double q) {
            const double pos = q * static_cast<double>(column.size() - 1);
            const auto lo = static_cast<std::size_t>(pos);
            const auto hi = std::min(lo + 1, column.size() - 1);
            return column[lo] + (pos - static_cast<double>(lo)) * (column[hi] - column[lo]);
        };
        imp.phi_min = column.front();
        imp.phi_q25 = quantile(0.25);
        imp.phi_median = quantile(0.5);
        imp.phi_q75 = quantile(0.75);
        imp.phi_max = column.back();
    }

    std::vector<std::size_t> order(d);
    for (std::size_t i = 0; i < d; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return summary.per_feature[a].mean_abs_phi > summary.per_feature[b].mean_abs_phi;
    });
    for (std::size_t pos = 0; pos < order.size(); ++pos)
        summary.per_feature[order[pos]].rank = pos + 1;
    summary.top.assign(order.begin(),
                       order.begin() + static_cast<std::ptrdiff_t>(std::min(k, d)));
    return summary;
}

LocalReport local_report(const ShapExplanation& explanation, std::span<const double> x,
                         const std::vector<std::string>& feature_names, EnsembleKind kind,
                         std::size_t top_k) {
    const std::size_t d = explanation.phi.size();
    if (x.size() != d || feature_names.size() != d)
        throw Error(Errc::dimension_mismatch, "values/names/phi dimensions differ");

    LocalReport report;
    report.flow_id = explanation.flow_id;
    report.base_value = explanation.base_value;
    report.fx = explanation.fx;
    if (kind == EnsembleKind::boosted_sum) {
        report.margin = explanation.fx;
        report.probability = sigmoid(explanation.fx);
    } else {
        report.probability = explanation.fx; // attribution space is probability
        report.margin = clamped_logit(explanation.fx);
    }

    std::vector<std::size_t> order(d);
    for (std::size_t i = 0; i < d; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return std::abs(explanation.phi[a]) > std::abs(explanation.phi[b]);
    });

    const std::size_t shown = std::min(top_k, d);
    for (std::size_t pos = 0; pos < shown; ++pos) {
        const std::size_t f = order[pos];
        LocalEntry entry;
        entry.feature = feature_names[f];
        entry.value = x[f];
        entry.phi = explanation.phi[f];
        entry.direction = explanation.phi[f] > 0   ? "pushes-malware"
                          : explanation.phi[f] < 0 ? "pushes-normal"
                                                   : "neutral";
        report.entries.push_back(std::move(entry));
    }
    if (shown < d) {
        report.has_others = true;
        for (std::size_t pos = shown; pos < d; ++pos)
            report.others_phi += explanation.phi[order[pos]];
    }
    return report;
}

std::string local_report_to_json(const LocalReport& report) {
    nlohmann::ordered_json j;
    j["flow_id"] = report.flow_id;
    j["base_value"] = report.base_value;
    j["fx"] = report.fx;
    j["probability"] = report.probability;
    j["margin"] = report.margin;
    j["contributions"] = nlohmann::ordered_json::array();
    for (const LocalEntry& e : report.entries)
        j["contributions"].push_back(nlohmann::ordered_json{{"feature", e.feature},
                                                            {"value", e.value},
                                                            {"phi", e.phi},
                                                            {"direction", e.direction}});
    if (report.has_others) j["others_phi"] = report.others_phi;
    return j.dump();
}

std::string global_summary_to_json(const GlobalSummary& summary,
                                   const std::vector<std::string>& feature_names) {
    nlohmann::ordered_json j;
    j["top"] = nlohmann::ordered_json::array();
    for (std::size_t f : summary.top) j["top"].push_back(feature_names[f]);
    j["features"] = nlohmann::ordered_json::array();
    for (const FeatureImportance& imp : summary.per_feature) {
        j["features"].push_back(nlohmann::ordered_json{
            {"feature", feature_names[imp.feature]},
            {"mean_abs_phi", imp.mean_abs_phi},
            {"rank", imp.rank},
            {"phi_quantiles", {imp.phi_min, imp.phi_q25, imp.phi_median, imp.phi_q75,
                               imp.phi_max}}});
    }
    return j.dump(2);
}

std::string global_summary_to_csv(const GlobalSummary& summary,
                                  const std::vector<std::string>& feature_names) {
    std::vector<const FeatureImportance*> by_rank(summary.per_feature.size());
    for (const FeatureImportance& imp : summary.per_feature) by_rank[imp.rank - 1] = &imp;
    std::string out = "feature,mean_abs_phi,rank\n";
    char buf[64];
    for (const FeatureImportance* imp : by_rank) {
        std::snprintf(buf, sizeof(buf), "%.17g", imp->mean_abs_phi);
        out += feature_names[imp->feature] + "," + buf + "," + std::to_string(imp->rank) + "\n";
    }
    return out;
}

} // namespace flowlens

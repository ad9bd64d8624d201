#include "flowlens/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>

#include "flowlens/common.hpp"
#include "flowlens/kernels.hpp"
#include "flowlens/rng.hpp"

namespace flowlens {

namespace {

std::string format_double(double v) {
    char buf[32];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, end);
}

double parse_double(std::string_view s) {
    double v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
        throw Error(Errc::io_error, "bad numeric field '" + std::string(s) + "'");
    return v;
}

std::vector<std::string_view> split_csv_line(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
        if (i == line.size() || line[i] == ',') {
            out.push_back(line.substr(start, i - start));
            start = i + 1;
        }
    }
    return out;
}

void shuffle_indices(std::vector<std::size_t>& v, Rng& rng) {
    for (std::size_t i = v.size(); i > 1; --i)
        std::swap(v[i - 1], v[rng.uniform_index(i)]);
}

} // namespace

std::map<int, std::size_t> Dataset::class_counts() const {
    std::map<int, std::size_t> counts;
    for (const FeatureVector& row : rows)
        if (row.label) ++counts[*row.label];
    return counts;
}

bool Dataset::fully_labeled() const {
    return std::all_of(rows.begin(), rows.end(),
                       [](const FeatureVector& r) { return r.label.has_value(); });
}

std::string write_dataset_csv(const Dataset& ds, const std::vector<std::string>& comments) {
    std::string out;
    for (const std::string& c : comments) out += "# " + c + "\n";
    out += "# schema_version: " + ds.schema_version + "\n";

    for (std::size_t i = 0; i < ds.feature_names.size(); ++i) {
        out += ds.feature_names[i];
        out += ',';
    }
    out += "label,flow_id\n";

    for (const FeatureVector& row : ds.rows) {
        if (row.values.size() != ds.feature_names.size())
            throw Error(Errc::dimension_mismatch, "row width differs from header");
        for (double v : row.values) {
            out += format_double(v);
            out += ',';
        }
        if (row.label) out += std::to_string(*row.label);
        out += ',';
        out += row.flow_id;
        out += '\n';
    }
    return out;
}

Dataset read_dataset_csv(const std::string& text) {
    Dataset ds;
    std::size_t pos = 0;
    bool header_seen = false;
    while (pos < text.size()) {
        std::size_t eol = text.find('\n', pos);
        if (eol == std::string::npos) eol = text.size();
        std::string_view line(text.data() + pos, eol - pos);
        pos = eol + 1;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty()) continue;
        if (line[0] == '#') {
            constexpr std::string_view tag = "# schema_version: ";
            if (line.substr(0, tag.size()) == tag)
                ds.schema_version = std::string(line.substr(tag.size()));
            continue;
        }
        auto fields = split_csv_line(line);
        if (!header_seen) {
            if (fields.size() < 2 || fields[fields.size() - 2] != "label" ||
                fields[fields.size() - 1] != "flow_id")
                throw Error(Errc::io_error, "dataset header must end with label,flow_id");
            for (std::size_t i = 0; i + 2 < fields.size(); ++i)
                ds.feature_names.emplace_back(fields[i]);
            header_seen = true;
            continue;
        }
        if (fields.size() != ds.feature_names.size() + 2)
            throw Error(Errc::io_error, "dataset row has wrong field count");
        FeatureVector row;
        row.schema_version = ds.schema_version;
        row.values.reserve(ds.feature_names.size());
        for (std::size_t i = 0; i < ds.feature_names.size(); ++i)
            row.values.push_back(parse_double(fields[i]));
        const std::string_view label = fields[fields.size() - 2];
        if (!label.empty()) {
            if (label == "0")
                row.label = 0;
            else if (label == "1")
                row.label = 1;
            else
                throw Error(Errc::non_binary_label, "label must be 0 or 1, got '" +
                                                        std::string(label) + "'");
        }
        row.flow_id = std::string(fields.back());
        ds.rows.push_back(std::move(row));
    }
    if (!header_seen) throw Error(Errc::io_error, "dataset CSV has no header row");
    return ds;
}

// --- manifest ----------------------------------------------------------------

std::vector<ManifestEntry> load_manifest(const std::string& text) {
    std::vector<ManifestEntry> entries;
    std::set<std::pair<std::string, std::string>> seen; // (source, family)
    std::size_t pos = 0;
    bool header_seen = false;
    while (pos < text.size()) {
        std::size_t eol = text.find('\n', pos);
        if (eol == std::string::npos) eol = text.size();
        std::string_view line(text.data() + pos, eol - pos);
        pos = eol + 1;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty() || line[0] == '#') continue;
        auto fields = split_csv_line(line);
        if (!header_seen) {
            if (fields.size() != 4 || fields[0] != "family")
                throw Error(Errc::io_error, "manifest header must be family,type,samples,source");
            header_seen = true;
            continue;
        }
        if (fields.size() != 4) throw Error(Errc::io_error, "manifest row has wrong field count");
        ManifestEntry e;
        e.family = std::string(fields[0]);
        e.type = std::string(fields[1]);
        long long samples = 0;
        auto [ptr, ec] =
            std::from_chars(fields[2].data(), fields[2].data() + fields[2].size(), samples);
        if (ec != std::errc() || ptr != fields[2].data() + fields[2].size())
            throw Error(Errc::io_error, "bad sample count '" + std::string(fields[2]) + "'");
        if (samples < 1)
            throw Error(Errc::non_positive_count,
                        "family " + e.family + " has non-positive sample count");
        e.samples = samples;
        e.source = std::string(fields[3]);
        if (!seen.emplace(e.source, e.family).second)
            throw Error(Errc::duplicate_family,
                        "family " + e.family + " listed twice for source " + e.source);
        entries.push_back(std::move(e));
    }
    return entries;
}

ManifestTotals sum_samples(const std::vector<ManifestEntry>& entries) {
    ManifestTotals t;
    for (const ManifestEntry& e : entries) {
        t.by_family[e.family] += e.samples;
        t.by_type[e.type] += e.samples;
        t.total += e.samples;
    }
    return t;
}

// --- splits -------------------------------------------------------------------

std::vector<std::vector<std::size_t>> kfold_split(std::size_t n, int k, std::uint64_t seed,
                                                  std::span<const int> labels) {
    if (k < 2) throw Error(Errc::bad_config, "k-fold needs k >= 2");
    if (n < static_cast<std::size_t>(k))
        throw Error(Errc::too_few_samples,
                    "cannot split " + std::to_string(n) + " samples into " + std::to_string(k) +
                        " folds");
    if (!labels.empty() && labels.size() != n)
        throw Error(Errc::length_mismatch, "labels length differs from n");

    Rng rng(seed);
    std::vector<std::vector<std::size_t>> folds(static_cast<std::size_t>(k));

    if (labels.empty()) {
        std::vector<std::size_t> idx(n);
        for (std::size_t i = 0; i < n; ++i) idx[i] = i;
        shuffle_indices(idx, rng);
        // first (n mod k) folds take one extra
        const std::size_t base = n / static_cast<std::size_t>(k);
        const std::size_t extra = n % static_cast<std::size_t>(k);
        std::size_t cursor = 0;
        for (std::size_t f = 0; f < folds.size(); ++f) {
            const std::size_t size = base + (f < extra ? 1 : 0);
            folds[f].assign(idx.begin() + static_cast<std::ptrdiff_t>(cursor),
                            idx.begin() + static_cast<std::ptrdiff_t>(cursor + size));
            cursor += size;
        }
    } else {
        // Per class: even share everywhere, remainders poured into the
        // currently smallest folds so overall sizes stay within 1.
        std::map<int, std::vector<std::size_t>> by_class;
        for (std::size_t i = 0; i < n; ++i) by_class[labels[i]].push_back(i);
        for (auto& [label, idx] : by_class) {
            shuffle_indices(idx, rng);
            const std::size_t base = idx.size() / static_cast<std::size_t>(k);
            const std::size_t extra = idx.size() % static_cast<std::size_t>(k);

            std::vector<std::size_t> order(folds.size());
            for (std::size_t f = 0; f < folds.size(); ++f) order[f] = f;
            std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
                return folds[a].size() < folds[b].size();
            });

            std::size_t cursor = 0;
            for (std::size_t pos_in_order = 0; pos_in_order < order.size(); ++pos_in_order) {
                const std::size_t f = order[pos_in_order];
                const std::size_t size = base + (pos_in_order < extra ? 1 : 0);
                for (std::size_t j = 0; j < size; ++j) folds[f].push_back(idx[cursor++]);
            }
        }
    }
    for (auto& fold : folds) std::sort(fold.begin(), fold.end());
    return folds;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>>
train_test_split(std::span<const int> labels, double test_fraction, std::uint64_t seed) {
    if (test_fraction <= 0.0 || test_fraction >= 1.0)
        throw Error(Errc::bad_config, "test fraction must lie in (0,1)");
    Rng rng(seed);
    std::map<int, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);

    std::vector<std::size_t> train, test;
    for (auto& [label, idx] : by_class) {
        shuffle_indices(idx, rng);
        auto n_test = static_cast<std::size_t>(
            std::llround(test_fraction * static_cast<double>(idx.size())));
        n_test = std::min(std::max<std::size_t>(n_test, 1), idx.size() - 1);
        for (std::size_t j = 0; j < idx.size(); ++j)
            (j < n_test ? test : train).push_back(idx[j]);
    }
    std::sort(train.begin(), train.end());
    std::sort(test.begin(), test.end());
    return {std::move(train), std::move(test)};
}

// --- ADASYN -------------------------------------------------------------------

AdasynResult adasyn(const Dataset& ds, const AdasynParams& params,
                    std::span<const std::uint8_t> binary_mask) {
    if (!ds.fully_labeled()) throw Error(Errc::bad_config, "ADASYN needs a fully labeled dataset");
    if (params.k_neighbors < 1) throw Error(Errc::bad_config, "k_neighbors must be >= 1");
    const auto counts = ds.class_counts();
    if (counts.size() != 2)
        throw Error(Errc::single_class, "ADASYN needs exactly two classes, got " +
                                            std::to_string(counts.size()));

    const int class_a = counts.begin()->first;
    const int class_b = std::next(counts.begin())->first;
    int target = params.target_class.value_or(
        counts.at(class_a) <= counts.at(class_b) ? class_a : class_b);
    if (target != class_a && target != class_b)
        throw Error(Errc::bad_config, "target class not present in dataset");
    const int other = target == class_a ? class_b : class_a;

    const auto n_target = static_cast<long long>(counts.at(target));
    const auto n_other = static_cast<long long>(counts.at(other));

    AdasynResult result;
    result.data = ds;

    const auto to_generate_total =
        static_cast<long long>(std::llround(static_cast<double>(n_other - n_target) * params.beta));
    if (to_generate_total <= 0) return result; // already balanced (or target is majority)

    if (n_target < params.k_neighbors + 1)
        throw Error(Errc::too_few_samples,
                    "minority class needs at least k_neighbors+1 samples for ADASYN");

    const std::size_t n = ds.rows.size();
    const std::size_t d = ds.dimension();
    if (!binary_mask.empty() && binary_mask.size() != d)
        throw Error(Errc::length_mismatch, "binary mask length differs from dimension");

    // Standardize for the distance metric; zero-variance columns are inert.
    std::vector<double> mean(d, 0.0), inv_std(d, 0.0);
    for (std::size_t j = 0; j < d; ++j) {
        std::vector<double> col(n);
        for (std::size_t i = 0; i < n; ++i) col[i] = ds.rows[i].values[j];
        mean[j] = kernels::sum(col) / static_cast<double>(n);
        const double var = kernels::sum_sq_dev(col, mean[j]) / static_cast<double>(n);
        inv_std[j] = var > 0.0 ? 1.0 / std::sqrt(var) : 0.0;
    }
    std::vector<double> z(n * d);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j)
            z[i * d + j] = (ds.rows[i].values[j] - mean[j]) * inv_std[j];
    auto zrow = [&](std::size_t i) { return std::span<const double>(z.data() + i * d, d); };

    std::vector<std::size_t> minority_idx;
    for (std::size_t i = 0; i < n; ++i)
        if (*ds.rows[i].label == target) minority_idx.push_back(i);

    const auto k = static_cast<std::size_t>(params.k_neighbors);
    auto k_nearest = [&](std::size_t query, const std::vector<std::size_t>& pool) {
        std::vector<std::pair<double, std::size_t>> dist;
        dist.reserve(pool.size());
        for (std::size_t cand : pool) {
            if (cand == query) continue;
            dist.emplace_back(kernels::squared_distance(zrow(query), zrow(cand)), cand);
        }
        const std::size_t take = std::min(k, dist.size());
        std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(take),
                          dist.end());
        std::vector<std::size_t> out;
        out.reserve(take);
        for (std::size_t i = 0; i < take; ++i) out.push_back(dist[i].second);
        return out;
    };

    std::vector<std::size_t> all_idx(n);
    for (std::size_t i = 0; i < n; ++i) all_idx[i] = i;

    // r_i: fraction of majority among each minority sample's k nearest
    // neighbors in the full dataset.
    std::vector<double> ratio(minority_idx.size(), 0.0);
    double ratio_sum = 0.0;
    for (std::size_t m = 0; m < minority_idx.size(); ++m) {
        const auto neighbors = k_nearest(minority_idx[m], all_idx);
        std::size_t majority = 0;
        for (std::size_t nb : neighbors)
            if (*ds.rows[nb].label == other) ++majority;
        ratio[m] = static_cast<double>(majority) / static_cast<double>(k);
        ratio_sum += ratio[m];
    }
    if (ratio_sum == 0.0) {
        result.degenerate = true; // no minority sample borders the majority
        return result;
    }

    Rng rng(params.seed);
    for (std::size_t m = 0; m < minority_idx.size(); ++m) {
        const auto g = static_cast<long long>(std::llround(
            ratio[m] / ratio_sum * static_cast<double>(to_generate_total)));
        if (g <= 0) continue;
        const std::size_t seed_idx = minority_idx[m];
        const auto minority_neighbors = k_nearest(seed_idx, minority_idx);
        for (long long s = 0; s < g; ++s) {
            const std::size_t nn = minority_neighbors[rng.uniform_index(minority_neighbors.size())];
            const double u = rng.uniform();
            FeatureVector synth;
            synth.schema_version = ds.schema_version;
            synth.label = target;
            synth.flow_id = "adasyn-" + std::to_string(seed_idx) + "-" + std::to_string(s);
            synth.values.resize(d);
            for (std::size_t j = 0; j < d; ++j) {
                double v = ds.rows[seed_idx].values[j] +
                           u * (ds.rows[nn].values[j] - ds.rows[seed_idx].values[j]);
                if (!binary_mask.empty() && binary_mask[j]) v = v >= 0.5 ? 1.0 : 0.0;
                synth.values[j] = v;
            }
            result.data.rows.push_back(std::move(synth));
            ++result.generated;
        }
    }
    return result;
}

} // namespace flowlens

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "flowlens/schema.hpp"

namespace flowlens {

// Feature rows plus their column names. Labels are optional per row;
// training entry points require them.
struct Dataset {
    std::vector<std::string> feature_names;
    std::string schema_version;
    std::vector<FeatureVector> rows;

    std::size_t dimension() const { return feature_names.size(); }
    std::map<int, std::size_t> class_counts() const;
    bool fully_labeled() const;
};

// CSV with '#' provenance comments, a header row (features..., label,
// flow_id) and full-precision shortest round-trip numerics, so write->read
// is bit-exact.
std::string write_dataset_csv(const Dataset& ds, const std::vector<std::string>& comments = {});
Dataset read_dataset_csv(const std::string& text);

// --- manifest (family, type, samples, source) ------------------------------

struct ManifestEntry {
    std::string family;
    std::string type;
    long long samples = 0;
    std::string source;
};

struct ManifestTotals {
    std::map<std::string, long long> by_family;
    std::map<std::string, long long> by_type;
    long long total = 0;
};

// CSV columns family,type,samples,source. Throws DuplicateFamily (same
// family listed twice for one source) and NonPositiveCount.
std::vector<ManifestEntry> load_manifest(const std::string& text);
ManifestTotals sum_samples(const std::vector<ManifestEntry>& entries);

// --- splits -----------------------------------------------------------------

// k disjoint index sets covering [0, n), sizes within 1 of each other,
// stratified when labels are supplied. Deterministic per seed.
std::vector<std::vector<std::size_t>> kfold_split(std::size_t n, int k, std::uint64_t seed,
                                                  std::span<const int> labels = {});

// Stratified single train/test split; returns (train, test) index lists.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>>
train_test_split(std::span<const int> labels, double test_fraction, std::uint64_t seed);

// --- ADASYN -----------------------------------------------------------------

struct AdasynParams {
    int k_neighbors = 5;
    double beta = 1.0;
    std::uint64_t seed = 0;
    // Class to oversample; defaults to the minority class.
    std::optional<int> target_class;
};

struct AdasynResult {
    Dataset data; // input rows as a prefix, synthetics appended
    std::size_t generated = 0;
    bool degenerate = false; // all r_i were zero; input returned unchanged
};

// Adaptive synthetic oversampling. Neighbor search is brute-force Euclidean
// on standardized features. binary_mask marks indicator columns that are
// rounded back to {0,1} after interpolation.
AdasynResult adasyn(const Dataset& ds, const AdasynParams& params,
                    std::span<const std::uint8_t> binary_mask = {});

} // namespace flowlens

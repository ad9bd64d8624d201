#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace flowlens {

struct FeatureDef {
    std::string name;
    std::string group; // meta | length | time | markov | tls | cert
    bool binary = false; // 0/1 indicator; ADASYN rounds these after interpolation
};

// Fixed-order feature schema. The feature list is derived from the
// vocabularies and options, so two schemas with equal settings are
// identical feature-for-feature. The default schema has 140 features.
struct FeatureSchema {
    std::string schema_version = "flowlens-v1";
    double bin_width = 150.0; // bytes for sizes, milliseconds for IATs
    int n_states = 3;
    std::int64_t window_seconds = 1800;
    bool per_direction_markov = false;
    std::vector<std::uint16_t> cipher_vocab;
    std::vector<std::uint16_t> extension_vocab;
    std::vector<std::uint16_t> version_vocab;

    std::vector<FeatureDef> features;

    static FeatureSchema default_schema();
    static FeatureSchema from_json_text(const std::string& text);
    std::string to_json_text() const;

    std::size_t dimension() const { return features.size(); }
    std::size_t index_of(const std::string& name) const; // throws SchemaMismatch
    bool has(const std::string& name) const { return index_.count(name) != 0; }

    // Recomputes the feature list from vocabularies and options.
    void rebuild();

private:
    std::map<std::string, std::size_t> index_;
};

// One flow's fixed-schema numeric vector.
struct FeatureVector {
    std::vector<double> values;
    std::string schema_version;
    std::optional<int> label; // 0 = normal, 1 = malware
    std::string flow_id;
};

std::string hex4(std::uint16_t v);

} // namespace flowlens

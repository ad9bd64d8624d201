#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "flowlens/flow.hpp"
#include "flowlens/schema.hpp"
#include "flowlens/tls.hpp"

namespace flowlens {

// state = min(floor(value / bin_width), n_states - 1); monotone in value.
std::vector<int> discretize(std::span<const double> values, double bin_width = 150.0,
                            int n_states = 3);

// Row-stochastic transition counts over consecutive state pairs, row-major.
// Rows that were never a transition source stay all-zero.
std::vector<double> transition_matrix(std::span<const int> states, int n_states = 3);

// Per-direction and whole-flow statistics over payload lengths (bytes) and
// inter-arrival times (milliseconds). Directions with too few packets emit
// zeros with their presence flag cleared.
std::map<std::string, double> stat_features(const BiFlow& flow);

// Size and IAT transition matrices over the merged packet sequence (plus
// per-direction matrices when the schema asks for them).
std::map<std::string, double> markov_features(const BiFlow& flow, const FeatureSchema& schema);

// 0/1 indicators per vocabulary entry; out-of-vocabulary codes set the
// group's "other" indicator. GREASE codes are ignored entirely.
std::map<std::string, double> one_hot_tls(const std::optional<TlsMetadata>& meta,
                                          const FeatureSchema& schema);

std::map<std::string, double> cert_features(const std::optional<TlsMetadata>& meta);

// Assembles all producer outputs into schema order. Throws SchemaMismatch
// if a producer emits a name the schema lacks, or a schema feature has no
// producer.
FeatureVector build_vector(const BiFlow& flow, const std::optional<TlsMetadata>& meta,
                           const FeatureSchema& schema);

} // namespace flowlens

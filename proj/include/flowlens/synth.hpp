#pragma once

#include <cstdint>
#include <vector>

#include "flowlens/dataset.hpp"
#include "flowlens/schema.hpp"

namespace flowlens {

enum class TrafficProfile { normal, malware };

// Desk-scale stand-in for real corpora: each flow is drawn from documented
// parametric distributions (see SynthProfileParams), materialized as a
// synthetic packet sequence + handshake metadata, and featurized through
// the regular extraction path. Deterministic per (profile, seed, index).
//
// The malware profile mirrors the qualitative separations the detection
// literature reports: smaller payloads, burstier inter-arrival times,
// older TLS versions and legacy ciphers, longer-lived and more often
// self-signed certificates, more client packets than server packets.
struct SynthProfileParams {
    // packet counts
    int min_packets, max_packets;
    double fwd_fraction;
    // lognormal payload sizes (bytes), clamped
    double size_mu, size_sigma, size_min, size_max;
    // inter-arrival times (ms): lognormal base, plus an occasional long
    // pause with the given probability and scale
    double iat_mu, iat_sigma, pause_probability, pause_mu, pause_sigma;
    // TLS
    std::vector<std::pair<std::uint16_t, double>> version_weights;
    std::vector<std::uint16_t> cipher_pool;   // offered: prefix sample, selected: first
    std::vector<std::uint16_t> extension_pool;
    double cert_present_probability;
    double cert_self_signed_probability;
    int cert_days_min, cert_days_max;
    // TCP window of the first backward packet
    int init_win_min, init_win_max;

    static SynthProfileParams normal_profile();
    static SynthProfileParams malware_profile();
};

std::vector<FeatureVector> generate_synthetic_corpus(TrafficProfile profile, std::size_t n_flows,
                                                     std::uint64_t seed,
                                                     const FeatureSchema& schema);

// Labeled normal+malware corpus as one dataset (normal first).
Dataset generate_labeled_corpus(std::size_t n_normal, std::size_t n_malware, std::uint64_t seed,
                                const FeatureSchema& schema);

} // namespace flowlens

#include "flowlens/synth.hpp"

#include <algorithm>
#include <cmath>

#include "flowlens/features.hpp"
#include "flowlens/flow.hpp"
#include "flowlens/rng.hpp"
#include "flowlens/tls.hpp"

namespace flowlens {

SynthProfileParams SynthProfileParams::normal_profile() {
    SynthProfileParams p;
    p.min_packets = 10;
    p.max_packets = 60;
    p.fwd_fraction = 0.45;
    p.size_mu = std::log(700.0);
    p.size_sigma = 0.35;
    p.size_min = 80;
    p.size_max = 1460;
    p.iat_mu = std::log(60.0);
    p.iat_sigma = 0.45;
    p.pause_probability = 0.02;
    p.pause_mu = std::log(1200.0);
    p.pause_sigma = 0.4;
    p.version_weights = {{0x0304, 0.55}, {0x0303, 0.43}, {0x0302, 0.02}};
    p.cipher_pool = {0x1301, 0x1302, 0x1303, 0xc02b, 0xc02f, 0xcca9, 0xc02c, 0xc030};
    p.extension_pool = {0, 10, 13, 16, 23, 35, 43, 45, 51, 65281};
    p.cert_present_probability = 0.85;
    p.cert_self_signed_probability = 0.01;
    p.cert_days_min = 90;
    p.cert_days_max = 398;
    p.init_win_min = 26000;
    p.init_win_max = 65535;
    return p;
}

SynthProfileParams SynthProfileParams::malware_profile() {
    SynthProfileParams p;
    p.min_packets = 6;
    p.max_packets = 30;
    p.fwd_fraction = 0.68;
    p.size_mu = std::log(150.0);
    p.size_sigma = 0.45;
    p.size_min = 40;
    p.size_max = 1460;
    p.iat_mu = std::log(7.0);
    p.iat_sigma = 0.9;
    p.pause_probability = 0.22; // bursty: short runs broken by long pauses
    p.pause_mu = std::log(2600.0);
    p.pause_sigma = 0.7;
    p.version_weights = {{0x0301, 0.50}, {0x0302, 0.30}, {0x0303, 0.20}};
    p.cipher_pool = {0x002f, 0x0035, 0x000a, 0xc013, 0xc014, 0x003c};
    p.extension_pool = {0, 35, 65281};
    p.cert_present_probability = 0.9;
    p.cert_self_signed_probability = 0.55;
    p.cert_days_min = 820;
    p.cert_days_max = 3650;
    p.init_win_min = 8192;
    p.init_win_max = 29200;
    return p;
}

namespace {

PacketRecord make_packet(std::int64_t ts_ns, bool fwd, std::size_t payload_len,
                         std::uint16_t window, std::uint64_t index) {
    PacketRecord p;
    p.ts_ns = ts_ns;
    p.src_ip = fwd ? IpAddr::v4(10, 0, 0, 1) : IpAddr::v4(10, 0, 0, 2);
    p.dst_ip = fwd ? IpAddr::v4(10, 0, 0, 2) : IpAddr::v4(10, 0, 0, 1);
    p.src_port = fwd ? 40000 : 443;
    p.dst_port = fwd ? 443 : 40000;
    p.tcp_window = window;
    p.payload.assign(payload_len, 0);
    p.wire_len = static_cast<std::uint32_t>(payload_len + 54);
    p.capture_index = index;
    return p;
}

FeatureVector synth_flow(TrafficProfile profile, const SynthProfileParams& p, std::uint64_t seed,
                         std::size_t index, const FeatureSchema& schema) {
    Rng rng(mix_seed(seed, index * 2 + (profile == TrafficProfile::malware ? 1 : 0)));

    const int n_packets =
        p.min_packets + static_cast<int>(rng.uniform_index(
                            static_cast<std::size_t>(p.max_packets - p.min_packets + 1)));
    const auto init_win = static_cast<std::uint16_t>(
        p.init_win_min +
        static_cast<int>(rng.uniform_index(static_cast<std::size_t>(p.init_win_max - p.init_win_min + 1))));

    BiFlow flow;
    flow.key = FlowKey::canonical({IpAddr::v4(10, 0, 0, 1), 40000}, {IpAddr::v4(10, 0, 0, 2), 443});
    flow.initiator = {IpAddr::v4(10, 0, 0, 1), 40000};
    flow.handshake_complete = true;
    flow.encrypted = true;

    std::int64_t ts = 0;
    for (int i = 0; i < n_packets; ++i) {
        // first two packets pin one packet per direction
        const bool fwd = i == 0 ? true : (i == 1 ? false : rng.bernoulli(p.fwd_fraction));
        double iat_ms = 0.0;
        if (i > 0) {
            iat_ms = rng.bernoulli(p.pause_probability) ? rng.lognormal(p.pause_mu, p.pause_sigma)
                                                        : rng.lognormal(p.iat_mu, p.iat_sigma);
        }
        ts += static_cast<std::int64_t>(iat_ms * 1e6);
        const double raw_size = rng.lognormal(p.size_mu, p.size_sigma);
        const auto payload_len =
            static_cast<std::size_t>(std::clamp(raw_size, p.size_min, p.size_max));
        PacketRecord pkt =
            make_packet(ts, fwd, payload_len, init_win, static_cast<std::uint64_t>(i));
        (fwd ? flow.fwd_packets : flow.bwd_packets).push_back(std::move(pkt));
    }
    flow.window_start_ns = 0;
    flow.window_end_ns = schema.window_seconds * 1'000'000'000;

    TlsMetadata meta;
    meta.client_parsed = meta.server_parsed = true;
    double pick = rng.uniform();
    meta.client_version = p.version_weights.back().first;
    for (const auto& [version, weight] : p.version_weights) {
        if (pick < weight) {
            meta.client_version = version;
            break;
        }
        pick -= weight;
    }
    meta.legacy_client_version = meta.client_version;
    meta.server_version = meta.client_version;

    const std::size_t n_offered = 2 + rng.uniform_index(p.cipher_pool.size() - 1);
    meta.offered_ciphers.assign(p.cipher_pool.begin(),
                                p.cipher_pool.begin() + static_cast<std::ptrdiff_t>(
                                                            std::min(n_offered, p.cipher_pool.size())));
    meta.selected_cipher = p.cipher_pool[rng.uniform_index(std::min(n_offered, p.cipher_pool.size()))];

    const std::size_t n_ext = 1 + rng.uniform_index(p.extension_pool.size());
    meta.client_extensions.assign(
        p.extension_pool.begin(),
        p.extension_pool.begin() + static_cast<std::ptrdiff_t>(std::min(n_ext, p.extension_pool.size())));

    if (rng.bernoulli(p.cert_present_probability)) {
        meta.cert_valid_days =
            p.cert_days_min + static_cast<int>(rng.uniform_index(static_cast<std::size_t>(
                                  p.cert_days_max - p.cert_days_min + 1)));
        meta.cert_self_signed = rng.bernoulli(p.cert_self_signed_probability);
    }

    FeatureVector vec = build_vector(flow, meta, schema);
    vec.label = profile == TrafficProfile::malware ? 1 : 0;
    vec.flow_id = std::string(profile == TrafficProfile::malware ? "synth-malware-" : "synth-normal-") +
                  std::to_string(index);
    return vec;
}

} // namespace

std::vector<FeatureVector> generate_synthetic_corpus(TrafficProfile profile, std::size_t n_flows,
                                                     std::uint64_t seed,
                                                     const FeatureSchema& schema) {
    const SynthProfileParams params = profile == TrafficProfile::malware
                                          ? SynthProfileParams::malware_profile()
                                          : SynthProfileParams::normal_profile();
    std::vector<FeatureVector> out;
    out.reserve(n_flows);
    for (std::size_t i = 0; i < n_flows; ++i)
        out.push_back(synth_flow(profile, params, seed, i, schema));
    return out;
}

Dataset generate_labeled_corpus(std::size_t n_normal, std::size_t n_malware, std::uint64_t seed,
                                const FeatureSchema& schema) {
    Dataset ds;
    ds.schema_version = schema.schema_version;
    for (const FeatureDef& f : schema.features) ds.feature_names.push_back(f.name);
    auto normal = generate_synthetic_corpus(TrafficProfile::normal, n_normal, seed, schema);
    auto malware = generate_synthetic_corpus(TrafficProfile::malware, n_malware, seed, schema);
    ds.rows.reserve(normal.size() + malware.size());
    std::move(normal.begin(), normal.end(), std::back_inserter(ds.rows));
    std::move(malware.begin(), malware.end(), std::back_inserter(ds.rows));
    return ds;
}

} // namespace flowlens

#include "flowlens/features.hpp"

#include <cmath>

#include "flowlens/common.hpp"
#include "flowlens/kernels.hpp"

namespace flowlens {

std::vector<int> discretize(std::span<const double> values, double bin_width, int n_states) {
    std::vector<int> states;
    states.reserve(values.size());
    for (double v : values) {
        const auto raw = static_cast<long long>(std::floor(v / bin_width));
        states.push_back(static_cast<int>(std::min<long long>(std::max(raw, 0LL), n_states - 1)));
    }
    return states;
}

std::vector<double> transition_matrix(std::span<const int> states, int n_states) {
    const auto n = static_cast<std::size_t>(n_states);
    std::vector<double> counts(n * n, 0.0);
    for (std::size_t i = 0; i + 1 < states.size(); ++i)
        counts[static_cast<std::size_t>(states[i]) * n + static_cast<std::size_t>(states[i + 1])] +=
            1.0;
    for (std::size_t row = 0; row < n; ++row) {
        double total = 0.0;
        for (std::size_t col = 0; col < n; ++col) total += counts[row * n + col];
        if (total > 0.0)
            for (std::size_t col = 0; col < n; ++col) counts[row * n + col] /= total;
    }
    return counts;
}

namespace {

constexpr double kNsToMs = 1e-6;

struct SeriesStats {
    double min = 0, max = 0, mean = 0, stddev = 0;
    bool present = false;
};

// Population statistics; empty input returns the all-zero defaults.
SeriesStats series_stats(std::span<const double> v) {
    SeriesStats s;
    if (v.empty()) return s;
    s.present = true;
    s.min = kernels::minimum(v);
    s.max = kernels::maximum(v);
    s.mean = kernels::sum(v) / static_cast<double>(v.size());
    s.stddev = std::sqrt(kernels::sum_sq_dev(v, s.mean) / static_cast<double>(v.size()));
    return s;
}

std::vector<double> payload_lengths(const std::vector<PacketRecord>& pkts) {
    std::vector<double> out;
    out.reserve(pkts.size());
    for (const auto& p : pkts) out.push_back(static_cast<double>(p.payload.size()));
    return out;
}

std::vector<double> iats_ms(const std::vector<std::int64_t>& ts) {
    std::vector<double> out;
    if (ts.size() < 2) return out;
    out.reserve(ts.size() - 1);
    for (std::size_t i = 1; i < ts.size(); ++i)
        out.push_back(static_cast<double>(ts[i] - ts[i - 1]) * kNsToMs);
    return out;
}

std::vector<std::int64_t> timestamps(const std::vector<PacketRecord>& pkts) {
    std::vector<std::int64_t> out;
    out.reserve(pkts.size());
    for (const auto& p : pkts) out.push_back(p.ts_ns);
    return out;
}

void emit_matrix(std::map<std::string, double>& out, const std::string& prefix,
                 const std::vector<double>& m, int n_states) {
    std::size_t k = 0;
    for (int i = 0; i < n_states; ++i)
        for (int j = 0; j < n_states; ++j)
            out[prefix + std::to_string(i) + std::to_string(j)] = m[k++];
}

} // namespace

std::map<std::string, double> stat_features(const BiFlow& flow) {
    std::map<std::string, double> f;

    const auto merged = flow.merged_packets();
    std::vector<std::int64_t> merged_ts;
    std::vector<double> merged_len;
    merged_ts.reserve(merged.size());
    merged_len.reserve(merged.size());
    for (const PacketRecord* p : merged) {
        merged_ts.push_back(p->ts_ns);
        merged_len.push_back(static_cast<double>(p->payload.size()));
    }

    const std::vector<double> fwd_len = payload_lengths(flow.fwd_packets);
    const std::vector<double> bwd_len = payload_lengths(flow.bwd_packets);

    f["bytes_in"] = kernels::sum(fwd_len);
    f["bytes_out"] = kernels::sum(bwd_len);
    f["num_pkts_in"] = static_cast<double>(flow.fwd_packets.size());
    f["num_pkts_out"] = static_cast<double>(flow.bwd_packets.size());
    f["duration_ms"] = merged_ts.size() >= 2
                           ? static_cast<double>(merged_ts.back() - merged_ts.front()) * kNsToMs
                           : 0.0;
    f["Init_Bwd_Win_Bytes"] =
        flow.bwd_packets.empty() ? 0.0 : static_cast<double>(flow.bwd_packets.front().tcp_window);
    f["bwd_present"] = flow.bwd_packets.empty() ? 0.0 : 1.0;

    const SeriesStats fwd_l = series_stats(fwd_len);
    f["Fwd_Pkt_Len_Min"] = fwd_l.min;
    f["Fwd_Pkt_Len_Max"] = fwd_l.max;
    f["Fwd_Pkt_Len_Mean"] = fwd_l.mean;
    f["Fwd_Pkt_Len_Std"] = fwd_l.stddev;

    const SeriesStats bwd_l = series_stats(bwd_len);
    f["Bwd_Pkt_Len_Min"] = bwd_l.min;
    f["Max_Bpckt"] = bwd_l.max;
    f["Bwd_Pkt_Len_Mean"] = bwd_l.mean;
    f["Bwd_Pkt_Len_Std"] = bwd_l.stddev;

    const SeriesStats all_l = series_stats(merged_len);
    f["Pkt_Len_Min"] = all_l.min;
    f["Pkt_Len_Max"] = all_l.max;
    f["Pkt_Len_Mean"] = all_l.mean;
    f["Pkt_Len_Std"] = all_l.stddev;

    const std::vector<double> fwd_iat = iats_ms(timestamps(flow.fwd_packets));
    const std::vector<double> bwd_iat = iats_ms(timestamps(flow.bwd_packets));
    const std::vector<double> flow_iat = iats_ms(merged_ts);

    const SeriesStats fi = series_stats(fwd_iat);
    f["Fwd_IAT_Min"] = fi.min;
    f["Fwd_IAT_Max"] = fi.max;
    f["Mean_f_inter"] = fi.mean;
    f["Fwd_IAT_Std"] = fi.stddev;
    f["fwd_iat_present"] = fi.present ? 1.0 : 0.0;

    const SeriesStats bi = series_stats(bwd_iat);
    f["Bwd_IAT_Min"] = bi.min;
    f["Bwd_IAT_Max"] = bi.max;
    f["Bwd_IAT_Mean"] = bi.mean;
    f["Bwd_IAT_Std"] = bi.stddev;
    f["bwd_iat_present"] = bi.present ? 1.0 : 0.0;

    const SeriesStats wi = series_stats(flow_iat);
    f["Flow_IAT_Min"] = wi.min;
    f["Flow_IAT_Max"] = wi.max;
    f["Flow_IAT_Mean"] = wi.mean;
    f["Flow_IAT_Std"] = wi.stddev;
    f["flow_iat_present"] = wi.present ? 1.0 : 0.0;

    return f;
}

std::map<std::string, double> markov_features(const BiFlow& flow, const FeatureSchema& schema) {
    std::map<std::string, double> f;

    auto matrices_for = [&](const std::vector<std::int64_t>& ts, const std::vector<double>& lens,
                            const std::string& size_prefix, const std::string& iat_prefix) {
        const auto size_states = discretize(lens, schema.bin_width, schema.n_states);
        emit_matrix(f, size_prefix, transition_matrix(size_states, schema.n_states),
                    schema.n_states);
        const std::vector<double> iat = iats_ms(ts);
        const auto iat_states = discretize(iat, schema.bin_width, schema.n_states);
        emit_matrix(f, iat_prefix, transition_matrix(iat_states, schema.n_states),
                    schema.n_states);
    };

    const auto merged = flow.merged_packets();
    std::vector<std::int64_t> ts;
    std::vector<double> lens;
    for (const PacketRecord* p : merged) {
        ts.push_back(p->ts_ns);
        lens.push_back(static_cast<double>(p->payload.size()));
    }
    matrices_for(ts, lens, "markov_size_", "markov_iat_");

    if (schema.per_direction_markov) {
        matrices_for(timestamps(flow.fwd_packets), payload_lengths(flow.fwd_packets),
                     "markov_fwd_size_", "markov_fwd_iat_");
        matrices_for(timestamps(flow.bwd_packets), payload_lengths(flow.bwd_packets),
                     "markov_bwd_size_", "markov_bwd_iat_");
    }
    return f;
}

std::map<std::string, double> one_hot_tls(const std::optional<TlsMetadata>& meta,
                                          const FeatureSchema& schema) {
    std::map<std::string, double> f;
    for (std::uint16_t c : schema.cipher_vocab) {
        f["cipher_off_" + hex4(c)] = 0.0;
        f["cipher_sel_" + hex4(c)] = 0.0;
    }
    f["cipher_off_other"] = 0.0;
    f["cipher_sel_other"] = 0.0;
    for (std::uint16_t e : schema.extension_vocab) f["tls_ext_" + std::to_string(e)] = 0.0;
    f["tls_ext_other"] = 0.0;
    for (std::uint16_t v : schema.version_vocab) f["tls_ver_" + hex4(v)] = 0.0;
    f["tls_ver_other"] = 0.0;
    f["tls_parsed"] = 0.0;
    if (!meta) return f;

    f["tls_parsed"] = 1.0;
    auto mark = [&](const std::string& prefix, std::uint16_t code,
                    const std::vector<std::uint16_t>& vocab) {
        if (is_grease(code)) return; // random by design, not a signal
        if (std::find(vocab.begin(), vocab.end(), code) != vocab.end())
            f[prefix + hex4(code)] = 1.0;
        else
            f[prefix + "other"] = 1.0;
    };

    for (std::uint16_t c : meta->offered_ciphers) mark("cipher_off_", c, schema.cipher_vocab);
    if (meta->selected_cipher) mark("cipher_sel_", *meta->selected_cipher, schema.cipher_vocab);

    for (std::uint16_t e : meta->client_extensions) {
        if (is_grease(e)) continue;
        if (std::find(schema.extension_vocab.begin(), schema.extension_vocab.end(), e) !=
            schema.extension_vocab.end())
            f["tls_ext_" + std::to_string(e)] = 1.0;
        else
            f["tls_ext_other"] = 1.0;
    }
    for (std::uint16_t e : meta->server_extensions) {
        if (is_grease(e)) continue;
        if (std::find(schema.extension_vocab.begin(), schema.extension_vocab.end(), e) !=
            schema.extension_vocab.end())
            f["tls_ext_" + std::to_string(e)] = 1.0;
        else
            f["tls_ext_other"] = 1.0;
    }

    const std::uint16_t ver = meta->version_used();
    if (ver != 0) mark("tls_ver_", ver, schema.version_vocab);
    return f;
}

std::map<std::string, double> cert_features(const std::optional<TlsMetadata>& meta) {
    std::map<std::string, double> f;
    const bool present = meta && meta->cert_valid_days.has_value();
    f["certValidDays"] = present ? static_cast<double>(*meta->cert_valid_days) : 0.0;
    f["cert_self_signed"] =
        present && meta->cert_self_signed.value_or(false) ? 1.0 : 0.0;
    f["cert_present"] = present ? 1.0 : 0.0;
    return f;
}

FeatureVector build_vector(const BiFlow& flow, const std::optional<TlsMetadata>& meta,
                           const FeatureSchema& schema) {
    std::map<std::string, double> all = stat_features(flow);
    all.merge(markov_features(flow, schema));
    all.merge(one_hot_tls(meta, schema));
    all.merge(cert_features(meta));

    for (const auto& [name, value] : all) {
        if (!schema.has(name))
            throw Error(Errc::schema_mismatch, "producer emitted unknown feature " + name);
        if (std::isnan(value))
            throw Error(Errc::schema_mismatch, "NaN produced for feature " + name);
    }

    FeatureVector vec;
    vec.schema_version = schema.schema_version;
    vec.flow_id = flow.id();
    vec.values.reserve(schema.dimension());
    for (const FeatureDef& def : schema.features) {
        auto it = all.find(def.name);
        if (it == all.end())
            throw Error(Errc::schema_mismatch, "no producer for schema feature " + def.name);
        vec.values.push_back(it->second);
    }
    return vec;
}

} // namespace flowlens

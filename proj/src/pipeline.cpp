#include "flowlens/pipeline.hpp"

#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "flowlens/common.hpp"
#include "flowlens/features.hpp"
#include "flowlens/tls.hpp"

namespace flowlens {

std::uint64_t fnv1a64(ByteView bytes) {
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    for (std::uint8_t b : bytes) {
        hash ^= b;
        hash *= 0x100000001b3ULL;
    }
    return hash;
}

std::string digest_hex(ByteView bytes) {
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(bytes)));
    return buf;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::io_error, "cannot open " + path.string());
    std::string out((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return out;
}

Bytes read_file_bytes(const std::filesystem::path& path) {
    const std::string s = read_file(path);
    return Bytes(s.begin(), s.end());
}

void atomic_write(const std::filesystem::path& path, const std::string& content) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(Errc::io_error, "cannot write " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw Error(Errc::io_error, "short write to " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

Dataset extract_capture(ByteView pcap_bytes, const FeatureSchema& schema,
                        std::optional<int> label, const std::string& id_prefix, ExtractLog& log,
                        bool want_flow_debug) {
    Dataset ds;
    ds.schema_version = schema.schema_version;
    for (const FeatureDef& f : schema.features) ds.feature_names.push_back(f.name);

    const std::vector<PacketRecord> packets = decode_capture(pcap_bytes, log.decode);
    const std::int64_t window_ns = schema.window_seconds * 1'000'000'000;
    const std::vector<BiFlow> flows = build_filtered_flows(packets, log.flows, window_ns);

    for (const BiFlow& flow : flows) {
        if (want_flow_debug) log.flow_debug.push_back(flow_debug_json(flow));
        const std::optional<TlsMetadata> meta = extract_tls_metadata(flow);
        FeatureVector vec = build_vector(flow, meta, schema);
        vec.label = label;
        vec.flow_id = id_prefix + vec.flow_id;
        ds.rows.push_back(std::move(vec));
    }
    return ds;
}

std::string extract_log_to_json(const ExtractLog& log) {
    nlohmann::ordered_json j;
    j["decode"] = {{"frames", log.decode.frames},
                   {"tcp_packets", log.decode.tcp_packets},
                   {"skipped", log.decode.skipped},
                   {"malformed", log.decode.malformed},
                   {"fragments_dropped", log.decode.fragments_dropped},
                   {"truncated_tail", log.decode.truncated_tail}};
    j["flows"] = {{"input_packets", log.flows.input_packets},
                  {"assembled", log.flows.flows_assembled},
                  {"kept", log.flows.flows_kept},
                  {"discarded_handshake", log.flows.flows_discarded_handshake},
                  {"discarded_unencrypted", log.flows.flows_discarded_unencrypted},
                  {"packets_discarded", log.flows.packets_discarded}};
    return j.dump(2);
}

} // namespace flowlens

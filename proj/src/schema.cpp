#include "flowlens/schema.hpp"

#include <cstdio>

#include <json.hpp>

#include "flowlens/common.hpp"

namespace flowlens {

using nlohmann::json;
using nlohmann::ordered_json;

std::string hex4(std::uint16_t v) {
    char buf[8];
    std::snprintf(buf, sizeof(buf), "%04x", v);
    return buf;
}

namespace {

std::uint16_t parse_hex4(const std::string& s) {
    return static_cast<std::uint16_t>(std::stoul(s, nullptr, 16));
}

// The 30 most common suites across TLS 1.0-1.3. The paper's own vocabulary
// is unpublished; this list is configurable through the schema file.
const std::vector<std::uint16_t> kDefaultCipherVocab = {
    0x1301, 0x1302, 0x1303,                                 // TLS 1.3
    0xc02b, 0xc02c, 0xc02f, 0xc030,                         // ECDHE AES-GCM
    0xcca8, 0xcca9,                                         // ECDHE CHACHA20
    0xc009, 0xc00a, 0xc013, 0xc014, 0xc023, 0xc024, 0xc027, 0xc028, // ECDHE AES-CBC
    0x0033, 0x0039, 0x0067, 0x006b, 0x009e, 0x009f,         // DHE
    0x002f, 0x0035, 0x003c, 0x003d, 0x009c, 0x009d,         // RSA key exchange
    0x000a,                                                 // 3DES
};

const std::vector<std::uint16_t> kDefaultExtensionVocab = {
    0,     // server_name
    5,     // status_request
    10,    // supported_groups
    11,    // ec_point_formats
    13,    // signature_algorithms
    16,    // alpn
    18,    // signed_certificate_timestamp
    21,    // padding
    22,    // encrypt_then_mac
    23,    // extended_master_secret
    27,    // compress_certificate
    35,    // session_ticket
    43,    // supported_versions
    45,    // psk_key_exchange_modes
    51,    // key_share
    65281, // renegotiation_info
};

const std::vector<std::uint16_t> kDefaultVersionVocab = {0x0301, 0x0302, 0x0303, 0x0304};

} // namespace

void FeatureSchema::rebuild() {
    features.clear();
    index_.clear();
    auto add = [this](std::string name, const char* group, bool binary = false) {
        features.push_back({std::move(name), group, binary});
    };

    // meta
    add("bytes_in", "meta");
    add("bytes_out", "meta");
    add("num_pkts_in", "meta");
    add("num_pkts_out", "meta");
    add("duration_ms", "meta");
    add("Init_Bwd_Win_Bytes", "meta");
    add("bwd_present", "meta", true);

    // length (payload bytes)
    add("Fwd_Pkt_Len_Min", "length");
    add("Fwd_Pkt_Len_Max", "length");
    add("Fwd_Pkt_Len_Mean", "length");
    add("Fwd_Pkt_Len_Std", "length");
    add("Bwd_Pkt_Len_Min", "length");
    add("Max_Bpckt", "length");
    add("Bwd_Pkt_Len_Mean", "length");
    add("Bwd_Pkt_Len_Std", "length");
    add("Pkt_Len_Min", "length");
    add("Pkt_Len_Max", "length");
    add("Pkt_Len_Mean", "length");
    add("Pkt_Len_Std", "length");

    // time (milliseconds)
    add("Fwd_IAT_Min", "time");
    add("Fwd_IAT_Max", "time");
    add("Mean_f_inter", "time");
    add("Fwd_IAT_Std", "time");
    add("fwd_iat_present", "time", true);
    add("Bwd_IAT_Min", "time");
    add("Bwd_IAT_Max", "time");
    add("Bwd_IAT_Mean", "time");
    add("Bwd_IAT_Std", "time");
    add("bwd_iat_present", "time", true);
    add("Flow_IAT_Min", "time");
    add("Flow_IAT_Max", "time");
    add("Flow_IAT_Mean", "time");
    add("Flow_IAT_Std", "time");
    add("flow_iat_present", "time", true);

    // markov: size matrix row-major, then IAT matrix
    auto add_matrix = [&](const std::string& prefix) {
        for (int i = 0; i < n_states; ++i)
            for (int j = 0; j < n_states; ++j)
                add(prefix + std::to_string(i) + std::to_string(j), "markov");
    };
    add_matrix("markov_size_");
    add_matrix("markov_iat_");
    if (per_direction_markov) {
        add_matrix("markov_fwd_size_");
        add_matrix("markov_fwd_iat_");
        add_matrix("markov_bwd_size_");
        add_matrix("markov_bwd_iat_");
    }

    // tls one-hots
    for (std::uint16_t c : cipher_vocab) add("cipher_off_" + hex4(c), "tls", true);
    add("cipher_off_other", "tls", true);
    for (std::uint16_t c : cipher_vocab) add("cipher_sel_" + hex4(c), "tls", true);
    add("cipher_sel_other", "tls", true);
    for (std::uint16_t e : extension_vocab) add("tls_ext_" + std::to_string(e), "tls", true);
    add("tls_ext_other", "tls", true);
    for (std::uint16_t v : version_vocab) add("tls_ver_" + hex4(v), "tls", true);
    add("tls_ver_other", "tls", true);
    add("tls_parsed", "tls", true);

    // cert
    add("certValidDays", "cert");
    add("cert_self_signed", "cert", true);
    add("cert_present", "cert", true);

    for (std::size_t i = 0; i < features.size(); ++i) {
        if (!index_.emplace(features[i].name, i).second)
            throw Error(Errc::schema_mismatch, "duplicate feature name " + features[i].name);
    }
}

FeatureSchema FeatureSchema::default_schema() {
    FeatureSchema s;
    s.cipher_vocab = kDefaultCipherVocab;
    s.extension_vocab = kDefaultExtensionVocab;
    s.version_vocab = kDefaultVersionVocab;
    s.rebuild();
    return s;
}

std::size_t FeatureSchema::index_of(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end())
        throw Error(Errc::schema_mismatch, "feature not in schema: " + name);
    return it->second;
}

FeatureSchema FeatureSchema::from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw Error(Errc::bad_config, std::string("schema file is not valid JSON: ") + e.what());
    }

    FeatureSchema s = default_schema();
    if (j.contains("schema_version")) s.schema_version = j["schema_version"].get<std::string>();
    if (j.contains("bin_width")) s.bin_width = j["bin_width"].get<double>();
    if (j.contains("n_states")) s.n_states = j["n_states"].get<int>();
    if (j.contains("window_seconds")) s.window_seconds = j["window_seconds"].get<std::int64_t>();
    if (j.contains("per_direction_markov"))
        s.per_direction_markov = j["per_direction_markov"].get<bool>();
    if (s.bin_width <= 0 || s.n_states < 1)
        throw Error(Errc::bad_config, "schema needs bin_width > 0 and n_states >= 1");

    auto load_vocab = [&](const char* key, std::vector<std::uint16_t>& out, bool hex) {
        if (!j.contains(key)) return;
        out.clear();
        for (const auto& item : j[key]) {
            if (item.is_string())
                out.push_back(parse_hex4(item.get<std::string>()));
            else
                out.push_back(hex ? static_cast<std::uint16_t>(item.get<unsigned>())
                                  : static_cast<std::uint16_t>(item.get<unsigned>()));
        }
    };
    load_vocab("cipher_vocab", s.cipher_vocab, true);
    load_vocab("extension_vocab", s.extension_vocab, false);
    load_vocab("version_vocab", s.version_vocab, true);

    s.rebuild();

    // A features list in the file is documentation; cross-check it.
    if (j.contains("features")) {
        const auto& listed = j["features"];
        if (listed.size() != s.features.size())
            throw Error(Errc::schema_mismatch,
                        "schema file lists " + std::to_string(listed.size()) +
                            " features but settings derive " + std::to_string(s.features.size()));
        for (std::size_t i = 0; i < s.features.size(); ++i) {
            const std::string name = listed[i].is_object()
                                         ? listed[i]["name"].get<std::string>()
                                         : listed[i].get<std::string>();
            if (name != s.features[i].name)
                throw Error(Errc::schema_mismatch, "schema feature order mismatch at index " +
                                                       std::to_string(i) + ": " + name);
        }
    }
    return s;
}

std::string FeatureSchema::to_json_text() const {
    ordered_json j;
    j["schema_version"] = schema_version;
    j["bin_width"] = bin_width;
    j["n_states"] = n_states;
    j["window_seconds"] = window_seconds;
    j["per_direction_markov"] = per_direction_markov;
    auto hex_list = [](const std::vector<std::uint16_t>& v) {
        std::vector<std::string> out;
        out.reserve(v.size());
        for (std::uint16_t x : v) out.push_back(hex4(x));
        return out;
    };
    j["cipher_vocab"] = hex_list(cipher_vocab);
    j["extension_vocab"] = extension_vocab;
    j["version_vocab"] = hex_list(version_vocab);
    j["features"] = ordered_json::array();
    for (const FeatureDef& f : features)
        j["features"].push_back(
            ordered_json{{"name", f.name}, {"group", f.group}, {"binary", f.binary}});
    return j.dump(2) + "\n";
}

} // namespace flowlens

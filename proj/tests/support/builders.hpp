#pragma once

// Byte-level constructors for test fixtures: classic pcap files,
// Ethernet/IPv4/IPv6/TCP frames, TLS records and handshake messages, and
// minimal DER certificates. Everything here is written directly from the
// wire-format definitions and stays independent of the parsers under test.

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace testbytes {

using Bytes = std::vector<std::uint8_t>;

inline void put8(Bytes& b, std::uint8_t v) { b.push_back(v); }
inline void put16be(Bytes& b, std::uint16_t v) {
    b.push_back(static_cast<std::uint8_t>(v >> 8));
    b.push_back(static_cast<std::uint8_t>(v));
}
inline void put24be(Bytes& b, std::uint32_t v) {
    b.push_back(static_cast<std::uint8_t>(v >> 16));
    b.push_back(static_cast<std::uint8_t>(v >> 8));
    b.push_back(static_cast<std::uint8_t>(v));
}
inline void put32be(Bytes& b, std::uint32_t v) {
    b.push_back(static_cast<std::uint8_t>(v >> 24));
    b.push_back(static_cast<std::uint8_t>(v >> 16));
    b.push_back(static_cast<std::uint8_t>(v >> 8));
    b.push_back(static_cast<std::uint8_t>(v));
}
inline void put16le(Bytes& b, std::uint16_t v) {
    b.push_back(static_cast<std::uint8_t>(v));
    b.push_back(static_cast<std::uint8_t>(v >> 8));
}
inline void put32le(Bytes& b, std::uint32_t v) {
    b.push_back(static_cast<std::uint8_t>(v));
    b.push_back(static_cast<std::uint8_t>(v >> 8));
    b.push_back(static_cast<std::uint8_t>(v >> 16));
    b.push_back(static_cast<std::uint8_t>(v >> 24));
}
inline void append(Bytes& b, const Bytes& other) { b.insert(b.end(), other.begin(), other.end()); }

// --- pcap ---------------------------------------------------------------------

class PcapWriter {
public:
    explicit PcapWriter(bool big_endian = false, bool nanosecond = false,
                        std::uint32_t linktype = 1)
        : big_endian_(big_endian) {
        const std::uint32_t magic = nanosecond ? 0xa1b23c4d : 0xa1b2c3d4;
        put32(magic);
        put16(2);
        put16(4);
        put32(0); // thiszone
        put32(0); // sigfigs
        put32(65535);
        put32(linktype);
    }

    void add_record(std::uint32_t ts_sec, std::uint32_t ts_subsec, const Bytes& frame,
                    std::int64_t orig_len = -1) {
        put32(ts_sec);
        put32(ts_subsec);
        put32(static_cast<std::uint32_t>(frame.size()));
        put32(orig_len < 0 ? static_cast<std::uint32_t>(frame.size())
                           : static_cast<std::uint32_t>(orig_len));
        append(bytes_, frame);
    }

    void add_raw(const Bytes& raw) { append(bytes_, raw); }

    const Bytes& bytes() const { return bytes_; }

private:
    void put16(std::uint16_t v) { big_endian_ ? put16be(bytes_, v) : put16le(bytes_, v); }
    void put32(std::uint32_t v) { big_endian_ ? put32be(bytes_, v) : put32le(bytes_, v); }
    bool big_endian_;
    Bytes bytes_;
};

// --- frames -------------------------------------------------------------------

struct FrameSpec {
    std::array<std::uint8_t, 4> src_ip{10, 0, 0, 1};
    std::array<std::uint8_t, 4> dst_ip{10, 0, 0, 2};
    std::uint16_t sport = 40000;
    std::uint16_t dport = 443;
    std::uint8_t flags = 0x10; // ACK
    std::uint32_t seq = 0;
    std::uint32_t ack = 0;
    std::uint16_t window = 65535;
    Bytes payload;
    int vlan_tags = 0;
    int ipv4_option_words = 0; // extra 32-bit words in the IPv4 header
    std::uint16_t frag_offset_words = 0;
    std::uint8_t ip_proto = 6;
    int tcp_data_offset_words = 5;
};

inline Bytes ipv4_packet(const FrameSpec& s) {
    Bytes ip;
    const int ihl = 5 + s.ipv4_option_words;
    put8(ip, static_cast<std::uint8_t>(0x40 | ihl));
    put8(ip, 0);
    const std::size_t tcp_len = static_cast<std::size_t>(s.tcp_data_offset_words) * 4 +
                                s.payload.size();
    put16be(ip, static_cast<std::uint16_t>(ihl * 4 + tcp_len));
    put16be(ip, 0x1234); // id
    put16be(ip, s.frag_offset_words & 0x1fff);
    put8(ip, 64);
    put8(ip, s.ip_proto);
    put16be(ip, 0); // checksum not validated by the reader
    for (std::uint8_t b : s.src_ip) put8(ip, b);
    for (std::uint8_t b : s.dst_ip) put8(ip, b);
    for (int i = 0; i < s.ipv4_option_words * 4; ++i) put8(ip, 0x01); // NOP options

    put16be(ip, s.sport);
    put16be(ip, s.dport);
    put32be(ip, s.seq);
    put32be(ip, s.ack);
    put8(ip, static_cast<std::uint8_t>(s.tcp_data_offset_words << 4));
    put8(ip, s.flags);
    put16be(ip, s.window);
    put16be(ip, 0);
    put16be(ip, 0);
    for (int i = 0; i < (s.tcp_data_offset_words - 5) * 4; ++i) put8(ip, 0x00);
    append(ip, s.payload);
    return ip;
}

inline Bytes eth_frame(const FrameSpec& s, std::uint16_t ethertype = 0x0800) {
    Bytes f;
    for (int i = 0; i < 6; ++i) put8(f, 0x02);
    for (int i = 0; i < 6; ++i) put8(f, 0x04);
    for (int i = 0; i < s.vlan_tags; ++i) {
        put16be(f, 0x8100);
        put16be(f, 0x0064); // VID 100
    }
    put16be(f, ethertype);
    if (ethertype == 0x0800) append(f, ipv4_packet(s));
    return f;
}

// IPv6 + optional extension headers, then TCP.
inline Bytes eth_frame_v6(const FrameSpec& s, const std::vector<std::uint8_t>& ext_chain = {},
                          std::uint16_t frag_offset_words = 0) {
    Bytes tcp;
    put16be(tcp, s.sport);
    put16be(tcp, s.dport);
    put32be(tcp, s.seq);
    put32be(tcp, s.ack);
    put8(tcp, 0x50);
    put8(tcp, s.flags);
    put16be(tcp, s.window);
    put16be(tcp, 0);
    put16be(tcp, 0);
    append(tcp, s.payload);

    Bytes exts;
    for (std::size_t i = 0; i < ext_chain.size(); ++i) {
        const std::uint8_t next = i + 1 < ext_chain.size() ? ext_chain[i + 1] : 6;
        if (ext_chain[i] == 44) {
            put8(exts, next);
            put8(exts, 0);
            put16be(exts, static_cast<std::uint16_t>(frag_offset_words << 3));
            put32be(exts, 0xabcd0001);
        } else {
            put8(exts, next);
            put8(exts, 0); // 8 bytes total
            for (int j = 0; j < 6; ++j) put8(exts, 0);
        }
    }

    Bytes f;
    for (int i = 0; i < 6; ++i) put8(f, 0x02);
    for (int i = 0; i < 6; ++i) put8(f, 0x04);
    put16be(f, 0x86dd);
    put8(f, 0x60);
    put8(f, 0);
    put16be(f, 0);
    put16be(f, static_cast<std::uint16_t>(exts.size() + tcp.size()));
    put8(f, ext_chain.empty() ? 6 : ext_chain[0]);
    put8(f, 64);
    for (int i = 0; i < 16; ++i) put8(f, i == 15 ? 0x01 : 0x20); // src
    for (int i = 0; i < 16; ++i) put8(f, i == 15 ? 0x02 : 0x20); // dst
    append(f, exts);
    append(f, tcp);
    return f;
}

// --- TLS ----------------------------------------------------------------------

inline Bytes tls_record(std::uint8_t content_type, std::uint16_t version, const Bytes& fragment) {
    Bytes r;
    put8(r, content_type);
    put16be(r, version);
    put16be(r, static_cast<std::uint16_t>(fragment.size()));
    append(r, fragment);
    return r;
}

inline Bytes hs_msg(std::uint8_t msg_type, const Bytes& body) {
    Bytes m;
    put8(m, msg_type);
    put24be(m, static_cast<std::uint32_t>(body.size()));
    append(m, body);
    return m;
}

using Extension = std::pair<std::uint16_t, Bytes>;

inline Bytes sni_extension_body(const std::string& host) {
    Bytes b;
    put16be(b, static_cast<std::uint16_t>(host.size() + 3));
    put8(b, 0);
    put16be(b, static_cast<std::uint16_t>(host.size()));
    for (char c : host) put8(b, static_cast<std::uint8_t>(c));
    return b;
}

inline Bytes supported_versions_client(const std::vector<std::uint16_t>& versions) {
    Bytes b;
    put8(b, static_cast<std::uint8_t>(versions.size() * 2));
    for (std::uint16_t v : versions) put16be(b, v);
    return b;
}

inline Bytes supported_versions_server(std::uint16_t version) {
    Bytes b;
    put16be(b, version);
    return b;
}

inline Bytes client_hello_body(std::uint16_t legacy_version,
                               const std::vector<std::uint16_t>& ciphers,
                               const std::vector<Extension>& extensions,
                               bool include_extensions_block = true) {
    Bytes b;
    put16be(b, legacy_version);
    for (int i = 0; i < 32; ++i) put8(b, static_cast<std::uint8_t>(i)); // random
    put8(b, 0);                                                          // empty session id
    put16be(b, static_cast<std::uint16_t>(ciphers.size() * 2));
    for (std::uint16_t c : ciphers) put16be(b, c);
    put8(b, 1);
    put8(b, 0); // null compression
    if (include_extensions_block) {
        Bytes exts;
        for (const auto& [type, data] : extensions) {
            put16be(exts, type);
            put16be(exts, static_cast<std::uint16_t>(data.size()));
            append(exts, data);
        }
        put16be(b, static_cast<std::uint16_t>(exts.size()));
        append(b, exts);
    }
    return b;
}

inline Bytes server_hello_body(std::uint16_t legacy_version, std::uint16_t cipher,
                               const std::vector<Extension>& extensions,
                               bool include_extensions_block = true) {
    Bytes b;
    put16be(b, legacy_version);
    for (int i = 0; i < 32; ++i) put8(b, static_cast<std::uint8_t>(0x40 + i));
    put8(b, 0);
    put16be(b, cipher);
    put8(b, 0); // compression
    if (include_extensions_block) {
        Bytes exts;
        for (const auto& [type, data] : extensions) {
            put16be(exts, type);
            put16be(exts, static_cast<std::uint16_t>(data.size()));
            append(exts, data);
        }
        put16be(b, static_cast<std::uint16_t>(exts.size()));
        append(b, exts);
    }
    return b;
}

inline Bytes certificate_body(const std::vector<Bytes>& certs) {
    Bytes list;
    for (const Bytes& c : certs) {
        put24be(list, static_cast<std::uint32_t>(c.size()));
        append(list, c);
    }
    Bytes b;
    put24be(b, static_cast<std::uint32_t>(list.size()));
    append(b, list);
    return b;
}

// --- DER ------------------------------------------------------------------------

inline Bytes der(std::uint8_t tag, const Bytes& content) {
    Bytes b;
    put8(b, tag);
    const std::size_t n = content.size();
    if (n < 128) {
        put8(b, static_cast<std::uint8_t>(n));
    } else if (n < 256) {
        put8(b, 0x81);
        put8(b, static_cast<std::uint8_t>(n));
    } else {
        put8(b, 0x82);
        put16be(b, static_cast<std::uint16_t>(n));
    }
    append(b, content);
    return b;
}

inline Bytes der_time(const std::string& text, bool generalized) {
    Bytes content(text.begin(), text.end());
    return der(generalized ? 0x18 : 0x17, content);
}

inline Bytes der_name(const std::string& common_name) {
    // Name treated as an opaque SEQUENCE by the validity walker.
    Bytes cn(common_name.begin(), common_name.end());
    return der(0x30, der(0x13, cn));
}

// Minimal certificate exercising exactly the fields the validity walker
// reads: version, serial, sigalg, issuer, validity, subject (+ a stub key).
inline Bytes test_certificate(const std::string& not_before, const std::string& not_after,
                              bool generalized, const std::string& issuer_cn,
                              const std::string& subject_cn, bool include_version = true) {
    Bytes tbs_content;
    if (include_version) append(tbs_content, der(0xa0, der(0x02, {0x02})));
    append(tbs_content, der(0x02, {0x01}));              // serialNumber
    append(tbs_content, der(0x30, der(0x06, {0x2a})));   // AlgorithmIdentifier stub
    append(tbs_content, der_name(issuer_cn));
    Bytes validity;
    append(validity, der_time(not_before, generalized));
    append(validity, der_time(not_after, generalized));
    append(tbs_content, der(0x30, validity));
    append(tbs_content, der_name(subject_cn));
    append(tbs_content, der(0x30, der(0x06, {0x2b}))); // subjectPublicKeyInfo stub

    Bytes cert_content;
    append(cert_content, der(0x30, tbs_content));
    append(cert_content, der(0x30, der(0x06, {0x2a})));
    append(cert_content, der(0x03, {0x00, 0x5a}));
    return der(0x30, cert_content);
}

} // namespace testbytes

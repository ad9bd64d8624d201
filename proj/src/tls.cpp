#include "flowlens/tls.hpp"

#include <algorithm>

#include "flowlens/common.hpp"
#include "flowlens/der.hpp"

namespace flowlens {

namespace {

[[noreturn]] void bad_hello(const char* what) { throw Error(Errc::malformed_hello, what); }

bool known_version(std::uint16_t v) { return v >= 0x0300 && v <= 0x0304; }

// Extension block shared by ClientHello and ServerHello.
void parse_extensions(ByteReader& r, std::vector<std::uint16_t>& out,
                      TlsMetadata& meta, bool client) {
    std::uint16_t block_len = 0;
    if (!r.take_be16(block_len)) bad_hello("extensions length missing");
    ByteView block;
    if (!r.take_view(block_len, block)) bad_hello("extensions block overruns hello");

    ByteReader er(block);
    while (!er.empty()) {
        std::uint16_t ext_type = 0, ext_len = 0;
        ByteView ext;
        if (!er.take_be16(ext_type) || !er.take_be16(ext_len) || !er.take_view(ext_len, ext))
            bad_hello("extension header overruns block");
        out.push_back(ext_type);

        if (ext_type == 0 && client && !meta.sni) {
            // server_name: list length, entry type 0, name length, name.
            ByteReader sr(ext);
            std::uint16_t list_len = 0;
            std::uint8_t name_type = 0;
            std::uint16_t name_len = 0;
            ByteView name;
            if (sr.take_be16(list_len) && sr.take_u8(name_type) && name_type == 0 &&
                sr.take_be16(name_len) && sr.take_view(name_len, name))
                meta.sni = std::string(name.begin(), name.end());
        } else if (ext_type == 43) {
            if (client) {
                // list of versions; the highest non-GREASE one is the
                // effective offer.
                ByteReader sr(ext);
                std::uint8_t list_len = 0;
                if (!sr.take_u8(list_len)) continue;
                std::uint16_t best = 0;
                for (int i = 0; i + 2 <= list_len; i += 2) {
                    std::uint16_t v = 0;
                    if (!sr.take_be16(v)) break;
                    if (!is_grease(v) && v > best) best = v;
                }
                if (best != 0) meta.client_version = best;
            } else if (ext.size() >= 2) {
                meta.server_version = be16(ext.data());
            }
        }
    }
}

} // namespace

RecordParse parse_records(ByteView stream) {
    RecordParse out;
    std::size_t pos = 0;
    while (pos < stream.size()) {
        if (stream.size() - pos < 5) {
            out.truncated = true;
            break;
        }
        const std::uint8_t content_type = stream[pos];
        const std::uint16_t version = be16(stream.data() + pos + 1);
        const std::uint16_t len = be16(stream.data() + pos + 3);
        if (content_type < 20 || content_type > 24 || (version >> 8) != 3) {
            out.truncated = true;
            break;
        }
        if (stream.size() - pos - 5 < len) {
            out.truncated = true;
            break;
        }
        TlsRecord rec;
        rec.content_type = content_type;
        rec.version = version;
        rec.fragment.assign(stream.begin() + static_cast<std::ptrdiff_t>(pos + 5),
                            stream.begin() + static_cast<std::ptrdiff_t>(pos + 5 + len));
        out.records.push_back(std::move(rec));
        pos += 5 + len;
    }
    return out;
}

std::vector<HandshakeMessage> handshake_messages(const std::vector<TlsRecord>& records) {
    Bytes stream;
    for (const TlsRecord& rec : records) {
        if (rec.content_type == 20) break; // ChangeCipherSpec: ciphertext follows
        if (rec.content_type == 22)
            stream.insert(stream.end(), rec.fragment.begin(), rec.fragment.end());
    }

    std::vector<HandshakeMessage> out;
    std::size_t pos = 0;
    while (stream.size() - pos >= 4) {
        const std::uint8_t msg_type = stream[pos];
        const std::uint32_t len = be24(stream.data() + pos + 1);
        if (stream.size() - pos - 4 < len) break; // spans missing data
        HandshakeMessage msg;
        msg.msg_type = msg_type;
        msg.body.assign(stream.begin() + static_cast<std::ptrdiff_t>(pos + 4),
                        stream.begin() + static_cast<std::ptrdiff_t>(pos + 4 + len));
        out.push_back(std::move(msg));
        pos += 4 + len;
    }
    return out;
}

void parse_client_hello(ByteView body, TlsMetadata& meta) {
    ByteReader r(body);
    std::uint16_t legacy = 0;
    if (!r.take_be16(legacy)) bad_hello("client hello shorter than version");
    if (!r.skip(32)) bad_hello("client hello shorter than random");

    std::uint8_t sid_len = 0;
    if (!r.take_u8(sid_len) || !r.skip(sid_len)) bad_hello("session id overruns hello");

    std::uint16_t cipher_bytes = 0;
    ByteView ciphers;
    if (!r.take_be16(cipher_bytes) || (cipher_bytes % 2) != 0 ||
        !r.take_view(cipher_bytes, ciphers))
        bad_hello("cipher suite list malformed");

    std::uint8_t comp_len = 0;
    if (!r.take_u8(comp_len) || !r.skip(comp_len)) bad_hello("compression list overruns hello");

    meta.legacy_client_version = legacy;
    meta.client_version = legacy;
    meta.offered_ciphers.clear();
    for (std::size_t i = 0; i + 2 <= ciphers.size(); i += 2)
        meta.offered_ciphers.push_back(be16(ciphers.data() + i));

    meta.client_extensions.clear();
    if (!r.empty()) parse_extensions(r, meta.client_extensions, meta, /*client=*/true);

    if (!known_version(meta.client_version)) meta.unusual_version = true;
    meta.client_parsed = true;
}

void parse_server_hello(ByteView body, TlsMetadata& meta) {
    ByteReader r(body);
    std::uint16_t legacy = 0;
    if (!r.take_be16(legacy)) bad_hello("server hello shorter than version");
    if (!r.skip(32)) bad_hello("server hello shorter than random");

    std::uint8_t sid_len = 0;
    if (!r.take_u8(sid_len) || !r.skip(sid_len)) bad_hello("session id overruns hello");

    std::uint16_t cipher = 0;
    if (!r.take_be16(cipher)) bad_hello("server hello missing cipher");
    if (!r.skip(1)) bad_hello("server hello missing compression");

    meta.server_version = legacy;
    meta.selected_cipher = cipher;
    meta.server_extensions.clear();
    if (!r.empty()) parse_extensions(r, meta.server_extensions, meta, /*client=*/false);

    if (!known_version(meta.server_version)) meta.unusual_version = true;
    meta.server_parsed = true;
}

void parse_certificate_message(ByteView body, TlsMetadata& meta) {
    ByteReader r(body);
    std::uint32_t list_len = 0;
    if (!r.take_be24(list_len)) return;
    ByteView list;
    if (!r.take_view(list_len, list)) return;

    // Leaf certificate only (the first of the chain).
    ByteReader lr(list);
    std::uint32_t cert_len = 0;
    ByteView cert;
    if (!lr.take_be24(cert_len) || !lr.take_view(cert_len, cert)) return;
    try {
        CertValidity v = cert_validity_days(cert);
        meta.cert_valid_days = v.valid_days;
        meta.cert_self_signed = v.self_signed;
    } catch (const Error&) {
        // MalformedDer: validity stays absent.
    }
}

void parse_server_side(const std::vector<HandshakeMessage>& messages, TlsMetadata& meta) {
    for (const HandshakeMessage& msg : messages) {
        if (msg.msg_type == 2 && !meta.server_parsed) {
            parse_server_hello(msg.body, meta);
        } else if (msg.msg_type == 11 && !meta.cert_valid_days) {
            parse_certificate_message(msg.body, meta);
        }
    }
}

Bytes reassemble_direction(const std::vector<PacketRecord>& packets) {
    struct Segment {
        std::uint32_t seq;
        const Bytes* payload;
        std::uint64_t order;
    };
    std::vector<Segment> segments;
    for (const PacketRecord& p : packets)
        if (!p.payload.empty()) segments.push_back({p.tcp_seq, &p.payload, p.capture_index});
    if (segments.empty()) return {};

    // Earliest arrival anchors relative sequence space (wrap-safe).
    const std::uint32_t base =
        std::min_element(segments.begin(), segments.end(),
                         [](const Segment& a, const Segment& b) { return a.order < b.order; })
            ->seq;
    auto rel = [base](std::uint32_t seq) {
        return static_cast<std::int64_t>(static_cast<std::int32_t>(seq - base));
    };
    std::stable_sort(segments.begin(), segments.end(), [&](const Segment& a, const Segment& b) {
        if (rel(a.seq) != rel(b.seq)) return rel(a.seq) < rel(b.seq);
        return a.order < b.order;
    });

    Bytes out;
    std::int64_t expected = rel(segments.front().seq);
    for (const Segment& seg : segments) {
        const std::int64_t start = rel(seg.seq);
        const auto len = static_cast<std::int64_t>(seg.payload->size());
        if (start > expected) break; // gap: handshakes live early, stop here
        const std::int64_t skip = expected - start;
        if (skip >= len) continue; // fully duplicate, first wins
        out.insert(out.end(), seg.payload->begin() + skip, seg.payload->end());
        expected += len - skip;
    }
    return out;
}

std::optional<TlsMetadata> extract_tls_metadata(const BiFlow& flow) {
    TlsMetadata meta;

    const Bytes fwd_stream = reassemble_direction(flow.fwd_packets);
    const auto fwd_msgs = handshake_messages(parse_records(fwd_stream).records);
    for (const HandshakeMessage& msg : fwd_msgs) {
        if (msg.msg_type == 1) {
            try {
                parse_client_hello(msg.body, meta);
            } catch (const Error&) {
                meta.client_parsed = false;
            }
            break;
        }
    }

    const Bytes bwd_stream = reassemble_direction(flow.bwd_packets);
    const auto bwd_msgs = handshake_messages(parse_records(bwd_stream).records);
    try {
        parse_server_side(bwd_msgs, meta);
    } catch (const Error&) {
        meta.server_parsed = false;
    }

    if (!meta.client_parsed && !meta.server_parsed) return std::nullopt;
    return meta;
}

} // namespace flowlens

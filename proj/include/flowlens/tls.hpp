#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "flowlens/bytes.hpp"
#include "flowlens/flow.hpp"

namespace flowlens {

// Handshake observables of one flow, read without any decryption.
struct TlsMetadata {
    std::uint16_t client_version = 0; // effective: supported_versions overrides legacy
    std::uint16_t legacy_client_version = 0;
    std::uint16_t server_version = 0;
    std::vector<std::uint16_t> offered_ciphers; // wire order, GREASE retained
    std::optional<std::uint16_t> selected_cipher;
    std::vector<std::uint16_t> client_extensions;
    std::vector<std::uint16_t> server_extensions;
    std::optional<std::string> sni;
    std::optional<std::int64_t> cert_valid_days;
    std::optional<bool> cert_self_signed;
    bool client_parsed = false;
    bool server_parsed = false;
    bool unusual_version = false; // version outside 0x0300..0x0304, kept verbatim

    // Negotiated protocol version as observable on the wire: the server's
    // choice when present, otherwise the client's effective offer.
    std::uint16_t version_used() const {
        return server_version != 0 ? server_version : client_version;
    }
};

struct TlsRecord {
    std::uint8_t content_type = 0;
    std::uint16_t version = 0;
    Bytes fragment;
};

struct RecordParse {
    std::vector<TlsRecord> records;
    bool truncated = false; // stopped before consuming all input
};

// Splits a reassembled direction into TLS records. Partial parse is the
// contract: stops at the first undecodable position and flags truncation.
RecordParse parse_records(ByteView stream_bytes);

// RFC 8701 reserved values (0x0a0a, 0x1a1a, ... 0xfafa).
inline bool is_grease(std::uint16_t code) {
    return (code & 0x0f0f) == 0x0a0a && (code >> 8) == (code & 0xff);
}

// Handshake body parsers. Throw Error{malformed_hello} on inconsistent
// length fields; callers mark the metadata unparsed and keep going.
void parse_client_hello(ByteView body, TlsMetadata& meta);
void parse_server_hello(ByteView body, TlsMetadata& meta);
void parse_certificate_message(ByteView body, TlsMetadata& meta);

struct HandshakeMessage {
    std::uint8_t msg_type = 0;
    Bytes body;
};

// Concatenates handshake fragments (content type 22) up to the first
// ChangeCipherSpec and splits them into messages. Trailing partial or
// undecodable bytes end the scan.
std::vector<HandshakeMessage> handshake_messages(const std::vector<TlsRecord>& records);

// Fills server_version / selected_cipher / server_extensions from the
// ServerHello and certificate fields from the leaf of the first
// Certificate message.
void parse_server_side(const std::vector<HandshakeMessage>& messages, TlsMetadata& meta);

// Payloads ordered by TCP sequence number; duplicates dropped (first wins),
// gaps terminate the stream.
Bytes reassemble_direction(const std::vector<PacketRecord>& packets);

// Full per-flow extraction: reassemble both directions, parse records and
// hellos. nullopt when no handshake message was recognized at all.
std::optional<TlsMetadata> extract_tls_metadata(const BiFlow& flow);

} // namespace flowlens

#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "flowlens/bytes.hpp"

namespace flowlens {

// TCP flag bits as they appear in the TCP header flags byte.
namespace tcpflag {
inline constexpr std::uint8_t fin = 0x01;
inline constexpr std::uint8_t syn = 0x02;
inline constexpr std::uint8_t rst = 0x04;
inline constexpr std::uint8_t psh = 0x08;
inline constexpr std::uint8_t ack = 0x10;
inline constexpr std::uint8_t urg = 0x20;
} // namespace tcpflag

struct IpAddr {
    std::array<std::uint8_t, 16> bytes{}; // v4 stored in bytes[0..3], rest zero
    bool v6 = false;

    static IpAddr v4(std::uint8_t a, std::uint8_t b, std::uint8_t c, std::uint8_t d) {
        IpAddr ip;
        ip.bytes[0] = a;
        ip.bytes[1] = b;
        ip.bytes[2] = c;
        ip.bytes[3] = d;
        return ip;
    }

    auto operator<=>(const IpAddr&) const = default;
    std::string to_string() const;
};

// One decoded TCP segment. Timestamps are nanoseconds since the epoch so
// that 30-minute windowing stays exact; capture_index preserves file order
// for timestamp tie-breaks.
struct PacketRecord {
    std::int64_t ts_ns = 0;
    IpAddr src_ip, dst_ip;
    std::uint16_t src_port = 0, dst_port = 0;
    std::uint8_t protocol = 6;
    std::uint8_t tcp_flags = 0;
    std::uint32_t tcp_seq = 0;
    std::uint16_t tcp_window = 0;
    Bytes payload;
    std::uint32_t wire_len = 0;
    std::uint64_t capture_index = 0;

    double ts_seconds() const { return static_cast<double>(ts_ns) * 1e-9; }
};

enum class TsResolution { micro, nano };

struct PcapHeader {
    std::uint32_t magic = 0;
    std::uint16_t version_major = 0, version_minor = 0;
    std::uint32_t snaplen = 0;
    std::uint32_t linktype = 0;
    bool swapped = false; // file byte order differs from reader interpretation
    TsResolution resolution = TsResolution::micro;
};

inline constexpr std::uint32_t kLinktypeEthernet = 1;
inline constexpr std::uint32_t kLinktypeRawIp = 101;

struct RawFrame {
    Bytes data;
    std::int64_t ts_ns = 0;
    std::uint32_t orig_len = 0;
};

struct PcapFile {
    PcapHeader header;
    std::vector<RawFrame> frames;
    bool truncated_tail = false; // trailing partial record; warning, not error
};

// Parses a classic pcap file (both endiannesses, usec and nsec magic).
// Throws Error{bad_magic} for unknown magic (pcapng is named explicitly)
// and Error{truncated_header} for files shorter than 24 bytes.
PcapFile read_pcap(ByteView file_bytes);

enum class DecodeOutcome { ok, skipped, malformed, fragment_dropped };

struct DecodeResult {
    DecodeOutcome outcome = DecodeOutcome::skipped;
    std::optional<PacketRecord> record;
};

// Decodes one link-layer frame into a TCP PacketRecord. Non-IP ethertypes
// and non-TCP protocols are skipped; non-first IP fragments are dropped and
// counted; structurally short frames are malformed (counted, not fatal).
DecodeResult decode_frame(ByteView raw_frame, std::uint32_t linktype);

struct DecodeStats {
    std::uint64_t frames = 0;
    std::uint64_t tcp_packets = 0;
    std::uint64_t skipped = 0;
    std::uint64_t malformed = 0;
    std::uint64_t fragments_dropped = 0;
    bool truncated_tail = false;
};

// read_pcap + decode_frame over a whole file.
std::vector<PacketRecord> decode_capture(ByteView file_bytes, DecodeStats& stats);

} // namespace flowlens

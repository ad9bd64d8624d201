#include "flowlens/capture.hpp"

#include <cstdio>

#include "flowlens/common.hpp"

namespace flowlens {

namespace {

constexpr std::uint32_t kMagicUsec = 0xa1b2c3d4;
constexpr std::uint32_t kMagicUsecSwapped = 0xd4c3b2a1;
constexpr std::uint32_t kMagicNsec = 0xa1b23c4d;
constexpr std::uint32_t kMagicNsecSwapped = 0x4d3cb2a1;
constexpr std::uint32_t kMagicPcapng = 0x0a0d0d0a;

std::uint32_t read32(const std::uint8_t* p, bool swapped) {
    return swapped ? be32(p) : le32(p);
}

std::uint16_t read16(const std::uint8_t* p, bool swapped) {
    return swapped ? be16(p) : le16(p);
}

} // namespace

std::string IpAddr::to_string() const {
    char buf[64];
    if (!v6) {
        std::snprintf(buf, sizeof(buf), "%u.%u.%u.%u", bytes[0], bytes[1], bytes[2], bytes[3]);
        return buf;
    }
    std::string out;
    for (int i = 0; i < 16; i += 2) {
        std::snprintf(buf, sizeof(buf), "%02x%02x", bytes[i], bytes[i + 1]);
        out += buf;
        if (i < 14) out += ':';
    }
    return out;
}

PcapFile read_pcap(ByteView file_bytes) {
    if (file_bytes.size() >= 4 && le32(file_bytes.data()) == kMagicPcapng)
        throw Error(Errc::bad_magic,
                    "input is a pcapng file; only classic pcap is supported");
    if (file_bytes.size() < 24)
        throw Error(Errc::truncated_header, "pcap file shorter than the 24-byte global header");

    // The magic bytes alone determine byte order for every later field.
    // A little-endian read that comes out byte-reversed means the file was
    // written in the opposite order.
    const std::uint32_t magic_le = le32(file_bytes.data());
    PcapFile out;
    PcapHeader& h = out.header;
    h.magic = magic_le;
    switch (magic_le) {
    case kMagicUsec:
        h.swapped = false;
        h.resolution = TsResolution::micro;
        break;
    case kMagicUsecSwapped:
        h.swapped = true;
        h.resolution = TsResolution::micro;
        break;
    case kMagicNsec:
        h.swapped = false;
        h.resolution = TsResolution::nano;
        break;
    case kMagicNsecSwapped:
        h.swapped = true;
        h.resolution = TsResolution::nano;
        break;
    default: {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "unknown pcap magic 0x%08x", magic_le);
        throw Error(Errc::bad_magic, buf);
    }
    }

    const std::uint8_t* p = file_bytes.data();
    h.version_major = read16(p + 4, h.swapped);
    h.version_minor = read16(p + 6, h.swapped);
    h.snaplen = read32(p + 16, h.swapped);
    h.linktype = read32(p + 20, h.swapped);

    const std::int64_t subsec_to_ns = h.resolution == TsResolution::micro ? 1000 : 1;
    std::size_t pos = 24;
    while (pos < file_bytes.size()) {
        if (file_bytes.size() - pos < 16) {
            out.truncated_tail = true;
            break;
        }
        const std::uint8_t* rh = p + pos;
        const std::uint32_t ts_sec = read32(rh, h.swapped);
        const std::uint32_t ts_subsec = read32(rh + 4, h.swapped);
        const std::uint32_t incl_len = read32(rh + 8, h.swapped);
        pos += 16;
        if (file_bytes.size() - pos < incl_len) {
            out.truncated_tail = true;
            break;
        }
        RawFrame frame;
        frame.ts_ns = static_cast<std::int64_t>(ts_sec) * 1'000'000'000 +
                      static_cast<std::int64_t>(ts_subsec) * subsec_to_ns;
        frame.orig_len = read32(rh + 12, h.swapped);
        frame.data.assign(p + pos, p + pos + incl_len);
        pos += incl_len;
        out.frames.push_back(std::move(frame));
    }
    return out;
}

namespace {

DecodeResult decode_ip(ByteView ip, PacketRecord& rec);

DecodeResult malformed() { return {DecodeOutcome::malformed, std::nullopt}; }
DecodeResult skipped() { return {DecodeOutcome::skipped, std::nullopt}; }

DecodeResult decode_tcp(ByteView seg, PacketRecord& rec) {
    if (seg.size() < 20) return malformed();
    rec.src_port = be16(seg.data());
    rec.dst_port = be16(seg.data() + 2);
    rec.tcp_seq = be32(seg.data() + 4);
    const std::size_t header_len = (seg[12] >> 4) * 4u;
    if (header_len < 20 || seg.size() < header_len) return malformed();
    rec.tcp_flags = seg[13] & 0x3f;
    rec.tcp_window = be16(seg.data() + 14);
    rec.protocol = 6;
    rec.payload.assign(seg.begin() + static_cast<std::ptrdiff_t>(header_len), seg.end());
    return {DecodeOutcome::ok, std::move(rec)};
}

DecodeResult decode_ipv4(ByteView ip, PacketRecord& rec) {
    if (ip.size() < 20) return malformed();
    const std::size_t ihl = (ip[0] & 0x0f) * 4u;
    if (ihl < 20 || ip.size() < ihl) return malformed();
    const std::uint16_t total_len = be16(ip.data() + 2);
    if (total_len < ihl) return malformed();
    const std::uint16_t frag = be16(ip.data() + 6);
    if ((frag & 0x1fff) != 0) return {DecodeOutcome::fragment_dropped, std::nullopt};
    const std::uint8_t proto = ip[9];
    if (proto != 6) return skipped();
    rec.src_ip = IpAddr::v4(ip[12], ip[13], ip[14], ip[15]);
    rec.dst_ip = IpAddr::v4(ip[16], ip[17], ip[18], ip[19]);
    // Trailing link-layer padding is not part of the datagram.
    const std::size_t datagram_end = std::min<std::size_t>(ip.size(), total_len);
    if (datagram_end < ihl) return malformed();
    return decode_tcp(ip.subspan(ihl, datagram_end - ihl), rec);
}

DecodeResult decode_ipv6(ByteView ip, PacketRecord& rec) {
    if (ip.size() < 40) return malformed();
    rec.src_ip.v6 = rec.dst_ip.v6 = true;
    std::copy(ip.begin() + 8, ip.begin() + 24, rec.src_ip.bytes.begin());
    std::copy(ip.begin() + 24, ip.begin() + 40, rec.dst_ip.bytes.begin());
    const std::uint16_t payload_len = be16(ip.data() + 4);
    std::size_t end = std::min<std::size_t>(ip.size(), 40u + payload_len);

    std::uint8_t next = ip[6];
    std::size_t pos = 40;
    // Walk hop-by-hop / routing / destination-options / fragment headers.
    while (true) {
        if (next == 6) break;
        if (next == 0 || next == 43 || next == 60) {
            if (end - pos < 8) return malformed();
            const std::size_t ext_len = (static_cast<std::size_t>(ip[pos + 1]) + 1) * 8;
            if (end - pos < ext_len) return malformed();
            next = ip[pos];
            pos += ext_len;
        } else if (next == 44) {
            if (end - pos < 8) return malformed();
            const std::uint16_t off_flags = be16(ip.data() + pos + 2);
            if ((off_flags >> 3) != 0) return {DecodeOutcome::fragment_dropped, std::nullopt};
            next = ip[pos];
            pos += 8;
        } else {
            return skipped(); // non-TCP upper layer
        }
    }
    return decode_tcp(ip.subspan(pos, end - pos), rec);
}

DecodeResult decode_ip(ByteView ip, PacketRecord& rec) {
    if (ip.empty()) return malformed();
    const std::uint8_t version = ip[0] >> 4;
    if (version == 4) return decode_ipv4(ip, rec);
    if (version == 6) return decode_ipv6(ip, rec);
    return skipped();
}

} // namespace

DecodeResult decode_frame(ByteView raw_frame, std::uint32_t linktype) {
    PacketRecord rec;
    rec.wire_len = static_cast<std::uint32_t>(raw_frame.size());

    if (linktype == kLinktypeRawIp) return decode_ip(raw_frame, rec);
    if (linktype != kLinktypeEthernet)
        throw Error(Errc::unsupported_linktype,
                    "unsupported linktype " + std::to_string(linktype) +
                        " (expected 1=Ethernet or 101=raw IP)");

    if (raw_frame.size() < 14) return malformed();
    std::uint16_t ethertype = be16(raw_frame.data() + 12);
    std::size_t offset = 14;
    int vlan_depth = 0;
    while (ethertype == 0x8100 || ethertype == 0x88a8) {
        if (++vlan_depth > 2) return malformed();
        if (raw_frame.size() < offset + 4) return malformed();
        ethertype = be16(raw_frame.data() + offset + 2);
        offset += 4;
    }
    if (ethertype == 0x0800 || ethertype == 0x86dd)
        return decode_ip(raw_frame.subspan(offset), rec);
    return skipped();
}

std::vector<PacketRecord> decode_capture(ByteView file_bytes, DecodeStats& stats) {
    PcapFile file = read_pcap(file_bytes);
    stats.truncated_tail = file.truncated_tail;

    std::vector<PacketRecord> records;
    std::uint64_t index = 0;
    for (const RawFrame& frame : file.frames) {
        ++stats.frames;
        DecodeResult res = decode_frame(frame.data, file.header.linktype);
        switch (res.outcome) {
        case DecodeOutcome::ok: {
            PacketRecord rec = std::move(*res.record);
            rec.ts_ns = frame.ts_ns;
            rec.wire_len = frame.orig_len;
            rec.capture_index = index++;
            ++stats.tcp_packets;
            records.push_back(std::move(rec));
            break;
        }
        case DecodeOutcome::skipped:
            ++stats.skipped;
            break;
        case DecodeOutcome::malformed:
            ++stats.malformed;
            break;
        case DecodeOutcome::fragment_dropped:
            ++stats.fragments_dropped;
            break;
        }
    }
    return records;
}

const char* errc_name(Errc c) {
    switch (c) {
    case Errc::bad_magic: return "BadMagic";
    case Errc::truncated_header: return "TruncatedHeader";
    case Errc::unsupported_linktype: return "UnsupportedLinktype";
    case Errc::malformed_frame: return "MalformedFrame";
    case Errc::malformed_hello: return "MalformedHello";
    case Errc::malformed_der: return "MalformedDer";
    case Errc::schema_mismatch: return "SchemaMismatch";
    case Errc::dimension_mismatch: return "DimensionMismatch";
    case Errc::empty_data: return "EmptyData";
    case Errc::single_class: return "SingleClass";
    case Errc::length_mismatch: return "LengthMismatch";
    case Errc::non_binary_label: return "NonBinaryLabel";
    case Errc::too_few_samples: return "TooFewSamples";
    case Errc::duplicate_family: return "DuplicateFamily";
    case Errc::non_positive_count: return "NonPositiveCount";
    case Errc::missing_cover: return "MissingCover";
    case Errc::too_many_features: return "TooManyFeatures";
    case Errc::bad_config: return "BadConfig";
    case Errc::io_error: return "IoError";
    }
    return "Unknown";
}

} // namespace flowlens

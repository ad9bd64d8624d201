#include <doctest.h>

#include "flowlens/capture.hpp"
#include "flowlens/common.hpp"
#include "support/builders.hpp"

using namespace flowlens;
using namespace testbytes;

TEST_CASE("pcap: empty capture parses to zero frames") {
    PcapWriter w;
    const PcapFile file = read_pcap(w.bytes());
    CHECK(file.frames.empty());
    CHECK(!file.truncated_tail);
    CHECK(file.header.linktype == 1);
    CHECK(file.header.resolution == TsResolution::micro);
}

// Hand-assembled record: ts_sec=100, ts_usec=5, 60 frame bytes.
TEST_CASE("pcap: microsecond timestamp decodes to 100.000005") {
    PcapWriter w;
    Bytes frame(60, 0xaa);
    w.add_record(100, 5, frame);
    const PcapFile file = read_pcap(w.bytes());
    REQUIRE(file.frames.size() == 1);
    CHECK(file.frames[0].ts_ns == 100'000'005'000);
    CHECK(file.frames[0].ts_ns == static_cast<std::int64_t>(100.000005 * 1e9 + 0.5));
    CHECK(file.frames[0].data == frame);
    CHECK(file.frames[0].orig_len == 60);
}

TEST_CASE("pcap: nanosecond magic keeps sub-microsecond precision") {
    PcapWriter w(false, true);
    w.add_record(100, 5, Bytes(10, 0));
    const PcapFile file = read_pcap(w.bytes());
    REQUIRE(file.frames.size() == 1);
    CHECK(file.frames[0].ts_ns == 100'000'000'005);
}

TEST_CASE("pcap: big-endian file yields the identical frame sequence") {
    FrameSpec spec;
    spec.payload = {1, 2, 3};
    const Bytes frame = eth_frame(spec);

    PcapWriter le(false), be(true);
    for (auto* w : {&le, &be}) {
        w->add_record(10, 1, frame);
        w->add_record(11, 2, frame);
    }
    DecodeStats s1, s2;
    const auto a = decode_capture(le.bytes(), s1);
    const auto b = decode_capture(be.bytes(), s2);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].ts_ns == b[i].ts_ns);
        CHECK(a[i].payload == b[i].payload);
        CHECK(a[i].src_port == b[i].src_port);
    }
}

TEST_CASE("pcap: error cases") {
    CHECK_THROWS_WITH_AS(read_pcap(Bytes{0x01, 0x02}), doctest::Contains("24-byte"),
                         Error);
    Bytes bad(24, 0);
    CHECK_THROWS_AS(read_pcap(bad), Error);

    Bytes pcapng;
    put32le(pcapng, 0x0a0d0d0a);
    pcapng.resize(32, 0);
    CHECK_THROWS_WITH_AS(read_pcap(pcapng), doctest::Contains("pcapng"), Error);
}

TEST_CASE("pcap: truncated trailing record is a warning, not an error") {
    PcapWriter w;
    w.add_record(1, 0, Bytes(20, 0));
    Bytes partial;
    put32le(partial, 2);
    put32le(partial, 0);
    put32le(partial, 50); // declares 50 bytes...
    put32le(partial, 50);
    partial.resize(partial.size() + 10, 0); // ...but only 10 follow
    w.add_raw(partial);
    const PcapFile file = read_pcap(w.bytes());
    CHECK(file.frames.size() == 1);
    CHECK(file.truncated_tail);
}

TEST_CASE("decode: IPv4 TCP frame") {
    FrameSpec spec;
    spec.sport = 443;
    spec.dport = 51000;
    spec.payload = {0xde, 0xad};
    spec.window = 29200;
    spec.seq = 1000;
    const DecodeResult res = decode_frame(eth_frame(spec), kLinktypeEthernet);
    REQUIRE(res.outcome == DecodeOutcome::ok);
    const PacketRecord& p = *res.record;
    CHECK(p.src_port == 443);
    CHECK(p.dst_port == 51000);
    CHECK(p.protocol == 6);
    CHECK(p.payload == Bytes{0xde, 0xad});
    CHECK(p.tcp_window == 29200);
    CHECK(p.tcp_seq == 1000);
    CHECK(p.src_ip.to_string() == "10.0.0.1");
}

TEST_CASE("decode: ARP is skipped") {
    FrameSpec spec;
    Bytes frame = eth_frame(spec, 0x0806);
    frame.resize(64, 0);
    CHECK(decode_frame(frame, kLinktypeEthernet).outcome == DecodeOutcome::skipped);
}

TEST_CASE("decode: UDP is skipped, not malformed") {
    FrameSpec spec;
    spec.ip_proto = 17;
    CHECK(decode_frame(eth_frame(spec), kLinktypeEthernet).outcome == DecodeOutcome::skipped);
}

// IHL=6 (one option word) + data offset 5: payload starts at 14+24+20.
TEST_CASE("decode: IPv4 options shift the payload offset") {
    FrameSpec spec;
    spec.ipv4_option_words = 1;
    spec.payload.assign(10, 0x5a);
    const Bytes frame = eth_frame(spec);
    REQUIRE(frame.size() == 14 + 24 + 20 + 10);
    for (std::size_t i = 14 + 24 + 20; i < frame.size(); ++i) CHECK(frame[i] == 0x5a);
    const DecodeResult res = decode_frame(frame, kLinktypeEthernet);
    REQUIRE(res.outcome == DecodeOutcome::ok);
    CHECK(res.record->payload.size() == 10);
    CHECK(res.record->payload == Bytes(10, 0x5a));
}

TEST_CASE("decode: VLAN tags") {
    FrameSpec spec;
    spec.payload = {1};
    FrameSpec one = spec, two = spec, three = spec;
    one.vlan_tags = 1;
    two.vlan_tags = 2;
    three.vlan_tags = 3;
    CHECK(decode_frame(eth_frame(one), kLinktypeEthernet).outcome == DecodeOutcome::ok);
    CHECK(decode_frame(eth_frame(two), kLinktypeEthernet).outcome == DecodeOutcome::ok);
    CHECK(decode_frame(eth_frame(three), kLinktypeEthernet).outcome ==
          DecodeOutcome::malformed);
}

TEST_CASE("decode: non-first IPv4 fragments are dropped and counted") {
    FrameSpec spec;
    spec.frag_offset_words = 100;
    CHECK(decode_frame(eth_frame(spec), kLinktypeEthernet).outcome ==
          DecodeOutcome::fragment_dropped);
}

TEST_CASE("decode: IPv6 extension headers are walked") {
    FrameSpec spec;
    spec.payload = {0x11, 0x22};
    const Bytes plain = eth_frame_v6(spec);
    const DecodeResult r1 = decode_frame(plain, kLinktypeEthernet);
    REQUIRE(r1.outcome == DecodeOutcome::ok);
    CHECK(r1.record->src_ip.v6);
    CHECK(r1.record->payload == Bytes{0x11, 0x22});

    // hop-by-hop -> routing -> fragment(offset 0) -> TCP
    const Bytes chained = eth_frame_v6(spec, {0, 43, 44}, 0);
    const DecodeResult r2 = decode_frame(chained, kLinktypeEthernet);
    REQUIRE(r2.outcome == DecodeOutcome::ok);
    CHECK(r2.record->payload == Bytes{0x11, 0x22});

    const Bytes fragged = eth_frame_v6(spec, {44}, 5);
    CHECK(decode_frame(fragged, kLinktypeEthernet).outcome == DecodeOutcome::fragment_dropped);
}

TEST_CASE("decode: raw-IP linktype and unsupported linktypes") {
    FrameSpec spec;
    spec.payload = {9};
    CHECK(decode_frame(ipv4_packet(spec), kLinktypeRawIp).outcome == DecodeOutcome::ok);
    CHECK_THROWS_AS(decode_frame(ipv4_packet(spec), 105), Error);
}

TEST_CASE("decode: frames shorter than declared headers are malformed") {
    FrameSpec spec;
    Bytes frame = eth_frame(spec);
    frame.resize(14 + 10); // IPv4 header cut short
    CHECK(decode_frame(frame, kLinktypeEthernet).outcome == DecodeOutcome::malformed);
    Bytes tiny{0x02, 0x04};
    CHECK(decode_frame(tiny, kLinktypeEthernet).outcome == DecodeOutcome::malformed);
}

TEST_CASE("capture: parsing is deterministic and conserves counts") {
    PcapWriter w;
    FrameSpec tcp;
    tcp.payload = {1, 2};
    FrameSpec udp;
    udp.ip_proto = 17;
    FrameSpec frag;
    frag.frag_offset_words = 3;
    w.add_record(1, 0, eth_frame(tcp));
    w.add_record(2, 0, eth_frame(udp));
    w.add_record(3, 0, eth_frame(frag));
    w.add_record(4, 0, eth_frame(tcp, 0x0806));

    DecodeStats s1, s2;
    const auto a = decode_capture(w.bytes(), s1);
    const auto b = decode_capture(w.bytes(), s2);
    CHECK(s1.frames == 4);
    CHECK(s1.tcp_packets == 1);
    CHECK(s1.skipped == 2);
    CHECK(s1.fragments_dropped == 1);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].ts_ns == b[i].ts_ns);
        CHECK(a[i].payload == b[i].payload);
        CHECK(a[i].payload.size() <= a[i].wire_len);
    }
}

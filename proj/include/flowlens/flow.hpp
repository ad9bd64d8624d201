#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "flowlens/capture.hpp"

namespace flowlens {

inline constexpr std::int64_t kDefaultWindowNs = 1800LL * 1'000'000'000; // 30 minutes

struct Endpoint {
    IpAddr ip;
    std::uint16_t port = 0;
    auto operator<=>(const Endpoint&) const = default;
    std::string to_string() const { return ip.to_string() + ":" + std::to_string(port); }
};

// Canonical 5-tuple key: endpoints ordered so key(c->s) == key(s->c).
struct FlowKey {
    Endpoint ep_a, ep_b; // ep_a <= ep_b
    std::uint8_t protocol = 6;

    static FlowKey canonical(const Endpoint& x, const Endpoint& y, std::uint8_t proto = 6) {
        FlowKey k;
        k.protocol = proto;
        if (y < x) {
            k.ep_a = y;
            k.ep_b = x;
        } else {
            k.ep_a = x;
            k.ep_b = y;
        }
        return k;
    }

    auto operator<=>(const FlowKey&) const = default;
};

struct BiFlow {
    FlowKey key;
    Endpoint initiator;
    std::vector<PacketRecord> fwd_packets; // initiator -> responder
    std::vector<PacketRecord> bwd_packets;
    std::int64_t window_start_ns = 0;
    std::int64_t window_end_ns = 0; // window_start + W
    std::uint32_t window_index = 0;
    bool handshake_complete = false;
    bool encrypted = false;

    Endpoint responder() const {
        return initiator == key.ep_a ? key.ep_b : key.ep_a;
    }
    std::size_t packet_count() const { return fwd_packets.size() + bwd_packets.size(); }
    std::string id() const;

    // Merged fwd+bwd packets ordered by (ts, capture order).
    std::vector<const PacketRecord*> merged_packets() const;
};

// Groups sorted packets into half-open windows [t0 + g*W, t0 + (g+1)*W)
// anchored at the first packet. Empty groups are never emitted.
std::vector<std::vector<PacketRecord>> window_split(std::vector<PacketRecord> flow_packets,
                                                    std::int64_t window_ns = kDefaultWindowNs);

// One BiFlow per (FlowKey, window). Initiator is the source of the first
// SYN-without-ACK, falling back to the first packet's source; direction
// labels are stable across windows of the same key. handshake_complete and
// encrypted are filled (handshake decided on the first window, inherited by
// later ones; the encryption predicate runs per window).
std::vector<BiFlow> assemble_flows(const std::vector<PacketRecord>& packets,
                                   std::int64_t window_ns = kDefaultWindowNs);

// True iff the flow's first window carries SYN (fwd), SYN+ACK (bwd), ACK
// (fwd) in timestamp order.
bool filter_handshake(const BiFlow& flow);

// True iff at least one payload in either direction parses as a TLS record:
// content type in {20,21,22,23} with legacy version major byte 3. Port
// numbers are never consulted.
bool filter_encrypted(const BiFlow& flow);
bool looks_like_tls_record(ByteView payload);

struct FlowStats {
    std::uint64_t input_packets = 0;
    std::uint64_t flows_assembled = 0;
    std::uint64_t flows_kept = 0;
    std::uint64_t flows_discarded_handshake = 0;
    std::uint64_t flows_discarded_unencrypted = 0;
    std::uint64_t packets_discarded = 0;
};

// assemble + both discard branches of the processing loop. kept flows all
// have handshake_complete && encrypted; discarded packet totals make the
// conservation check (kept + discarded == input) possible.
std::vector<BiFlow> build_filtered_flows(const std::vector<PacketRecord>& packets,
                                         FlowStats& stats,
                                         std::int64_t window_ns = kDefaultWindowNs);

// Line-delimited JSON debug record for one flow.
std::string flow_debug_json(const BiFlow& flow);

} // namespace flowlens

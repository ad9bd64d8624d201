#include "flowlens/flow.hpp"

#include <algorithm>
#include <map>

#include <json.hpp>

namespace flowlens {

namespace {

bool ts_order(const PacketRecord& a, const PacketRecord& b) {
    if (a.ts_ns != b.ts_ns) return a.ts_ns < b.ts_ns;
    return a.capture_index < b.capture_index;
}

} // namespace

std::string BiFlow::id() const {
    return initiator.to_string() + "-" + responder().to_string() + "-p" +
           std::to_string(key.protocol) + "-w" + std::to_string(window_index);
}

std::vector<const PacketRecord*> BiFlow::merged_packets() const {
    std::vector<const PacketRecord*> out;
    out.reserve(packet_count());
    for (const auto& p : fwd_packets) out.push_back(&p);
    for (const auto& p : bwd_packets) out.push_back(&p);
    std::sort(out.begin(), out.end(),
              [](const PacketRecord* a, const PacketRecord* b) { return ts_order(*a, *b); });
    return out;
}

std::vector<std::vector<PacketRecord>> window_split(std::vector<PacketRecord> flow_packets,
                                                    std::int64_t window_ns) {
    std::vector<std::vector<PacketRecord>> groups;
    if (flow_packets.empty()) return groups;
    const std::int64_t t0 = flow_packets.front().ts_ns;
    for (PacketRecord& p : flow_packets) {
        const auto g = static_cast<std::size_t>((p.ts_ns - t0) / window_ns);
        if (groups.size() <= g) groups.resize(g + 1);
        groups[g].push_back(std::move(p));
    }
    std::erase_if(groups, [](const auto& g) { return g.empty(); });
    return groups;
}

bool looks_like_tls_record(ByteView payload) {
    if (payload.size() < 5) return false;
    const std::uint8_t content_type = payload[0];
    if (content_type < 20 || content_type > 23) return false;
    if (payload[1] != 3) return false;        // legacy version major byte
    if (payload[2] > 4) return false;         // minor bytes ever assigned: 0..4
    return be16(payload.data() + 3) > 0;      // record with an actual fragment
}

bool filter_encrypted(const BiFlow& flow) {
    for (const auto& p : flow.fwd_packets)
        if (looks_like_tls_record(p.payload)) return true;
    for (const auto& p : flow.bwd_packets)
        if (looks_like_tls_record(p.payload)) return true;
    return false;
}

bool filter_handshake(const BiFlow& flow) {
    // SYN (fwd) -> SYN+ACK (bwd) -> ACK (fwd), in timestamp order.
    int stage = 0;
    for (const PacketRecord* p : flow.merged_packets()) {
        const bool fwd = Endpoint{p->src_ip, p->src_port} == flow.initiator;
        const bool syn = p->tcp_flags & tcpflag::syn;
        const bool ack = p->tcp_flags & tcpflag::ack;
        switch (stage) {
        case 0:
            if (fwd && syn && !ack) stage = 1;
            break;
        case 1:
            if (!fwd && syn && ack) stage = 2;
            break;
        case 2:
            if (fwd && ack && !syn) return true;
            break;
        }
    }
    return false;
}

std::vector<BiFlow> assemble_flows(const std::vector<PacketRecord>& packets,
                                   std::int64_t window_ns) {
    // Bucket by canonical key, preserving (ts, capture order).
    std::map<FlowKey, std::vector<PacketRecord>> buckets;
    for (const PacketRecord& p : packets) {
        FlowKey key = FlowKey::canonical({p.src_ip, p.src_port}, {p.dst_ip, p.dst_port},
                                         p.protocol);
        buckets[key].push_back(p);
    }

    std::vector<BiFlow> flows;
    for (auto& [key, bucket] : buckets) {
        std::sort(bucket.begin(), bucket.end(), ts_order);

        Endpoint initiator{bucket.front().src_ip, bucket.front().src_port};
        for (const PacketRecord& p : bucket) {
            const bool syn_only = (p.tcp_flags & tcpflag::syn) && !(p.tcp_flags & tcpflag::ack);
            if (syn_only) {
                initiator = {p.src_ip, p.src_port};
                break;
            }
        }

        const std::int64_t t0 = bucket.front().ts_ns;
        auto groups = window_split(std::move(bucket), window_ns);
        bool first_window_handshake = false;
        for (std::size_t g = 0; g < groups.size(); ++g) {
            BiFlow flow;
            flow.key = key;
            flow.initiator = initiator;
            flow.window_index = static_cast<std::uint32_t>(g);
            flow.window_start_ns = t0 + static_cast<std::int64_t>(g) * window_ns;
            flow.window_end_ns = flow.window_start_ns + window_ns;
            for (PacketRecord& p : groups[g]) {
                if (Endpoint{p.src_ip, p.src_port} == initiator)
                    flow.fwd_packets.push_back(std::move(p));
                else
                    flow.bwd_packets.push_back(std::move(p));
            }
            if (g == 0) first_window_handshake = filter_handshake(flow);
            flow.handshake_complete = first_window_handshake; // inherited past window 0
            flow.encrypted = filter_encrypted(flow);
            flows.push_back(std::move(flow));
        }
    }

    // Deterministic emission order: by first activity, then key.
    std::sort(flows.begin(), flows.end(), [](const BiFlow& a, const BiFlow& b) {
        if (a.window_start_ns != b.window_start_ns) return a.window_start_ns < b.window_start_ns;
        if (a.key != b.key) return a.key < b.key;
        return a.window_index < b.window_index;
    });
    return flows;
}

std::vector<BiFlow> build_filtered_flows(const std::vector<PacketRecord>& packets,
                                         FlowStats& stats, std::int64_t window_ns) {
    stats.input_packets += packets.size();
    std::vector<BiFlow> all = assemble_flows(packets, window_ns);
    stats.flows_assembled += all.size();

    std::vector<BiFlow> kept;
    for (BiFlow& flow : all) {
        if (!flow.handshake_complete) {
            ++stats.flows_discarded_handshake;
            stats.packets_discarded += flow.packet_count();
        } else if (!flow.encrypted) {
            ++stats.flows_discarded_unencrypted;
            stats.packets_discarded += flow.packet_count();
        } else {
            ++stats.flows_kept;
            kept.push_back(std::move(flow));
        }
    }
    return kept;
}

std::string flow_debug_json(const BiFlow& flow) {
    nlohmann::ordered_json j;
    j["key"] = flow.key.ep_a.to_string() + "|" + flow.key.ep_b.to_string() + "|p" +
               std::to_string(flow.key.protocol);
    j["initiator"] = flow.initiator.to_string();
    j["n_fwd"] = flow.fwd_packets.size();
    j["n_bwd"] = flow.bwd_packets.size();
    j["window_start"] = static_cast<double>(flow.window_start_ns) * 1e-9;
    j["flags"] = nlohmann::ordered_json{{"handshake_complete", flow.handshake_complete},
                                        {"encrypted", flow.encrypted}};
    return j.dump();
}

} // namespace flowlens

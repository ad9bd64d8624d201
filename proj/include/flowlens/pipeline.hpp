#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "flowlens/capture.hpp"
#include "flowlens/dataset.hpp"
#include "flowlens/flow.hpp"
#include "flowlens/schema.hpp"

namespace flowlens {

// FNV-1a/64 content digest, for provenance lines in output artifacts.
std::uint64_t fnv1a64(ByteView bytes);
std::string digest_hex(ByteView bytes);

std::string read_file(const std::filesystem::path& path);
Bytes read_file_bytes(const std::filesystem::path& path);

// Write via temp file + rename so partially written artifacts never land
// under the final name.
void atomic_write(const std::filesystem::path& path, const std::string& content);

struct ExtractLog {
    DecodeStats decode;
    FlowStats flows;
    std::vector<std::string> flow_debug; // line-delimited JSON, when requested
};

// capture -> flow -> tls -> features for one pcap. flow_id gets the given
// prefix ("<stem>#"). Label applies to every emitted row.
Dataset extract_capture(ByteView pcap_bytes, const FeatureSchema& schema,
                        std::optional<int> label, const std::string& id_prefix, ExtractLog& log,
                        bool want_flow_debug = false);

std::string extract_log_to_json(const ExtractLog& log);

} // namespace flowlens

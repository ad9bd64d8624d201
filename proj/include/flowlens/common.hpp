#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace flowlens {

inline constexpr const char* kVersion = "0.1.0";

enum class Errc {
    bad_magic,
    truncated_header,
    unsupported_linktype,
    malformed_frame,
    malformed_hello,
    malformed_der,
    schema_mismatch,
    dimension_mismatch,
    empty_data,
    single_class,
    length_mismatch,
    non_binary_label,
    too_few_samples,
    duplicate_family,
    non_positive_count,
    missing_cover,
    too_many_features,
    bad_config,
    io_error,
};

struct Error : std::runtime_error {
    Errc code;
    Error(Errc c, const std::string& msg) : std::runtime_error(msg), code(c) {}
};

const char* errc_name(Errc c);

} // namespace flowlens

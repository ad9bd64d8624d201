#pragma once

#include <cstdint>
#include <cstring>
#include <span>
#include <vector>

namespace flowlens {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

inline std::uint16_t be16(const std::uint8_t* p) {
    return static_cast<std::uint16_t>((p[0] << 8) | p[1]);
}

inline std::uint32_t be24(const std::uint8_t* p) {
    return (static_cast<std::uint32_t>(p[0]) << 16) | (static_cast<std::uint32_t>(p[1]) << 8) |
           p[2];
}

inline std::uint32_t be32(const std::uint8_t* p) {
    return (static_cast<std::uint32_t>(p[0]) << 24) | (static_cast<std::uint32_t>(p[1]) << 16) |
           (static_cast<std::uint32_t>(p[2]) << 8) | p[3];
}

inline std::uint16_t le16(const std::uint8_t* p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

inline std::uint32_t le32(const std::uint8_t* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

// Bounds-checked sequential reader over a byte view. take_*() return false
// instead of throwing; parsers decide whether short input is an error.
class ByteReader {
public:
    explicit ByteReader(ByteView data) : data_(data) {}

    std::size_t pos() const { return pos_; }
    std::size_t remaining() const { return data_.size() - pos_; }
    bool empty() const { return remaining() == 0; }

    bool take_u8(std::uint8_t& out) {
        if (remaining() < 1) return false;
        out = data_[pos_++];
        return true;
    }

    bool take_be16(std::uint16_t& out) {
        if (remaining() < 2) return false;
        out = be16(data_.data() + pos_);
        pos_ += 2;
        return true;
    }

    bool take_be24(std::uint32_t& out) {
        if (remaining() < 3) return false;
        out = be24(data_.data() + pos_);
        pos_ += 3;
        return true;
    }

    bool take_be32(std::uint32_t& out) {
        if (remaining() < 4) return false;
        out = be32(data_.data() + pos_);
        pos_ += 4;
        return true;
    }

    bool take_view(std::size_t n, ByteView& out) {
        if (remaining() < n) return false;
        out = data_.subspan(pos_, n);
        pos_ += n;
        return true;
    }

    bool skip(std::size_t n) {
        if (remaining() < n) return false;
        pos_ += n;
        return true;
    }

private:
    ByteView data_;
    std::size_t pos_ = 0;
};

} // namespace flowlens

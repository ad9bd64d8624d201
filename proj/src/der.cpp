#include "flowlens/der.hpp"

#include "flowlens/common.hpp"

namespace flowlens {

namespace {

struct Tlv {
    std::uint8_t tag = 0;
    ByteView value;
    ByteView raw; // tag + length + value
};

[[noreturn]] void malformed(const char* what) { throw Error(Errc::malformed_der, what); }

// One TLV at the cursor; supports short-form and 1/2-byte long-form lengths.
Tlv read_tlv(ByteView data, std::size_t& pos) {
    if (data.size() - pos < 2) malformed("DER element shorter than tag+length");
    const std::size_t start = pos;
    Tlv out;
    out.tag = data[pos++];
    std::size_t len = data[pos++];
    if (len & 0x80) {
        const std::size_t n = len & 0x7f;
        if (n == 0 || n > 2) malformed("unsupported DER length-of-length");
        if (data.size() - pos < n) malformed("truncated DER length");
        len = 0;
        for (std::size_t i = 0; i < n; ++i) len = (len << 8) | data[pos++];
    }
    if (data.size() - pos < len) malformed("DER value overruns buffer");
    out.value = data.subspan(pos, len);
    pos += len;
    out.raw = data.subspan(start, pos - start);
    return out;
}

int parse_digits(ByteView t, std::size_t pos, std::size_t n) {
    int v = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const std::uint8_t c = t[pos + i];
        if (c < '0' || c > '9') malformed("non-digit in X.509 time");
        v = v * 10 + (c - '0');
    }
    return v;
}

// Days since 1970-01-01 for a proleptic Gregorian date (Howard Hinnant's
// days_from_civil).
std::int64_t days_from_civil(int y, int m, int d) {
    y -= m <= 2;
    const int era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153u * static_cast<unsigned>(m + (m > 2 ? -3 : 9)) + 2) / 5 +
                         static_cast<unsigned>(d) - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return static_cast<std::int64_t>(era) * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

} // namespace

std::int64_t parse_x509_time(ByteView text, bool generalized) {
    int year, month, day, hour, minute, second = 0;
    std::size_t pos = 0;
    if (generalized) {
        if (text.size() != 15) malformed("GeneralizedTime must be YYYYMMDDHHMMSSZ");
        year = parse_digits(text, 0, 4);
        pos = 4;
    } else {
        if (text.size() != 13 && text.size() != 11) malformed("UTCTime must be YYMMDDHHMM[SS]Z");
        const int yy = parse_digits(text, 0, 2);
        year = yy >= 50 ? 1900 + yy : 2000 + yy;
        pos = 2;
    }
    month = parse_digits(text, pos, 2);
    day = parse_digits(text, pos + 2, 2);
    hour = parse_digits(text, pos + 4, 2);
    minute = parse_digits(text, pos + 6, 2);
    pos += 8;
    if (text.size() - pos == 3) {
        second = parse_digits(text, pos, 2);
        pos += 2;
    }
    if (text[pos] != 'Z') malformed("X.509 time must be Zulu");
    if (month < 1 || month > 12 || day < 1 || day > 31 || hour > 23 || minute > 59 || second > 60)
        malformed("X.509 time field out of range");
    return days_from_civil(year, month, day) * 86400 + hour * 3600 + minute * 60 + second;
}

CertValidity cert_validity_days(ByteView der) {
    std::size_t pos = 0;
    Tlv cert = read_tlv(der, pos);
    if (cert.tag != 0x30) malformed("certificate is not a SEQUENCE");

    std::size_t tbs_pos = 0;
    Tlv tbs = read_tlv(cert.value, tbs_pos);
    if (tbs.tag != 0x30) malformed("tbsCertificate is not a SEQUENCE");

    // tbs children: [0] version (optional), serialNumber, signature, issuer,
    // validity, subject, ...
    std::size_t p = 0;
    Tlv child = read_tlv(tbs.value, p);
    if (child.tag == 0xa0) child = read_tlv(tbs.value, p); // explicit version present
    if (child.tag != 0x02) malformed("expected serialNumber INTEGER");
    Tlv sig_alg = read_tlv(tbs.value, p);
    if (sig_alg.tag != 0x30) malformed("expected signature AlgorithmIdentifier");
    Tlv issuer = read_tlv(tbs.value, p);
    if (issuer.tag != 0x30) malformed("expected issuer Name");
    Tlv validity = read_tlv(tbs.value, p);
    if (validity.tag != 0x30) malformed("expected Validity SEQUENCE");
    Tlv subject = read_tlv(tbs.value, p);
    if (subject.tag != 0x30) malformed("expected subject Name");

    std::size_t vp = 0;
    Tlv not_before = read_tlv(validity.value, vp);
    Tlv not_after = read_tlv(validity.value, vp);
    auto decode_time = [](const Tlv& t) {
        if (t.tag == 0x17) return parse_x509_time(t.value, false);
        if (t.tag == 0x18) return parse_x509_time(t.value, true);
        malformed("Validity time is neither UTCTime nor GeneralizedTime");
    };

    const std::int64_t nb = decode_time(not_before);
    const std::int64_t na = decode_time(not_after);
    CertValidity out;
    // notAfter < notBefore would floor negative; clamp to the invariant.
    out.valid_days = na >= nb ? (na - nb) / 86400 : 0;
    out.self_signed = issuer.raw.size() == subject.raw.size() &&
                      std::equal(issuer.raw.begin(), issuer.raw.end(), subject.raw.begin());
    return out;
}

} // namespace flowlens

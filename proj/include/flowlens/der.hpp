#pragma once

#include <cstdint>
#include <string>

#include "flowlens/bytes.hpp"

namespace flowlens {

struct CertValidity {
    std::int64_t valid_days = 0;
    bool self_signed = false;
};

// Walks one DER-encoded X.509 certificate down the minimal path
// Certificate -> TBSCertificate -> Validity, decodes notBefore/notAfter
// (UTCTime with the 50-year pivot, or GeneralizedTime) and returns
// floor((notAfter - notBefore) / 86400 s). self_signed is byte equality of
// the issuer and subject Name elements. Throws Error{malformed_der}.
CertValidity cert_validity_days(ByteView der_bytes);

// "YYMMDDHHMMSSZ" / "YYMMDDHHMMZ" (UTCTime, pivot: YY >= 50 -> 19YY) or
// "YYYYMMDDHHMMSSZ" (GeneralizedTime), to seconds since the Unix epoch.
std::int64_t parse_x509_time(ByteView text, bool generalized);

} // namespace flowlens

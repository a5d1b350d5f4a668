#pragma once

#include <stdexcept>
#include <string>

namespace cdtw {

enum class Errc {
    InvalidK,
    SingularTransform,
    Undefined,
    OutOfDomain,
    InvalidEpsilon,
    InvalidCurve,
    InvalidDirection,
    EmptyRectangle,
    InvalidSegment,
    EmptyEnvelope,
    OrderViolation,
    NotABaseBorder,
    DomainMismatch,
    GridTooLarge,
    SingularPoint,
    Parse,
};

inline const char* errc_name(Errc c) {
    switch (c) {
    case Errc::InvalidK: return "InvalidK";
    case Errc::SingularTransform: return "SingularTransform";
    case Errc::Undefined: return "Undefined";
    case Errc::OutOfDomain: return "OutOfDomain";
    case Errc::InvalidEpsilon: return "InvalidEpsilon";
    case Errc::InvalidCurve: return "InvalidCurve";
    case Errc::InvalidDirection: return "InvalidDirection";
    case Errc::EmptyRectangle: return "EmptyRectangle";
    case Errc::InvalidSegment: return "InvalidSegment";
    case Errc::EmptyEnvelope: return "EmptyEnvelope";
    case Errc::OrderViolation: return "OrderViolation";
    case Errc::NotABaseBorder: return "NotABaseBorder";
    case Errc::DomainMismatch: return "DomainMismatch";
    case Errc::GridTooLarge: return "GridTooLarge";
    case Errc::SingularPoint: return "SingularPoint";
    case Errc::Parse: return "Parse";
    }
    return "Unknown";
}

struct Error : std::runtime_error {
    Errc code;
    Error(Errc c, const std::string& what)
        : std::runtime_error(std::string(errc_name(c)) + ": " + what), code(c) {}
};

} // namespace cdtw

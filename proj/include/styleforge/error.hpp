#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace styleforge {

// Error codes, grouped into the three classes the command line maps to exit
// codes (usage = 1, data = 2, numeric = 3).
enum class Errc {
    // usage
    Config,
    InvalidArgument,
    // data
    Io,
    Encoding,
    Format,
    EmptyCorpus,
    EmptyInput,
    UnknownId,
    UnknownWord,
    AllPad,
    NoSeedCoverage,
    LengthMismatch,
    AlignmentMismatch,
    NegativeComponent,
    CorpusTooSmall,
    // numeric
    Shape,
    EmptyTargets,
    NonFiniteGradient,
};

enum class ErrorClass { Usage, Data, Numeric };

constexpr ErrorClass error_class(Errc code) noexcept {
    switch (code) {
    case Errc::Config:
    case Errc::InvalidArgument:
        return ErrorClass::Usage;
    case Errc::Shape:
    case Errc::EmptyTargets:
    case Errc::NonFiniteGradient:
        return ErrorClass::Numeric;
    default:
        return ErrorClass::Data;
    }
}

constexpr std::string_view errc_name(Errc code) noexcept {
    switch (code) {
    case Errc::Config: return "Config";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::Io: return "IoError";
    case Errc::Encoding: return "EncodingError";
    case Errc::Format: return "FormatError";
    case Errc::EmptyCorpus: return "EmptyCorpus";
    case Errc::EmptyInput: return "EmptyInput";
    case Errc::UnknownId: return "UnknownId";
    case Errc::UnknownWord: return "UnknownWord";
    case Errc::AllPad: return "AllPad";
    case Errc::NoSeedCoverage: return "NoSeedCoverage";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::AlignmentMismatch: return "AlignmentMismatch";
    case Errc::NegativeComponent: return "NegativeComponent";
    case Errc::CorpusTooSmall: return "CorpusTooSmall";
    case Errc::Shape: return "ShapeError";
    case Errc::EmptyTargets: return "EmptyTargets";
    case Errc::NonFiniteGradient: return "NonFiniteGradient";
    }
    return "Unknown";
}

class Error : public std::runtime_error {
  public:
    Error(Errc code, const std::string &message)
        : std::runtime_error(std::string(errc_name(code)) + ": " + message), code_(code) {}

    Errc code() const noexcept { return code_; }
    ErrorClass error_class() const noexcept { return styleforge::error_class(code_); }

  private:
    Errc code_;
};

} // namespace styleforge

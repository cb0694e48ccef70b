#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tmam
{

enum class ErrorCode
{
    InvalidArgument,
    DimensionMismatch,
    DegeneratePath,   // |phi'|_0 vanishes, no time scaling exists
    DriftVanishes,    // |b(phi)|_0 vanishes, optimal time is infinite
    MissingMetadata,
    NotConverged,
    ConfigError,
};

constexpr std::string_view to_string (ErrorCode code) noexcept
{
    switch (code)
    {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::DegeneratePath: return "DegeneratePath";
    case ErrorCode::DriftVanishes: return "DriftVanishes";
    case ErrorCode::MissingMetadata: return "MissingMetadata";
    case ErrorCode::NotConverged: return "NotConverged";
    case ErrorCode::ConfigError: return "ConfigError";
    }
    return "Unknown";
}

/// Exception carrying a machine-readable code alongside the message.
class Error : public std::runtime_error
{
  public:
    Error (ErrorCode code, const std::string &what)
        : std::runtime_error (std::string (to_string (code)) + ": " + what), m_code (code)
    {
    }

    [[nodiscard]] ErrorCode code () const noexcept { return m_code; }

  private:
    ErrorCode m_code;
};

} // namespace tmam

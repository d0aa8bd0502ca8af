#include "redsys/error.hpp"

#include <array>
#include <utility>

namespace redsys {
namespace {

constexpr std::array<std::pair<Errc, std::string_view>, 19> kNames{{
    {Errc::kLengthMismatch, "LengthMismatch"},
    {Errc::kNonCanonical, "NonCanonical"},
    {Errc::kBadAttributeId, "BadAttributeId"},
    {Errc::kDuplicateKeyInOpAttrs, "DuplicateKeyInOpAttrs"},
    {Errc::kDuplicatePoolEntry, "DuplicatePoolEntry"},
    {Errc::kRuleOutOfBounds, "RuleOutOfBounds"},
    {Errc::kDecodeError, "DecodeError"},
    {Errc::kUnknownDoc, "UnknownDoc"},
    {Errc::kDuplicateDocId, "DuplicateDocId"},
    {Errc::kStaleBeyondHistory, "StaleBeyondHistory"},
    {Errc::kValidation, "Validation"},
    {Errc::kNoSubscriber, "NoSubscriber"},
    {Errc::kUnknownCorrelation, "UnknownCorrelation"},
    {Errc::kUnknownMatchIndex, "UnknownMatchIndex"},
    {Errc::kDictLoadError, "DictLoadError"},
    {Errc::kCorruptLog, "CorruptLog"},
    {Errc::kConnectionError, "ConnectionError"},
    {Errc::kExpectationFailed, "ExpectationFailed"},
    {Errc::kProtocol, "Protocol"},
}};

}  // namespace

std::string_view errc_name(Errc code) {
  for (const auto& [c, name] : kNames) {
    if (c == code) return name;
  }
  return "Protocol";
}

Errc errc_from_name(std::string_view name) {
  for (const auto& [c, n] : kNames) {
    if (n == name) return c;
  }
  return Errc::kProtocol;
}

Error::Error(Errc code, const std::string& detail)
    : std::runtime_error(std::string(errc_name(code)) + ": " + detail), code_(code) {}

DecodeError::DecodeError(std::size_t offset, const std::string& detail)
    : Error(Errc::kDecodeError, "at byte " + std::to_string(offset) + ": " + detail),
      offset_(offset) {}

}  // namespace redsys

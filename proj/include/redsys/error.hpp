#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace redsys {

enum class Errc {
  kLengthMismatch,
  kNonCanonical,
  kBadAttributeId,
  kDuplicateKeyInOpAttrs,
  kDuplicatePoolEntry,
  kRuleOutOfBounds,
  kDecodeError,
  kUnknownDoc,
  kDuplicateDocId,
  kStaleBeyondHistory,
  kValidation,
  kNoSubscriber,
  kUnknownCorrelation,
  kUnknownMatchIndex,
  kDictLoadError,
  kCorruptLog,
  kConnectionError,
  kExpectationFailed,
  kProtocol,
};

std::string_view errc_name(Errc code);

// Parses a name produced by errc_name(); unknown names map to kProtocol.
Errc errc_from_name(std::string_view name);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& detail);

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

// A wire or log record that could not be decoded. `offset` is the byte
// position in the input at which decoding failed.
class DecodeError : public Error {
 public:
  DecodeError(std::size_t offset, const std::string& detail);

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

}  // namespace redsys

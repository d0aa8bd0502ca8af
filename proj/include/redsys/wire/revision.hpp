#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "redsys/core/changeset.hpp"

namespace redsys::wire {

// A committed changeset in a document's history.
struct Revision {
  std::uint64_t rev = 0;
  Changeset changeset;
  std::string author_id;
  std::int64_t timestamp_ms = 0;

  bool operator==(const Revision&) const = default;
};

// Log record encoding; the changeset is serialized exactly as on the wire.
std::string encode_revision(const Revision& rev);
Revision decode_revision(std::string_view line);

}  // namespace redsys::wire

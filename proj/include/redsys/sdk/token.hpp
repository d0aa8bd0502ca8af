#pragma once

#include <atomic>
#include <cstdint>
#include <mutex>
#include <vector>

#include "redsys/core/algebra.hpp"

namespace redsys::sdk {

// Handle for work computed against one revision. It is cancelled once an
// update touches a watched range; otherwise the ranges follow the edits.
class ProcessingToken {
 public:
  ProcessingToken(std::uint64_t start_rev, std::vector<Range> ranges);

  std::uint64_t start_rev() const noexcept { return start_rev_; }
  bool cancelled() const noexcept { return cancelled_.load(); }
  void cancel() noexcept { cancelled_.store(true); }

  // Watched ranges in the coordinates of the latest observed revision.
  std::vector<Range> ranges() const;

  // `cs` applies to the document the ranges currently refer to, whose pool
  // is `pool`.
  void observe(const Changeset& cs, const AttributePool& pool);

 private:
  const std::uint64_t start_rev_;
  std::atomic<bool> cancelled_{false};
  mutable std::mutex mu_;
  std::vector<Range> ranges_;  // sorted, disjoint, non-empty
};

// Ranges moved through an edit that touches none of them: each range is
// marked with its own attribute in a keep-only changeset, which is
// transformed by follow and read back.
std::vector<Range> rebase_ranges(const std::vector<Range>& ranges, const Changeset& cs,
                                 const AttributePool& pool);

// Sorted, merged, without empty ranges.
std::vector<Range> normalize_ranges(std::vector<Range> ranges);

}  // namespace redsys::sdk

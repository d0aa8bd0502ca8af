#pragma once

#include <cstddef>
#include <vector>

#include "redsys/core/changeset.hpp"

namespace redsys {

// Half-open range of base-document character indices.
struct Range {
  std::size_t begin = 0;
  std::size_t end = 0;

  bool operator==(const Range&) const = default;
};

// compose(A, B): one changeset with the effect of A followed by B.
// `pool` is the pool A applies to; B's ids are relative to pool + A.new_pool.
Changeset compose(const Changeset& a, const Changeset& b, const AttributePool& pool);

// Transforms B (concurrent with A, same base) so it applies after A.
//
// Concurrent inserts at one position and per-key attribute conflicts are
// ordered by `b_first`: when true B's inserts land before A's and A's
// attribute values win; when false A's inserts come first and B's values
// win. follow(A, B, false) and follow(B, A, true) therefore converge.
// `pool` is the shared base pool; the result's ids are relative to
// pool + A.new_pool.
Changeset follow(const Changeset& a, const Changeset& b, bool b_first,
                 const AttributePool& pool);

// Base indices touched by non-plain-keep ops, merged and sorted. An insert
// at position p touches index p.
std::vector<Range> touched_ranges(const Changeset& cs);

// True iff some base index is touched by both changesets.
bool overlaps(const Changeset& a, const Changeset& b);

// True iff `cs` touches any index inside `ranges` (sorted, disjoint).
bool touches(const Changeset& cs, const std::vector<Range>& ranges);

}  // namespace redsys

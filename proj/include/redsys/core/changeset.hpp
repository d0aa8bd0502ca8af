#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "redsys/core/attributes.hpp"
#include "redsys/core/document.hpp"
#include "redsys/error.hpp"

namespace redsys {

enum class OpType : char { kInsert = '+', kDelete = '-', kKeep = '=' };

struct ChangeOp {
  OpType type = OpType::kKeep;
  std::size_t len = 0;
  AttrSet attrs;
  std::u32string text;  // Insert only

  static ChangeOp insert(std::u32string text, AttrSet attrs = {});
  static ChangeOp remove(std::size_t n);
  static ChangeOp keep(std::size_t n, AttrSet attrs = {});

  bool operator==(const ChangeOp&) const = default;
};

// (baseLen, newLen, newPool, ops). Ops consume the base left to right; any
// unconsumed suffix is kept unchanged. Ids at or beyond the target pool's
// size refer to newPool entries in order.
struct Changeset {
  std::size_t base_len = 0;
  std::size_t new_len = 0;
  std::vector<Attribute> new_pool;
  std::vector<ChangeOp> ops;

  bool operator==(const Changeset&) const = default;
};

Changeset identity(std::size_t len);

// Characters of the base consumed by keep and delete ops.
std::size_t consumed_len(const Changeset& cs);

bool is_identity(const Changeset& cs);

// No insert or delete ops, so the text is untouched.
bool is_attribute_only(const Changeset& cs);

std::optional<Error> validate(const Changeset& cs, const AttributePool& pool);

// Throws the first validation error, if any.
void check(const Changeset& cs, const AttributePool& pool);

// Canonical op order: no empty ops, adjacent ops of the same type and
// attribute set merged, deletes before inserts between two keeps, and no
// trailing attribute-less keep.
Changeset canonicalize(Changeset cs);

// `pool` extended by the changeset's new entries.
AttributePool extended_pool(const AttributePool& pool, const Changeset& cs);

Document apply(const Document& doc, const Changeset& cs);

// Re-expresses `cs` (ids relative to `from` + cs.new_pool) against `to`,
// which must contain every pair of `from`. Pairs missing from `to` become
// the result's new pool entries.
Changeset reintern(const Changeset& cs, const AttributePool& from, const AttributePool& to);

// Document built from an empty text by `snapshot`, whose ids refer to `pool`.
Changeset snapshot_of(const Document& doc);

}  // namespace redsys

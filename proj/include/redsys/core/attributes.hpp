#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace redsys {

struct Attribute {
  std::string key;
  std::string value;

  auto operator<=>(const Attribute&) const = default;
};

using AttributeList = std::vector<Attribute>;
using AttrId = std::uint32_t;

// Sorted, duplicate-free list of pool ids.
using AttrSet = std::vector<AttrId>;

// Append-only table of (key, value) pairs. The position of a pair is its id.
class AttributePool {
 public:
  AttributePool() = default;

  // Throws Error{DuplicatePoolEntry} if `entries` repeats a pair.
  explicit AttributePool(std::vector<Attribute> entries);

  std::size_t size() const noexcept { return entries_.size(); }
  bool contains(AttrId id) const noexcept { return id < entries_.size(); }

  // Throws Error{BadAttributeId}.
  const Attribute& at(AttrId id) const;

  std::optional<AttrId> find(const Attribute& attr) const;

  // Returns the existing id of `attr`, appending it first if absent.
  AttrId intern(const Attribute& attr);

  // Appends a pair that must not already be present.
  AttrId append(const Attribute& attr);

  // The pool as it was when it held its first `n` entries.
  AttributePool prefix(std::size_t n) const;

  const std::vector<Attribute>& entries() const noexcept { return entries_; }

  bool operator==(const AttributePool& other) const { return entries_ == other.entries_; }

 private:
  std::vector<Attribute> entries_;
  std::map<Attribute, AttrId> index_;
};

// Applies `applied` on top of `existing`: per key the applied id replaces the
// existing one, and pairs with an empty value remove their key.
AttrSet apply_attrs(std::span<const AttrId> existing, std::span<const AttrId> applied,
                    const AttributePool& pool);

// Per-key overwrite that keeps empty-valued ids. This is how two successive
// keep operations combine: a removal must survive into the composition.
AttrSet overwrite_attrs(std::span<const AttrId> existing, std::span<const AttrId> applied,
                        const AttributePool& pool);

// Drops ids from `attrs` whose key also appears in `other`.
AttrSet without_keys_of(std::span<const AttrId> attrs, std::span<const AttrId> other,
                        const AttributePool& pool);

AttributeList resolve(std::span<const AttrId> attrs, const AttributePool& pool);

}  // namespace redsys

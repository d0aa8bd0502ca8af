#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "redsys/core/changeset.hpp"

namespace redsys {

// Builds a changeset by describing the document left to right:
//
//   ChangesetBuilder b(doc.pool, doc.size());
//   b.keep(10).remove(5).insert(U"Hello World", {{"bold", "true"}});
//   Changeset cs = b.finish();
//
// Attribute pairs missing from the base pool are added to the changeset's
// new pool.
class ChangesetBuilder {
 public:
  ChangesetBuilder(const AttributePool& pool, std::size_t base_len);

  ChangesetBuilder& keep(std::size_t n, const AttributeList& attrs = {});
  ChangesetBuilder& insert(std::u32string_view text, const AttributeList& attrs = {});
  ChangesetBuilder& insert_utf8(std::string_view text, const AttributeList& attrs = {});
  ChangesetBuilder& remove(std::size_t n);

  // Keeps every character up to `pos` unchanged.
  ChangesetBuilder& keep_to(std::size_t pos);

  std::size_t position() const noexcept { return consumed_; }

  // Canonical, validated result. Throws Error{LengthMismatch} when more
  // characters were consumed than the base holds.
  Changeset finish() const;

 private:
  AttrSet intern(const AttributeList& attrs);

  AttributePool pool_;  // base pool plus entries added so far
  std::size_t base_pool_size_;
  std::size_t base_len_;
  std::size_t consumed_ = 0;
  std::vector<ChangeOp> ops_;
};

// "Apply attribute key=value from character begin to character end",
// both ends inclusive.
struct AttributeRangeRule {
  std::string key;
  std::string value;
  std::size_t begin = 0;
  std::size_t end = 0;
};

// Turns overlapping range rules into one attribute-only changeset by
// sweeping sorted add/remove events. Where rules covering a character set
// the same key, the later rule wins. Throws Error{RuleOutOfBounds}.
Changeset ranges_to_changeset(std::span<const AttributeRangeRule> rules, std::size_t doc_len,
                              const AttributePool& pool);

}  // namespace redsys

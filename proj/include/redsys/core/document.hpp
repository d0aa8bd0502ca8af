#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "redsys/core/attributes.hpp"

namespace redsys {

// Flat attributed text: every character carries a set of pool ids.
struct Document {
  std::u32string text;
  AttributePool pool;
  std::vector<AttrSet> attrs;  // attrs.size() == text.size()

  static Document from_text(std::u32string_view text);
  static Document from_utf8(std::string_view text);

  std::size_t size() const noexcept { return text.size(); }
  std::string utf8() const;

  // Attributes of character `i` as sorted (key, value) pairs.
  AttributeList attributes_at(std::size_t i) const;

  // Value of `key` on character `i`, or empty when absent.
  std::string value_at(std::size_t i, std::string_view key) const;

  bool operator==(const Document&) const = default;
};

// True when both documents have equal text and, per character, equal
// resolved attribute pairs. Pools may number the pairs differently.
bool same_content(const Document& a, const Document& b);

// Throws Error if the per-character invariants are violated.
void check_document(const Document& doc);

}  // namespace redsys

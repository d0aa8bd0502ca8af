#include "redsys/core/document.hpp"

#include <algorithm>

#include "redsys/core/utf8.hpp"
#include "redsys/error.hpp"

namespace redsys {

Document Document::from_text(std::u32string_view text) {
  Document doc;
  doc.text = std::u32string(text);
  doc.attrs.assign(text.size(), AttrSet{});
  return doc;
}

Document Document::from_utf8(std::string_view text) { return from_text(utf8::decode(text)); }

std::string Document::utf8() const { return utf8::encode(text); }

AttributeList Document::attributes_at(std::size_t i) const { return resolve(attrs.at(i), pool); }

std::string Document::value_at(std::size_t i, std::string_view key) const {
  for (AttrId id : attrs.at(i)) {
    const auto& a = pool.at(id);
    if (a.key == key) return a.value;
  }
  return {};
}

bool same_content(const Document& a, const Document& b) {
  if (a.text != b.text || a.attrs.size() != b.attrs.size()) return false;
  for (std::size_t i = 0; i < a.attrs.size(); ++i) {
    if (a.attributes_at(i) != b.attributes_at(i)) return false;
  }
  return true;
}

void check_document(const Document& doc) {
  if (doc.attrs.size() != doc.text.size()) {
    throw Error(Errc::kLengthMismatch, "attribute vector length differs from text length");
  }
  for (std::size_t i = 0; i < doc.attrs.size(); ++i) {
    const auto& set = doc.attrs[i];
    if (!std::is_sorted(set.begin(), set.end()) ||
        std::adjacent_find(set.begin(), set.end()) != set.end()) {
      throw Error(Errc::kNonCanonical, "unsorted attribute set at " + std::to_string(i));
    }
    const auto pairs = resolve(set, doc.pool);
    for (std::size_t k = 1; k < pairs.size(); ++k) {
      if (pairs[k].key == pairs[k - 1].key) {
        throw Error(Errc::kDuplicateKeyInOpAttrs,
                    "character " + std::to_string(i) + " has two values for " + pairs[k].key);
      }
    }
  }
}

}  // namespace redsys

#include "redsys/core/attributes.hpp"

#include <algorithm>

#include "redsys/error.hpp"

namespace redsys {

AttributePool::AttributePool(std::vector<Attribute> entries) {
  for (auto& e : entries) append(e);
}

const Attribute& AttributePool::at(AttrId id) const {
  if (!contains(id)) {
    throw Error(Errc::kBadAttributeId,
                "id " + std::to_string(id) + " not in pool of size " + std::to_string(size()));
  }
  return entries_[id];
}

std::optional<AttrId> AttributePool::find(const Attribute& attr) const {
  auto it = index_.find(attr);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

AttrId AttributePool::intern(const Attribute& attr) {
  if (auto id = find(attr)) return *id;
  return append(attr);
}

AttrId AttributePool::append(const Attribute& attr) {
  const auto id = static_cast<AttrId>(entries_.size());
  if (!index_.emplace(attr, id).second) {
    throw Error(Errc::kDuplicatePoolEntry, "pair (" + attr.key + "," + attr.value + ") already pooled");
  }
  entries_.push_back(attr);
  return id;
}

AttributePool AttributePool::prefix(std::size_t n) const {
  AttributePool out;
  n = std::min(n, entries_.size());
  out.entries_.assign(entries_.begin(), entries_.begin() + static_cast<std::ptrdiff_t>(n));
  for (std::size_t i = 0; i < n; ++i) out.index_.emplace(entries_[i], static_cast<AttrId>(i));
  return out;
}

namespace {

AttrSet merge(std::span<const AttrId> existing, std::span<const AttrId> applied,
              const AttributePool& pool, bool drop_empty) {
  AttrSet out;
  out.reserve(existing.size() + applied.size());
  for (AttrId id : existing) {
    const auto& key = pool.at(id).key;
    const bool replaced = std::any_of(applied.begin(), applied.end(),
                                      [&](AttrId a) { return pool.at(a).key == key; });
    if (!replaced) out.push_back(id);
  }
  for (AttrId id : applied) {
    if (drop_empty && pool.at(id).value.empty()) continue;
    out.push_back(id);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace

AttrSet apply_attrs(std::span<const AttrId> existing, std::span<const AttrId> applied,
                    const AttributePool& pool) {
  if (applied.empty()) {
    for (AttrId id : existing) pool.at(id);
    return AttrSet(existing.begin(), existing.end());
  }
  return merge(existing, applied, pool, /*drop_empty=*/true);
}

AttrSet overwrite_attrs(std::span<const AttrId> existing, std::span<const AttrId> applied,
                        const AttributePool& pool) {
  return merge(existing, applied, pool, /*drop_empty=*/false);
}

AttrSet without_keys_of(std::span<const AttrId> attrs, std::span<const AttrId> other,
                        const AttributePool& pool) {
  AttrSet out;
  for (AttrId id : attrs) {
    const auto& key = pool.at(id).key;
    const bool clash = std::any_of(other.begin(), other.end(),
                                   [&](AttrId o) { return pool.at(o).key == key; });
    if (!clash) out.push_back(id);
  }
  return out;
}

AttributeList resolve(std::span<const AttrId> attrs, const AttributePool& pool) {
  AttributeList out;
  out.reserve(attrs.size());
  for (AttrId id : attrs) out.push_back(pool.at(id));
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace redsys

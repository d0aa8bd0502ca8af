#pragma once

#include <map>
#include <random>
#include <string>
#include <vector>

#include "redsys/core/builder.hpp"
#include "redsys/core/changeset.hpp"

namespace redsys::testing {

// "Math is great": "Math " by p1, "is" bold by p2, " great" by p2. The
// index ranges are taken literally (0..4, 5..6, 7..12).
inline Document math_document() {
  Document doc = Document::from_text(U"Math is great");
  doc.pool = AttributePool({{"bold", "true"}, {"author", "p1"}, {"author", "p2"}});
  for (std::size_t i = 0; i <= 4; ++i) doc.attrs[i] = {1};
  for (std::size_t i = 5; i < 7; ++i) doc.attrs[i] = {0, 2};
  for (std::size_t i = 7; i <= 12; ++i) doc.attrs[i] = {2};
  return doc;
}

// The changeset turning the math document into "MKM is great", verbatim
// including its trailing keep of 9.
inline Changeset mkm_changeset() {
  Changeset cs;
  cs.base_len = 13;
  cs.new_len = 12;
  cs.new_pool = {{"author", ""}};
  cs.ops = {ChangeOp::keep(1, {3}), ChangeOp::remove(3), ChangeOp::insert(U"KM"),
            ChangeOp::keep(9)};
  return cs;
}

struct Rng {
  explicit Rng(std::uint64_t seed) : gen(seed) {}

  std::size_t uniform(std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(gen);
  }
  bool coin(double p = 0.5) { return std::bernoulli_distribution(p)(gen); }

  std::mt19937_64 gen;
};

inline std::u32string random_text(Rng& rng, std::size_t n) {
  static const std::u32string alphabet = U"abcxyz é\U0001D538\n";
  std::u32string out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(alphabet[rng.uniform(0, alphabet.size() - 1)]);
  return out;
}

// Up to `max_keys` distinct keys out of k0..k7; empty values only when
// `allow_empty`.
inline AttributeList random_attrs(Rng& rng, std::size_t max_keys, bool allow_empty) {
  static const char* kValues[] = {"a", "b", "c", ""};
  AttributeList out;
  const std::size_t n = rng.uniform(0, max_keys);
  std::vector<int> keys = {0, 1, 2, 3, 4, 5, 6, 7};
  std::shuffle(keys.begin(), keys.end(), rng.gen);
  for (std::size_t i = 0; i < n; ++i) {
    const char* value = kValues[rng.uniform(0, allow_empty ? 3 : 2)];
    out.push_back({"k" + std::to_string(keys[i]), value});
  }
  return out;
}

inline Document random_document(Rng& rng, std::size_t max_len) {
  Document doc = Document::from_text(random_text(rng, rng.uniform(0, max_len)));
  for (auto& set : doc.attrs) {
    for (const auto& a : random_attrs(rng, 3, false)) set.push_back(doc.pool.intern(a));
    std::sort(set.begin(), set.end());
  }
  return doc;
}

// Random edit of a document of length `base_len` over `pool`.
inline Changeset random_changeset(Rng& rng, const AttributePool& pool, std::size_t base_len) {
  ChangesetBuilder b(pool, base_len);
  std::size_t pos = 0;
  while (pos < base_len || rng.coin(0.3)) {
    if (rng.coin(0.15)) break;
    switch (rng.uniform(0, 3)) {
      case 0:
        b.insert(random_text(rng, rng.uniform(1, 4)), random_attrs(rng, 2, true));
        break;
      case 1:
        if (pos < base_len) {
          const std::size_t n = rng.uniform(1, std::min<std::size_t>(base_len - pos, 5));
          b.remove(n);
          pos += n;
        }
        break;
      default:
        if (pos < base_len) {
          const std::size_t n = rng.uniform(1, std::min<std::size_t>(base_len - pos, 8));
          b.keep(n, rng.coin(0.4) ? random_attrs(rng, 2, true) : AttributeList{});
          pos += n;
        }
        break;
    }
  }
  return b.finish();
}

// Independent model of a document: characters paired with key->value maps.
using NaiveChar = std::pair<char32_t, std::map<std::string, std::string>>;
using NaiveDoc = std::vector<NaiveChar>;

inline NaiveDoc to_naive(const Document& doc) {
  NaiveDoc out;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    std::map<std::string, std::string> m;
    for (AttrId id : doc.attrs[i]) m[doc.pool.entries()[id].key] = doc.pool.entries()[id].value;
    out.push_back({doc.text[i], m});
  }
  return out;
}

// Applies `cs` character by character without touching the library's
// attribute helpers.
inline NaiveDoc naive_apply(const NaiveDoc& doc, const std::vector<Attribute>& pool_entries,
                            const Changeset& cs) {
  std::vector<Attribute> pool = pool_entries;
  pool.insert(pool.end(), cs.new_pool.begin(), cs.new_pool.end());
  auto paint = [&](std::map<std::string, std::string> m, const AttrSet& ids) {
    for (AttrId id : ids) {
      if (pool.at(id).value.empty()) {
        m.erase(pool.at(id).key);
      } else {
        m[pool.at(id).key] = pool.at(id).value;
      }
    }
    return m;
  };
  NaiveDoc out;
  std::size_t pos = 0;
  for (const auto& op : cs.ops) {
    if (op.type == OpType::kInsert) {
      for (char32_t c : op.text) out.push_back({c, paint({}, op.attrs)});
    } else if (op.type == OpType::kDelete) {
      pos += op.len;
    } else {
      for (std::size_t i = 0; i < op.len; ++i, ++pos) {
        out.push_back({doc.at(pos).first, paint(doc.at(pos).second, op.attrs)});
      }
    }
  }
  for (; pos < doc.size(); ++pos) out.push_back(doc[pos]);
  return out;
}

}  // namespace redsys::testing

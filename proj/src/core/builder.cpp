#include "redsys/core/builder.hpp"

#include <algorithm>
#include <map>

#include "redsys/core/utf8.hpp"

namespace redsys {

ChangesetBuilder::ChangesetBuilder(const AttributePool& pool, std::size_t base_len)
    : pool_(pool), base_pool_size_(pool.size()), base_len_(base_len) {}

AttrSet ChangesetBuilder::intern(const AttributeList& attrs) {
  AttrSet ids;
  ids.reserve(attrs.size());
  for (std::size_t i = 0; i < attrs.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (attrs[j].key == attrs[i].key) {
        throw Error(Errc::kDuplicateKeyInOpAttrs, "key " + attrs[i].key + " given twice");
      }
    }
    ids.push_back(pool_.intern(attrs[i]));
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

ChangesetBuilder& ChangesetBuilder::keep(std::size_t n, const AttributeList& attrs) {
  if (n == 0) return *this;
  ops_.push_back(ChangeOp::keep(n, intern(attrs)));
  consumed_ += n;
  return *this;
}

ChangesetBuilder& ChangesetBuilder::insert(std::u32string_view text, const AttributeList& attrs) {
  if (text.empty()) return *this;
  ops_.push_back(ChangeOp::insert(std::u32string(text), intern(attrs)));
  return *this;
}

ChangesetBuilder& ChangesetBuilder::insert_utf8(std::string_view text, const AttributeList& attrs) {
  return insert(utf8::decode(text), attrs);
}

ChangesetBuilder& ChangesetBuilder::remove(std::size_t n) {
  if (n == 0) return *this;
  ops_.push_back(ChangeOp::remove(n));
  consumed_ += n;
  return *this;
}

ChangesetBuilder& ChangesetBuilder::keep_to(std::size_t pos) {
  if (pos > consumed_) keep(pos - consumed_);
  return *this;
}

Changeset ChangesetBuilder::finish() const {
  if (consumed_ > base_len_) {
    throw Error(Errc::kLengthMismatch, "builder consumed " + std::to_string(consumed_) +
                                           " characters of a base of " + std::to_string(base_len_));
  }
  Changeset cs;
  cs.base_len = base_len_;
  cs.new_len = base_len_;
  for (const auto& op : ops_) {
    if (op.type == OpType::kInsert) cs.new_len += op.len;
    if (op.type == OpType::kDelete) cs.new_len -= op.len;
  }
  cs.new_pool.assign(pool_.entries().begin() + static_cast<std::ptrdiff_t>(base_pool_size_),
                     pool_.entries().end());
  cs.ops = ops_;
  cs = canonicalize(std::move(cs));
  check(cs, pool_.prefix(base_pool_size_));
  return cs;
}

Changeset ranges_to_changeset(std::span<const AttributeRangeRule> rules, std::size_t doc_len,
                              const AttributePool& pool) {
  enum class Kind { kRemove = 0, kAdd = 1 };
  struct Event {
    std::size_t pos;
    Kind kind;
    std::size_t rule;
  };
  std::vector<Event> events;
  events.reserve(rules.size() * 2);
  for (std::size_t r = 0; r < rules.size(); ++r) {
    const auto& rule = rules[r];
    if (rule.begin > rule.end || rule.end >= doc_len) {
      throw Error(Errc::kRuleOutOfBounds, "rule " + std::to_string(r) + " [" +
                                              std::to_string(rule.begin) + "," +
                                              std::to_string(rule.end) + "] outside document of " +
                                              std::to_string(doc_len));
    }
    events.push_back({rule.begin, Kind::kAdd, r});
    events.push_back({rule.end + 1, Kind::kRemove, r});
  }
  // Removes sort before adds at equal positions; otherwise input order.
  std::stable_sort(events.begin(), events.end(), [](const Event& x, const Event& y) {
    if (x.pos != y.pos) return x.pos < y.pos;
    return x.kind < y.kind;
  });

  // Active rules by index; per key the highest index is applied.
  std::map<std::size_t, const AttributeRangeRule*> current;
  auto current_attrs = [&] {
    std::map<std::string, const AttributeRangeRule*> by_key;
    for (const auto& [index, rule] : current) by_key[rule->key] = rule;
    AttributeList attrs;
    for (const auto& [key, rule] : by_key) attrs.push_back({key, rule->value});
    return attrs;
  };

  ChangesetBuilder builder(pool, doc_len);
  std::size_t last_pos = 0;
  for (const auto& ev : events) {
    if (ev.pos > last_pos) {
      builder.keep(ev.pos - last_pos, current_attrs());
      last_pos = ev.pos;
    }
    if (ev.kind == Kind::kAdd) {
      current.emplace(ev.rule, &rules[ev.rule]);
    } else {
      current.erase(ev.rule);
    }
  }
  return builder.finish();
}

}  // namespace redsys

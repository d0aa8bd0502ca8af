#include "redsys/core/changeset.hpp"

#include <algorithm>

namespace redsys {

ChangeOp ChangeOp::insert(std::u32string text, AttrSet attrs) {
  ChangeOp op;
  op.type = OpType::kInsert;
  op.len = text.size();
  op.attrs = std::move(attrs);
  op.text = std::move(text);
  return op;
}

ChangeOp ChangeOp::remove(std::size_t n) {
  ChangeOp op;
  op.type = OpType::kDelete;
  op.len = n;
  return op;
}

ChangeOp ChangeOp::keep(std::size_t n, AttrSet attrs) {
  ChangeOp op;
  op.type = OpType::kKeep;
  op.len = n;
  op.attrs = std::move(attrs);
  return op;
}

Changeset identity(std::size_t len) {
  Changeset cs;
  cs.base_len = len;
  cs.new_len = len;
  return cs;
}

std::size_t consumed_len(const Changeset& cs) {
  std::size_t n = 0;
  for (const auto& op : cs.ops) {
    if (op.type != OpType::kInsert) n += op.len;
  }
  return n;
}

bool is_identity(const Changeset& cs) {
  if (cs.base_len != cs.new_len) return false;
  return std::all_of(cs.ops.begin(), cs.ops.end(), [](const ChangeOp& op) {
    return op.type == OpType::kKeep && op.attrs.empty();
  });
}

bool is_attribute_only(const Changeset& cs) {
  return std::all_of(cs.ops.begin(), cs.ops.end(),
                     [](const ChangeOp& op) { return op.type == OpType::kKeep; });
}

std::optional<Error> validate(const Changeset& cs, const AttributePool& pool) {
  try {
    AttributePool target = pool;
    for (const auto& entry : cs.new_pool) target.append(entry);

    std::size_t consumed = 0;
    std::size_t inserted = 0;
    std::size_t deleted = 0;
    for (std::size_t i = 0; i < cs.ops.size(); ++i) {
      const auto& op = cs.ops[i];
      const std::string where = "op " + std::to_string(i);
      if (op.len == 0) return Error(Errc::kNonCanonical, where + " has zero length");
      switch (op.type) {
        case OpType::kInsert:
          if (op.text.size() != op.len) {
            return Error(Errc::kLengthMismatch, where + " text length differs from len");
          }
          inserted += op.len;
          break;
        case OpType::kDelete:
          if (!op.attrs.empty() || !op.text.empty()) {
            return Error(Errc::kNonCanonical, where + " delete carries text or attributes");
          }
          deleted += op.len;
          consumed += op.len;
          break;
        case OpType::kKeep:
          if (!op.text.empty()) return Error(Errc::kNonCanonical, where + " keep carries text");
          consumed += op.len;
          break;
        default:
          return Error(Errc::kNonCanonical, where + " has unknown type");
      }
      if (!std::is_sorted(op.attrs.begin(), op.attrs.end()) ||
          std::adjacent_find(op.attrs.begin(), op.attrs.end()) != op.attrs.end()) {
        return Error(Errc::kNonCanonical, where + " attribute ids not sorted and unique");
      }
      for (AttrId id : op.attrs) {
        if (!target.contains(id)) {
          return Error(Errc::kBadAttributeId, where + " references id " + std::to_string(id));
        }
      }
      const auto pairs = resolve(op.attrs, target);
      for (std::size_t k = 1; k < pairs.size(); ++k) {
        if (pairs[k].key == pairs[k - 1].key) {
          return Error(Errc::kDuplicateKeyInOpAttrs, where + " sets key " + pairs[k].key + " twice");
        }
      }
      if (i > 0 && cs.ops[i - 1].type == op.type && cs.ops[i - 1].attrs == op.attrs) {
        return Error(Errc::kNonCanonical, where + " is mergeable with its predecessor");
      }
    }
    if (consumed > cs.base_len) {
      return Error(Errc::kLengthMismatch, "ops consume " + std::to_string(consumed) +
                                              " characters of a base of " +
                                              std::to_string(cs.base_len));
    }
    if (cs.new_len + deleted != cs.base_len + inserted) {
      return Error(Errc::kLengthMismatch, "newLen " + std::to_string(cs.new_len) +
                                              " inconsistent with ops");
    }
  } catch (const Error& e) {
    return e;
  }
  return std::nullopt;
}

void check(const Changeset& cs, const AttributePool& pool) {
  if (auto err = validate(cs, pool)) throw *err;
}

Changeset canonicalize(Changeset cs) {
  std::vector<ChangeOp> out;
  out.reserve(cs.ops.size());
  std::size_t pending_delete = 0;
  std::vector<ChangeOp> pending_inserts;

  auto flush = [&] {
    if (pending_delete > 0) out.push_back(ChangeOp::remove(pending_delete));
    for (auto& ins : pending_inserts) out.push_back(std::move(ins));
    pending_delete = 0;
    pending_inserts.clear();
  };

  for (auto& op : cs.ops) {
    if (op.len == 0) continue;
    switch (op.type) {
      case OpType::kDelete:
        pending_delete += op.len;
        break;
      case OpType::kInsert:
        if (!pending_inserts.empty() && pending_inserts.back().attrs == op.attrs) {
          pending_inserts.back().text += op.text;
          pending_inserts.back().len += op.len;
        } else {
          pending_inserts.push_back(std::move(op));
        }
        break;
      case OpType::kKeep: {
        const bool had_pending = pending_delete > 0 || !pending_inserts.empty();
        flush();
        if (!had_pending && !out.empty() && out.back().type == OpType::kKeep &&
            out.back().attrs == op.attrs) {
          out.back().len += op.len;
        } else {
          out.push_back(std::move(op));
        }
        break;
      }
    }
  }
  flush();
  if (!out.empty() && out.back().type == OpType::kKeep && out.back().attrs.empty()) {
    out.pop_back();
  }
  cs.ops = std::move(out);
  return cs;
}

AttributePool extended_pool(const AttributePool& pool, const Changeset& cs) {
  AttributePool out = pool;
  for (const auto& entry : cs.new_pool) out.append(entry);
  return out;
}

Document apply(const Document& doc, const Changeset& cs) {
  check(cs, doc.pool);
  if (cs.base_len != doc.size()) {
    throw Error(Errc::kLengthMismatch, "changeset base length " + std::to_string(cs.base_len) +
                                           " does not match document length " +
                                           std::to_string(doc.size()));
  }
  Document out;
  out.pool = extended_pool(doc.pool, cs);
  out.text.reserve(cs.new_len);
  out.attrs.reserve(cs.new_len);

  std::size_t pos = 0;
  for (const auto& op : cs.ops) {
    switch (op.type) {
      case OpType::kInsert: {
        const AttrSet attrs = apply_attrs({}, op.attrs, out.pool);
        out.text += op.text;
        out.attrs.insert(out.attrs.end(), op.len, attrs);
        break;
      }
      case OpType::kDelete:
        pos += op.len;
        break;
      case OpType::kKeep:
        out.text.append(doc.text, pos, op.len);
        for (std::size_t i = 0; i < op.len; ++i) {
          out.attrs.push_back(op.attrs.empty() ? doc.attrs[pos + i]
                                               : apply_attrs(doc.attrs[pos + i], op.attrs, out.pool));
        }
        pos += op.len;
        break;
    }
  }
  out.text.append(doc.text, pos, std::u32string::npos);
  out.attrs.insert(out.attrs.end(), doc.attrs.begin() + static_cast<std::ptrdiff_t>(pos),
                   doc.attrs.end());
  return out;
}

Changeset reintern(const Changeset& cs, const AttributePool& from, const AttributePool& to) {
  const AttributePool source = extended_pool(from, cs);
  AttributePool target = to;
  Changeset out;
  out.base_len = cs.base_len;
  out.new_len = cs.new_len;
  for (const auto& entry : cs.new_pool) {
    if (!target.find(entry)) {
      target.append(entry);
      out.new_pool.push_back(entry);
    }
  }
  auto map_id = [&](AttrId id) {
    const auto& pair = source.at(id);
    if (auto found = target.find(pair)) return *found;
    out.new_pool.push_back(pair);
    return target.append(pair);
  };
  out.ops.reserve(cs.ops.size());
  for (const auto& op : cs.ops) {
    ChangeOp mapped = op;
    for (auto& id : mapped.attrs) id = map_id(id);
    std::sort(mapped.attrs.begin(), mapped.attrs.end());
    out.ops.push_back(std::move(mapped));
  }
  return canonicalize(std::move(out));
}

Changeset snapshot_of(const Document& doc) {
  Changeset cs;
  cs.base_len = 0;
  cs.new_len = doc.size();
  std::size_t i = 0;
  while (i < doc.size()) {
    std::size_t j = i + 1;
    while (j < doc.size() && doc.attrs[j] == doc.attrs[i]) ++j;
    cs.ops.push_back(ChangeOp::insert(doc.text.substr(i, j - i), doc.attrs[i]));
    i = j;
  }
  return cs;
}

}  // namespace redsys

#include "redsys/core/algebra.hpp"

#include <algorithm>

namespace redsys {
namespace {

// Walks an op list plus its implicit trailing keep, handing out pieces of
// at most a requested length.
class OpCursor {
 public:
  explicit OpCursor(const Changeset& cs) : ops_(cs.ops) {
    const std::size_t tail = cs.base_len - consumed_len(cs);
    if (tail > 0) tail_ = ChangeOp::keep(tail);
  }

  bool done() const { return index_ >= ops_.size() + (tail_ ? 1 : 0); }

  OpType type() const { return current().type; }
  std::size_t remaining() const { return current().len - offset_; }

  ChangeOp take(std::size_t n) {
    const ChangeOp& op = current();
    ChangeOp piece;
    piece.type = op.type;
    piece.len = n;
    piece.attrs = op.attrs;
    if (op.type == OpType::kInsert) piece.text = op.text.substr(offset_, n);
    offset_ += n;
    if (offset_ == op.len) {
      ++index_;
      offset_ = 0;
    }
    return piece;
  }

  ChangeOp take_all() { return take(remaining()); }

 private:
  const ChangeOp& current() const { return index_ < ops_.size() ? ops_[index_] : *tail_; }

  const std::vector<ChangeOp>& ops_;
  std::optional<ChangeOp> tail_;
  std::size_t index_ = 0;
  std::size_t offset_ = 0;
};

std::size_t output_len(const Changeset& cs) {
  std::size_t n = cs.base_len;
  for (const auto& op : cs.ops) {
    if (op.type == OpType::kInsert) n += op.len;
    if (op.type == OpType::kDelete) n -= op.len;
  }
  return n;
}

Error mismatch(const char* what) { return Error(Errc::kLengthMismatch, what); }

}  // namespace

Changeset compose(const Changeset& a, const Changeset& b, const AttributePool& pool) {
  if (a.new_len != b.base_len) throw mismatch("compose: A.newLen != B.baseLen");
  AttributePool view = extended_pool(pool, a);
  for (const auto& entry : b.new_pool) view.append(entry);

  std::vector<ChangeOp> out;
  OpCursor ca(a);
  OpCursor cb(b);
  while (!ca.done() || !cb.done()) {
    if (!ca.done() && ca.type() == OpType::kDelete) {
      out.push_back(ca.take_all());
      continue;
    }
    if (!cb.done() && cb.type() == OpType::kInsert) {
      out.push_back(cb.take_all());
      continue;
    }
    if (ca.done() || cb.done()) throw mismatch("compose: ops exhausted unevenly");
    const std::size_t n = std::min(ca.remaining(), cb.remaining());
    ChangeOp pa = ca.take(n);
    ChangeOp pb = cb.take(n);
    if (pa.type == OpType::kInsert) {
      if (pb.type == OpType::kKeep) {
        out.push_back(ChangeOp::insert(std::move(pa.text), apply_attrs(pa.attrs, pb.attrs, view)));
      }
    } else if (pb.type == OpType::kDelete) {
      out.push_back(ChangeOp::remove(n));
    } else {
      out.push_back(ChangeOp::keep(n, overwrite_attrs(pa.attrs, pb.attrs, view)));
    }
  }

  Changeset c;
  c.base_len = a.base_len;
  c.new_len = b.new_len;
  c.new_pool = a.new_pool;
  c.new_pool.insert(c.new_pool.end(), b.new_pool.begin(), b.new_pool.end());
  c.ops = std::move(out);
  return canonicalize(std::move(c));
}

Changeset follow(const Changeset& a, const Changeset& b, bool b_first,
                 const AttributePool& pool) {
  if (a.base_len != b.base_len) throw mismatch("follow: base lengths differ");
  const AttributePool a_view = extended_pool(pool, a);

  // B's new entries are renumbered after A's.
  AttributePool target = a_view;
  Changeset result;
  std::vector<AttrId> remap(b.new_pool.size());
  for (std::size_t k = 0; k < b.new_pool.size(); ++k) {
    if (auto id = target.find(b.new_pool[k])) {
      remap[k] = *id;
    } else {
      remap[k] = target.append(b.new_pool[k]);
      result.new_pool.push_back(b.new_pool[k]);
    }
  }
  const auto base_size = static_cast<AttrId>(pool.size());
  auto map_attrs = [&](const AttrSet& attrs) {
    AttrSet out;
    out.reserve(attrs.size());
    for (AttrId id : attrs) out.push_back(id < base_size ? id : remap.at(id - base_size));
    std::sort(out.begin(), out.end());
    return out;
  };

  std::vector<ChangeOp> out;
  OpCursor ca(a);
  OpCursor cb(b);
  while (!ca.done() || !cb.done()) {
    const bool a_ins = !ca.done() && ca.type() == OpType::kInsert;
    const bool b_ins = !cb.done() && cb.type() == OpType::kInsert;
    if (a_ins && b_ins) {
      if (b_first) {
        ChangeOp p = cb.take_all();
        out.push_back(ChangeOp::insert(std::move(p.text), map_attrs(p.attrs)));
      } else {
        out.push_back(ChangeOp::keep(ca.take_all().len));
      }
      continue;
    }
    if (a_ins) {
      out.push_back(ChangeOp::keep(ca.take_all().len));
      continue;
    }
    if (b_ins) {
      ChangeOp p = cb.take_all();
      out.push_back(ChangeOp::insert(std::move(p.text), map_attrs(p.attrs)));
      continue;
    }
    if (ca.done() || cb.done()) throw mismatch("follow: ops exhausted unevenly");
    const std::size_t n = std::min(ca.remaining(), cb.remaining());
    ChangeOp pa = ca.take(n);
    ChangeOp pb = cb.take(n);
    if (pa.type == OpType::kDelete) continue;
    if (pb.type == OpType::kDelete) {
      out.push_back(ChangeOp::remove(n));
      continue;
    }
    AttrSet attrs = map_attrs(pb.attrs);
    if (b_first && !pa.attrs.empty()) attrs = without_keys_of(attrs, pa.attrs, target);
    out.push_back(ChangeOp::keep(n, std::move(attrs)));
  }

  result.base_len = a.new_len;
  result.ops = std::move(out);
  result.new_len = output_len(result);
  return canonicalize(std::move(result));
}

std::vector<Range> touched_ranges(const Changeset& cs) {
  std::vector<Range> out;
  auto add = [&](std::size_t begin, std::size_t end) {
    if (!out.empty() && begin <= out.back().end) {
      out.back().end = std::max(out.back().end, end);
    } else {
      out.push_back({begin, end});
    }
  };
  std::size_t pos = 0;
  for (const auto& op : cs.ops) {
    switch (op.type) {
      case OpType::kInsert:
        add(pos, pos + 1);
        break;
      case OpType::kDelete:
        add(pos, pos + op.len);
        pos += op.len;
        break;
      case OpType::kKeep:
        if (!op.attrs.empty()) add(pos, pos + op.len);
        pos += op.len;
        break;
    }
  }
  return out;
}

bool touches(const Changeset& cs, const std::vector<Range>& ranges) {
  const auto mine = touched_ranges(cs);
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < mine.size() && j < ranges.size()) {
    if (mine[i].end <= ranges[j].begin) {
      ++i;
    } else if (ranges[j].end <= mine[i].begin) {
      ++j;
    } else if (ranges[j].begin < ranges[j].end) {
      return true;
    } else {
      ++j;
    }
  }
  return false;
}

bool overlaps(const Changeset& a, const Changeset& b) {
  if (a.base_len != b.base_len) throw mismatch("overlaps: base lengths differ");
  return touches(a, touched_ranges(b));
}

}  // namespace redsys

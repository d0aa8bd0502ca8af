#include "redsys/sdk/token.hpp"

#include <algorithm>

namespace redsys::sdk {
namespace {

constexpr const char* kMarkerKey = "\x01range";

}  // namespace

std::vector<Range> normalize_ranges(std::vector<Range> ranges) {
  std::erase_if(ranges, [](const Range& r) { return r.begin >= r.end; });
  std::sort(ranges.begin(), ranges.end(), [](const Range& a, const Range& b) { return a.begin < b.begin; });
  std::vector<Range> out;
  for (const auto& r : ranges) {
    if (!out.empty() && r.begin <= out.back().end) {
      out.back().end = std::max(out.back().end, r.end);
    } else {
      out.push_back(r);
    }
  }
  return out;
}

std::vector<Range> rebase_ranges(const std::vector<Range>& ranges, const Changeset& cs,
                                 const AttributePool& pool) {
  if (ranges.empty()) return {};
  Changeset marker;
  marker.base_len = cs.base_len;
  marker.new_len = cs.base_len;
  std::size_t pos = 0;
  for (std::size_t k = 0; k < ranges.size(); ++k) {
    marker.new_pool.push_back({kMarkerKey, std::to_string(k)});
    if (ranges[k].begin > pos) marker.ops.push_back(ChangeOp::keep(ranges[k].begin - pos));
    marker.ops.push_back(ChangeOp::keep(ranges[k].end - ranges[k].begin,
                                        {static_cast<AttrId>(pool.size() + k)}));
    pos = ranges[k].end;
  }
  const Changeset moved = follow(cs, marker, false, pool);
  const AttributePool target = extended_pool(extended_pool(pool, cs), moved);

  std::vector<Range> out(ranges.size(), Range{0, 0});
  std::vector<bool> seen(ranges.size(), false);
  pos = 0;
  for (const auto& op : moved.ops) {
    if (op.type == OpType::kKeep) {
      for (AttrId id : op.attrs) {
        const auto& attr = target.at(id);
        if (attr.key != kMarkerKey) continue;
        const std::size_t k = std::stoul(attr.value);
        if (!seen[k]) out[k] = {pos, pos + op.len};
        else out[k].end = pos + op.len;
        seen[k] = true;
      }
    }
    if (op.type != OpType::kDelete) pos += op.len;
  }
  return normalize_ranges(std::move(out));
}

ProcessingToken::ProcessingToken(std::uint64_t start_rev, std::vector<Range> ranges)
    : start_rev_(start_rev), ranges_(normalize_ranges(std::move(ranges))) {}

std::vector<Range> ProcessingToken::ranges() const {
  std::lock_guard lock(mu_);
  return ranges_;
}

void ProcessingToken::observe(const Changeset& cs, const AttributePool& pool) {
  if (cancelled()) return;
  std::lock_guard lock(mu_);
  if (touches(cs, ranges_)) {
    cancel();
    return;
  }
  ranges_ = rebase_ranges(ranges_, cs, pool);
}

}  // namespace redsys::sdk

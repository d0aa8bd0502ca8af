#include "redsys/core/serialization.hpp"

#include "redsys/core/utf8.hpp"

namespace redsys {
namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& what) { throw DecodeError(0, what); }

const json& field(const json& j, const char* name) {
  if (!j.is_object()) fail(std::string("expected object holding '") + name + "'");
  auto it = j.find(name);
  if (it == j.end()) fail(std::string("missing field '") + name + "'");
  return *it;
}

std::size_t size_field(const json& j, const char* name) {
  const json& v = field(j, name);
  if (!v.is_number_unsigned()) fail(std::string("field '") + name + "' is not a non-negative integer");
  return v.get<std::size_t>();
}

std::vector<Attribute> pairs_from_json(const json& j) {
  if (!j.is_array()) fail("pool is not an array");
  std::vector<Attribute> out;
  for (const auto& e : j) {
    if (!e.is_array() || e.size() != 2 || !e[0].is_string() || !e[1].is_string()) {
      fail("pool entry is not a [key, value] pair");
    }
    out.push_back({e[0].get<std::string>(), e[1].get<std::string>()});
  }
  return out;
}

json pairs_to_json(const std::vector<Attribute>& pairs) {
  json arr = json::array();
  for (const auto& p : pairs) arr.push_back(json::array({p.key, p.value}));
  return arr;
}

}  // namespace

json changeset_to_json(const Changeset& cs) {
  json ops = json::array();
  for (const auto& op : cs.ops) {
    json o;
    o["op"] = std::string(1, static_cast<char>(op.type));
    o["len"] = op.len;
    o["attrs"] = op.attrs;
    if (op.type == OpType::kInsert) o["text"] = utf8::encode(op.text);
    ops.push_back(std::move(o));
  }
  json j;
  j["baseLen"] = cs.base_len;
  j["newLen"] = cs.new_len;
  j["newPool"] = pairs_to_json(cs.new_pool);
  j["ops"] = std::move(ops);
  return j;
}

Changeset changeset_from_json(const json& j) {
  Changeset cs;
  cs.base_len = size_field(j, "baseLen");
  cs.new_len = size_field(j, "newLen");
  cs.new_pool = pairs_from_json(field(j, "newPool"));
  const json& ops = field(j, "ops");
  if (!ops.is_array()) fail("ops is not an array");
  for (const auto& o : ops) {
    ChangeOp op;
    const json& sym = field(o, "op");
    if (!sym.is_string()) fail("op symbol is not a string");
    const auto s = sym.get<std::string>();
    if (s == "+") {
      op.type = OpType::kInsert;
    } else if (s == "-") {
      op.type = OpType::kDelete;
    } else if (s == "=") {
      op.type = OpType::kKeep;
    } else {
      fail("unknown op symbol '" + s + "'");
    }
    op.len = size_field(o, "len");
    const json& attrs = field(o, "attrs");
    if (!attrs.is_array()) fail("attrs is not an array");
    for (const auto& id : attrs) {
      if (!id.is_number_unsigned() || id.get<std::uint64_t>() > UINT32_MAX) fail("bad attribute id");
      op.attrs.push_back(id.get<AttrId>());
    }
    if (op.type == OpType::kInsert) {
      const json& text = field(o, "text");
      if (!text.is_string()) fail("insert text is not a string");
      op.text = utf8::decode(text.get<std::string>());
    } else if (o.contains("text")) {
      fail("text on a non-insert op");
    }
    cs.ops.push_back(std::move(op));
  }
  return cs;
}

json pool_to_json(const AttributePool& pool) { return pairs_to_json(pool.entries()); }

AttributePool pool_from_json(const json& j) {
  try {
    return AttributePool(pairs_from_json(j));
  } catch (const DecodeError&) {
    throw;
  } catch (const Error& e) {
    fail(e.what());
  }
}

}  // namespace redsys

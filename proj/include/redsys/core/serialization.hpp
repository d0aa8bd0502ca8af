#pragma once

#include <json.hpp>

#include "redsys/core/changeset.hpp"

namespace redsys {

// {"baseLen","newLen","newPool":[[key,value],...],"ops":[{"op","len","attrs",
// "text"?}]} with op one of "+", "-", "=".
nlohmann::json changeset_to_json(const Changeset& cs);

// Throws DecodeError on any structural problem. Does not validate against a
// pool.
Changeset changeset_from_json(const nlohmann::json& j);

nlohmann::json pool_to_json(const AttributePool& pool);
AttributePool pool_from_json(const nlohmann::json& j);

}  // namespace redsys

#include "redsys/wire/message.hpp"

#include <json.hpp>

#include "redsys/core/serialization.hpp"
#include "redsys/core/utf8.hpp"
#include "redsys/error.hpp"
#include "redsys/wire/revision.hpp"

namespace redsys::wire {
namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& what) { throw DecodeError(0, what); }

const json& field(const json& j, const char* name) {
  auto it = j.find(name);
  if (it == j.end()) fail(std::string("missing field '") + name + "'");
  return *it;
}

std::string string_field(const json& j, const char* name) {
  const json& v = field(j, name);
  if (!v.is_string()) fail(std::string("field '") + name + "' is not a string");
  std::string s = v.get<std::string>();
  utf8::decode(s);
  return s;
}

std::uint64_t uint_field(const json& j, const char* name) {
  const json& v = field(j, name);
  if (!v.is_number_unsigned()) fail(std::string("field '") + name + "' is not a non-negative integer");
  return v.get<std::uint64_t>();
}

json action_to_json(const EditAction& a) {
  return json{{"rev", a.rev}, {"changeset", changeset_to_json(a.changeset)}};
}

struct Encoder {
  json& j;

  void operator()(const Hello& m) const {
    j["clientId"] = m.client_id;
    j["role"] = std::string(role_name(m.role));
    j["subscriptions"] = m.subscriptions;
    if (m.initial_text) j["initialText"] = *m.initial_text;
  }
  void operator()(const Init& m) const {
    j["rev"] = m.rev;
    j["snapshot"] = changeset_to_json(m.snapshot);
    j["pool"] = pool_to_json(m.pool);
  }
  void operator()(const Submit& m) const {
    j["baseRev"] = m.base_rev;
    j["changeset"] = changeset_to_json(m.changeset);
  }
  void operator()(const Ack& m) const { j["newRev"] = m.new_rev; }
  void operator()(const Reject& m) const {
    j["reason"] = std::string(reason_name(m.reason));
    j["headRev"] = m.head_rev;
  }
  void operator()(const Update& m) const {
    j["rev"] = m.rev;
    j["changeset"] = changeset_to_json(m.changeset);
    j["authorId"] = m.author_id;
  }
  void operator()(const EventMessage& m) const {
    j["uri"] = m.uri;
    j["params"] = m.params;
    j["mode"] = m.mode == EventMode::kSync ? "sync" : "async";
    if (m.mode == EventMode::kSync) {
      j["correlationId"] = m.correlation_id;
      j["timeoutMs"] = m.timeout_ms;
    }
  }
  void operator()(const EventResponse& m) const {
    j["correlationId"] = m.correlation_id;
    json items = json::array();
    for (const auto& item : m.items) {
      json i{{"label", item.label}};
      if (item.action) i["action"] = action_to_json(*item.action);
      items.push_back(std::move(i));
    }
    j["items"] = std::move(items);
  }
  void operator()(const ErrorMessage& m) const {
    j["code"] = m.code;
    j["detail"] = m.detail;
  }
};

Payload decode_payload(const std::string& kind, const json& j) {
  if (kind == "Hello") {
    Hello m;
    m.client_id = string_field(j, "clientId");
    const auto role = string_field(j, "role");
    if (role == "editor") {
      m.role = Role::kEditor;
    } else if (role == "service") {
      m.role = Role::kService;
    } else {
      fail("unknown role '" + role + "'");
    }
    const json& subs = field(j, "subscriptions");
    if (!subs.is_array()) fail("subscriptions is not an array");
    for (const auto& s : subs) {
      if (!s.is_string()) fail("subscription is not a string");
      m.subscriptions.push_back(s.get<std::string>());
    }
    if (j.contains("initialText")) m.initial_text = string_field(j, "initialText");
    return m;
  }
  if (kind == "Init") {
    Init m;
    m.rev = uint_field(j, "rev");
    m.snapshot = changeset_from_json(field(j, "snapshot"));
    m.pool = pool_from_json(field(j, "pool"));
    return m;
  }
  if (kind == "Submit") {
    Submit m;
    m.base_rev = uint_field(j, "baseRev");
    m.changeset = changeset_from_json(field(j, "changeset"));
    return m;
  }
  if (kind == "Ack") return Ack{uint_field(j, "newRev")};
  if (kind == "Reject") {
    Reject m;
    const auto reason = string_field(j, "reason");
    if (reason == "MergeConflict") {
      m.reason = RejectReason::kMergeConflict;
    } else if (reason == "Validation") {
      m.reason = RejectReason::kValidation;
    } else {
      fail("unknown reject reason '" + reason + "'");
    }
    m.head_rev = uint_field(j, "headRev");
    return m;
  }
  if (kind == "Update") {
    Update m;
    m.rev = uint_field(j, "rev");
    m.changeset = changeset_from_json(field(j, "changeset"));
    m.author_id = string_field(j, "authorId");
    return m;
  }
  if (kind == "Event") {
    EventMessage m;
    m.uri = string_field(j, "uri");
    const json& params = field(j, "params");
    if (!params.is_object()) fail("params is not an object");
    for (const auto& [k, v] : params.items()) {
      if (!v.is_string()) fail("param '" + k + "' is not a string");
      m.params[k] = v.get<std::string>();
    }
    const auto mode = string_field(j, "mode");
    if (mode == "sync") {
      m.mode = EventMode::kSync;
      m.correlation_id = string_field(j, "correlationId");
      const auto timeout = uint_field(j, "timeoutMs");
      if (m.correlation_id.empty()) fail("sync event without correlationId");
      if (timeout == 0 || timeout > UINT32_MAX) fail("timeoutMs out of range");
      m.timeout_ms = static_cast<std::uint32_t>(timeout);
    } else if (mode == "async") {
      m.mode = EventMode::kAsync;
      if (j.contains("correlationId") || j.contains("timeoutMs")) {
        fail("async event carries sync fields");
      }
    } else {
      fail("unknown event mode '" + mode + "'");
    }
    return m;
  }
  if (kind == "EventResponse") {
    EventResponse m;
    m.correlation_id = string_field(j, "correlationId");
    const json& items = field(j, "items");
    if (!items.is_array()) fail("items is not an array");
    for (const auto& i : items) {
      if (!i.is_object()) fail("item is not an object");
      EventItem item;
      item.label = string_field(i, "label");
      if (i.contains("action")) {
        const json& a = i["action"];
        if (!a.is_object()) fail("action is not an object");
        item.action = EditAction{uint_field(a, "rev"), changeset_from_json(field(a, "changeset"))};
      }
      m.items.push_back(std::move(item));
    }
    return m;
  }
  if (kind == "Error") return ErrorMessage{string_field(j, "code"), string_field(j, "detail")};
  fail("unknown message kind '" + kind + "'");
}

json parse_record(std::string_view line) {
  if (!line.empty() && line.back() == '\n') line.remove_suffix(1);
  if (line.find('\n') != std::string_view::npos) {
    throw DecodeError(line.find('\n'), "record spans more than one line");
  }
  try {
    json j = json::parse(line);
    if (!j.is_object()) fail("record is not an object");
    return j;
  } catch (const json::parse_error& e) {
    throw DecodeError(e.byte > 0 ? e.byte - 1 : 0, e.what());
  }
}

template <typename F>
auto guarded(F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const DecodeError&) {
    throw;
  } catch (const Error& e) {
    throw DecodeError(0, e.what());
  } catch (const std::exception& e) {
    throw DecodeError(0, e.what());
  }
}

}  // namespace

std::string_view Message::kind() const {
  static constexpr std::string_view kKinds[] = {"Hello",  "Init",  "Submit",        "Ack",  "Reject",
                                                "Update", "Event", "EventResponse", "Error"};
  return kKinds[payload.index()];
}

std::string_view role_name(Role role) { return role == Role::kEditor ? "editor" : "service"; }

std::string_view reason_name(RejectReason reason) {
  return reason == RejectReason::kMergeConflict ? "MergeConflict" : "Validation";
}

std::string encode(const Message& msg) {
  json j;
  j["kind"] = std::string(msg.kind());
  j["docId"] = msg.doc_id;
  std::visit(Encoder{j}, msg.payload);
  return j.dump();
}

Message decode(std::string_view line) {
  return guarded([&] {
    const json j = parse_record(line);
    Message msg;
    msg.doc_id = string_field(j, "docId");
    msg.payload = decode_payload(string_field(j, "kind"), j);
    return msg;
  });
}

std::string encode_revision(const Revision& rev) {
  json j;
  j["rev"] = rev.rev;
  j["changeset"] = changeset_to_json(rev.changeset);
  j["authorId"] = rev.author_id;
  j["timestamp"] = rev.timestamp_ms;
  return j.dump();
}

Revision decode_revision(std::string_view line) {
  return guarded([&] {
    const json j = parse_record(line);
    Revision rev;
    rev.rev = uint_field(j, "rev");
    rev.changeset = changeset_from_json(field(j, "changeset"));
    rev.author_id = string_field(j, "authorId");
    const json& ts = field(j, "timestamp");
    if (!ts.is_number_integer()) fail("timestamp is not an integer");
    rev.timestamp_ms = ts.get<std::int64_t>();
    return rev;
  });
}

}  // namespace redsys::wire

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "redsys/core/changeset.hpp"

namespace redsys::wire {

enum class Role { kEditor, kService };

struct Hello {
  std::string client_id;
  Role role = Role::kEditor;
  std::vector<std::string> subscriptions;  // URI prefixes
  // Opens the document with this text when it does not exist yet.
  std::optional<std::string> initial_text;

  bool operator==(const Hello&) const = default;
};

// `snapshot` rebuilds the document from the empty text; its ids refer to
// `pool`.
struct Init {
  std::uint64_t rev = 0;
  Changeset snapshot;
  AttributePool pool;

  bool operator==(const Init&) const = default;
};

struct Submit {
  std::uint64_t base_rev = 0;
  Changeset changeset;

  bool operator==(const Submit&) const = default;
};

struct Ack {
  std::uint64_t new_rev = 0;

  bool operator==(const Ack&) const = default;
};

enum class RejectReason { kMergeConflict, kValidation };

struct Reject {
  RejectReason reason = RejectReason::kMergeConflict;
  std::uint64_t head_rev = 0;

  bool operator==(const Reject&) const = default;
};

struct Update {
  std::uint64_t rev = 0;
  Changeset changeset;
  std::string author_id;

  bool operator==(const Update&) const = default;
};

enum class EventMode { kSync, kAsync };

// A URI-addressed interaction such as "autocomplete.stex". Sync events
// carry a correlation id and a timeout; async events carry neither.
struct EventMessage {
  std::string uri;
  std::map<std::string, std::string> params;
  EventMode mode = EventMode::kAsync;
  std::string correlation_id;
  std::uint32_t timeout_ms = 0;

  bool operator==(const EventMessage&) const = default;
};

// An edit offered by a service, based on revision `rev`. The changeset
// carries every attribute pair it uses in its own new pool.
struct EditAction {
  std::uint64_t rev = 0;
  Changeset changeset;

  bool operator==(const EditAction&) const = default;
};

struct EventItem {
  std::string label;
  std::optional<EditAction> action;

  bool operator==(const EventItem&) const = default;
};

struct EventResponse {
  std::string correlation_id;
  std::vector<EventItem> items;

  bool operator==(const EventResponse&) const = default;
};

struct ErrorMessage {
  std::string code;
  std::string detail;

  bool operator==(const ErrorMessage&) const = default;
};

using Payload = std::variant<Hello, Init, Submit, Ack, Reject, Update, EventMessage, EventResponse,
                             ErrorMessage>;

struct Message {
  std::string doc_id;
  Payload payload;

  std::string_view kind() const;

  template <typename T>
  const T* as() const {
    return std::get_if<T>(&payload);
  }

  bool operator==(const Message&) const = default;
};

// One JSON record, without the trailing newline.
std::string encode(const Message& msg);

// Accepts one record, optionally newline-terminated. Throws DecodeError for
// anything else, including unknown kinds; never throws other exceptions.
Message decode(std::string_view line);

std::string_view role_name(Role role);
std::string_view reason_name(RejectReason reason);

}  // namespace redsys::wire

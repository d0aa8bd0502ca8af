#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "redsys/core/document.hpp"
#include "redsys/wire/message.hpp"
#include "redsys/wire/revision.hpp"

namespace redsys::broker {

using SessionId = std::uint64_t;

// Outbound side of a connection. send() must not block on the peer.
class Peer {
 public:
  virtual ~Peer() = default;
  virtual void send(const wire::Message& msg) = 0;
};

struct BrokerOptions {
  std::chrono::milliseconds event_timeout{1000};  // default for sync events
  std::optional<std::size_t> history_limit;
  std::optional<std::filesystem::path> log_dir;
  // Sees every message in processing order: inbound before it is handled,
  // outbound as it is handed to the peer.
  std::function<void(const std::string& client_id, bool inbound, const std::string& line)> transcript;
};

using SubmitResult = std::variant<wire::Ack, wire::Reject>;
using EventCompletion = std::function<void(wire::EventResponse)>;

// Holds the shared documents, serializes their revisions, merges stale
// submissions and routes interaction events between editors and services.
//
// Every document has its own lock; commits to one document never
// interleave, and peers receive updates in commit order.
class Broker {
 public:
  explicit Broker(BrokerOptions options = {});
  ~Broker();

  Broker(const Broker&) = delete;
  Broker& operator=(const Broker&) = delete;

  // Revision 0 inserts `initial_text` into the empty document.
  void open_document(const std::string& doc_id, std::u32string_view initial_text,
                     const std::string& author_id = "");

  // Commits `cs` (based on `base_rev`) or rejects it when the revisions since
  // then overlap it. Updates go to every session except those of `author_id`.
  SubmitResult submit(const std::string& doc_id, const std::string& author_id,
                      std::uint64_t base_rev, const Changeset& cs);

  wire::Init snapshot_for(const std::string& doc_id) const;
  Document head(const std::string& doc_id) const;
  std::uint64_t head_rev(const std::string& doc_id) const;
  std::vector<wire::Revision> history(const std::string& doc_id) const;
  bool has_document(const std::string& doc_id) const;

  // Async events are forwarded and `done` is never called. Sync events call
  // `done` once every matching service answered or the timeout elapsed.
  // Throws Error{UnknownDoc} and, for sync events without a matching
  // service, Error{NoSubscriber}.
  void dispatch_event(const std::string& doc_id, const wire::EventMessage& ev,
                      EventCompletion done);

  // Blocking form of dispatch_event; nullopt for async events.
  std::optional<wire::EventResponse> dispatch_event_and_wait(const std::string& doc_id,
                                                             const wire::EventMessage& ev);

  SessionId attach(std::shared_ptr<Peer> peer);
  void handle(SessionId session, const wire::Message& msg);
  void detach(SessionId session);

  std::size_t session_count() const;
  // Sessions that said Hello for `doc_id`, including parked services.
  std::size_t sessions_for(const std::string& doc_id) const;

 private:
  struct Member {
    SessionId id;
    std::shared_ptr<Peer> peer;
    std::string client_id;
    wire::Role role;
    std::vector<std::string> subscriptions;
  };
  struct RevisionMeta {
    std::size_t length;     // document length after the revision
    std::size_t pool_size;  // pool size after the revision
  };
  struct DocState {
    std::string doc_id;
    mutable std::mutex mu;
    Document head;
    std::uint64_t head_rev = 0;
    std::vector<wire::Revision> history;  // retained suffix, oldest first
    std::vector<RevisionMeta> meta;       // one entry per revision ever committed
    std::vector<Member> members;          // attach order
    std::unique_ptr<std::ofstream> log;
  };
  struct SessionState {
    std::shared_ptr<Peer> peer;
    std::string client_id;
    wire::Role role = wire::Role::kEditor;
    std::vector<std::string> subscriptions;
    std::string doc_id;
    bool joined = false;
    bool parked = false;
  };
  struct PendingEvent {
    std::vector<SessionId> expected;
    std::map<SessionId, std::vector<wire::EventItem>> answers;
    std::chrono::steady_clock::time_point deadline;
    EventCompletion done;
    std::string original_correlation;
  };

  std::shared_ptr<DocState> find_doc(const std::string& doc_id) const;
  std::shared_ptr<DocState> create_doc_locked(const std::string& doc_id,
                                              std::u32string_view initial_text,
                                              const std::string& author_id);
  void join_locked(DocState& doc, SessionId id, const SessionState& s);
  SubmitResult commit_locked(DocState& doc, const std::string& author_id,
                             std::optional<SessionId> author_session, std::uint64_t base_rev,
                             const Changeset& cs);
  void append_log_locked(DocState& doc, const wire::Revision& rev);
  wire::Init snapshot_locked(const DocState& doc) const;
  void send(const std::shared_ptr<Peer>& peer, const std::string& client_id,
            const wire::Message& msg) const;
  void record(const std::string& client_id, bool inbound, const wire::Message& msg) const;

  void handle_hello(SessionId id, const std::string& doc_id, const wire::Hello& hello);
  void handle_event_response(SessionId id, const wire::EventResponse& resp);
  void finish_event(const std::string& correlation);
  void timer_loop();

  BrokerOptions options_;

  mutable std::mutex mu_;  // sessions_, docs_, next ids; taken before any DocState::mu
  std::map<SessionId, SessionState> sessions_;
  std::map<std::string, std::shared_ptr<DocState>> docs_;
  SessionId next_session_ = 1;

  std::mutex events_mu_;
  std::condition_variable events_cv_;
  std::map<std::string, PendingEvent> events_;
  std::uint64_t next_event_ = 1;
  bool stopping_ = false;

  mutable std::mutex transcript_mu_;
  std::thread timer_;
};

// <dir>/<doc id>.log with characters outside [A-Za-z0-9._-] percent-encoded.
std::filesystem::path log_path(const std::filesystem::path& dir, const std::string& doc_id);

// Folds a revision log from the empty document; an empty log gives the
// empty document. Throws Error{CorruptLog} naming the 1-based line that
// failed.
Document replay_log(const std::filesystem::path& path);

}  // namespace redsys::broker

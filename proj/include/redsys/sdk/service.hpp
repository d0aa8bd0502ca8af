#pragma once

#include <atomic>
#include <condition_variable>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "redsys/sdk/link.hpp"
#include "redsys/sdk/sync_state.hpp"
#include "redsys/sdk/token.hpp"

namespace redsys::sdk {

class ServiceSession;

// Callbacks of a service. The session never runs two of them at once;
// long work belongs on another thread, guarded by a ProcessingToken and
// handed back with ServiceSession::post.
class ServiceHandler {
 public:
  virtual ~ServiceHandler() = default;

  virtual std::vector<std::string> subscriptions() const { return {}; }
  virtual void on_init(ServiceSession&) {}
  // `change` took view() from its previous state to the current one; its
  // ids are relative to the previous pool.
  virtual void on_update(ServiceSession&, const Changeset& /*change*/, const std::string& /*author*/) {}
  // Items are returned to the broker for sync events and dropped for async.
  // Action changesets are relative to view().pool.
  virtual std::vector<wire::EventItem> on_event(ServiceSession&, const wire::EventMessage&) { return {}; }
  virtual void on_ack(ServiceSession&, std::uint64_t /*rev*/) {}
  virtual void on_reject(ServiceSession&, const wire::Reject&) {}
  // Called before the session goes away; background work must stop posting.
  virtual void shutdown() {}
};

// One service attached to one document. Messages and posted tasks run on a
// single executor, either the caller of run_pending() or the thread in run().
class ServiceSession {
 public:
  using Sender = std::function<void(const wire::Message&)>;

  ServiceSession(std::string client_id, std::string doc_id, ServiceHandler& handler, Sender sender);

  // Sends Hello.
  void start();

  // Thread-safe.
  void deliver(wire::Message msg);
  void post(std::function<void()> task);

  std::size_t run_pending();
  // Runs tasks until stop() is called.
  void run();
  void stop();

  // Executor-only API.
  const std::string& client_id() const noexcept { return client_id_; }
  const std::string& doc_id() const noexcept { return doc_id_; }
  bool ready() const noexcept { return state_.ready(); }
  const Document& view() const noexcept { return state_.display(); }
  std::uint64_t rev() const noexcept { return state_.rev(); }
  bool in_flight() const noexcept { return state_.in_flight(); }
  AttributePool pool_at(std::uint64_t rev) const { return state_.pool_at(rev); }
  std::size_t length_at(std::uint64_t rev) const { return state_.length_at(rev); }

  // Set when the session stopped because the broker's state was unusable.
  const std::optional<std::string>& failure() const noexcept { return failure_; }

  // Submits `cs`, based on `base_rev`. False when a submission is in flight.
  bool submit(std::uint64_t base_rev, Changeset cs);

  // A token over ranges of view() at rev().
  std::shared_ptr<ProcessingToken> watch(std::vector<Range> ranges);

 private:
  void process(const wire::Message& msg);
  void observe(const Changeset& change, const AttributePool& pool_before);
  void resync();

  const std::string client_id_;
  const std::string doc_id_;
  ServiceHandler& handler_;
  Sender sender_;
  SyncState state_;
  std::vector<std::weak_ptr<ProcessingToken>> tokens_;
  std::optional<std::string> failure_;

  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<std::function<void()>> tasks_;
  bool stopping_ = false;
};

// A service session connected over the network, with its executor thread.
class ServiceRunner {
 public:
  ServiceRunner(std::string_view address, std::string doc_id, std::string client_id, ServiceHandler& handler);
  ~ServiceRunner();

  ServiceSession& session() { return *session_; }
  // Blocks until the connection closes or stop() is called.
  void wait();
  void stop();

 private:
  ServiceHandler& handler_;
  std::unique_ptr<MessageLink> link_;
  std::unique_ptr<ServiceSession> session_;
  std::thread pump_;
  std::thread executor_;
  std::atomic<bool> stopped_{false};
};

}  // namespace redsys::sdk

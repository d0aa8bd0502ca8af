#pragma once

#include <chrono>
#include <condition_variable>
#include <memory>
#include <mutex>
#include <string>
#include <thread>

#include "redsys/sdk/service.hpp"
#include "redsys/services/analysis.hpp"

namespace redsys::services {

// A reactive service owning an attribute layer. It recomputes the layer on
// the current view whenever nothing of its own is in flight and submits the
// difference at the current revision.
class LayerService : public sdk::ServiceHandler {
 public:
  void on_init(sdk::ServiceSession& s) override;
  void on_update(sdk::ServiceSession& s, const Changeset& change, const std::string& author) override;
  void on_ack(sdk::ServiceSession& s, std::uint64_t rev) override;
  void on_reject(sdk::ServiceSession& s, const wire::Reject& reject) override;

  std::size_t submissions() const noexcept { return submissions_; }

 protected:
  explicit LayerService(std::vector<std::string> shared_keys);
  virtual Layer compute(const Document& view) = 0;

 private:
  void pump(sdk::ServiceSession& s);

  LayerTracker tracker_;
  bool dirty_ = false;
  std::size_t submissions_ = 0;
};

class Highlighter : public LayerService {
 public:
  Highlighter();

 protected:
  Layer compute(const Document& view) override;
};

class Hider : public LayerService {
 public:
  Hider();

 protected:
  Layer compute(const Document& view) override;
};

class Transclusion : public LayerService {
 public:
  Transclusion();

 protected:
  Layer compute(const Document& view) override;
};

// The time-consuming term spotter: it spots on the revision current when a
// job starts, waits `latency` off the executor, and submits against that
// revision. A token cancels the job when an edit touches its spans, unless
// `keep_stale` is set, in which case the broker decides.
class Spotter : public sdk::ServiceHandler {
 public:
  struct Options {
    Dictionary dictionary;
    std::chrono::milliseconds latency{0};
    bool keep_stale = false;
  };

  explicit Spotter(Options options);
  ~Spotter() override;

  std::vector<std::string> subscriptions() const override;
  void on_init(sdk::ServiceSession& s) override;
  void on_update(sdk::ServiceSession& s, const Changeset& change, const std::string& author) override;
  std::vector<wire::EventItem> on_event(sdk::ServiceSession& s, const wire::EventMessage& ev) override;
  void on_ack(sdk::ServiceSession& s, std::uint64_t rev) override;
  void on_reject(sdk::ServiceSession& s, const wire::Reject& reject) override;
  void shutdown() override;

  std::size_t cancelled_jobs() const noexcept { return cancelled_jobs_; }

 private:
  void pump(sdk::ServiceSession& s);
  void finish(sdk::ServiceSession& s, const std::shared_ptr<sdk::ProcessingToken>& token, std::uint64_t rev,
              Changeset cs);

  Options options_;
  bool dirty_ = false;
  bool job_active_ = false;
  std::size_t cancelled_jobs_ = 0;

  std::mutex mu_;
  std::condition_variable cv_;
  bool stopping_ = false;
  std::thread worker_;
};

// Completes backslash commands at the cursor for "autocomplete.stex".
// The cursor is given as `pos` (character offset) or `line` and `col`
// (0-based).
class Autocomplete : public sdk::ServiceHandler {
 public:
  std::vector<std::string> subscriptions() const override;
  std::vector<wire::EventItem> on_event(sdk::ServiceSession& s, const wire::EventMessage& ev) override;
};

// Cursor offset from event parameters, if valid for `doc`.
std::optional<std::size_t> cursor_position(const Document& doc, const std::map<std::string, std::string>& params);

}  // namespace redsys::services

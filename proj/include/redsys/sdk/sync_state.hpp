#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <string>

#include "redsys/core/document.hpp"
#include "redsys/wire/message.hpp"

namespace redsys::sdk {

// Client-side mirror of one shared document.
//
// committed is the broker head at rev(); sent is the local change awaiting
// its Ack; pending collects local edits not yet sent. The displayed
// document equals apply(apply(committed, sent), pending) and keeps its own
// append-only pool, so callers may hold ids across updates.
//
// Services may instead submit a changeset based on an older revision
// (submit_at); on Ack it is rebased locally exactly as the broker did.
class SyncState {
 public:
  struct Step {
    bool resync = false;               // revision gap; request a fresh Init
    std::optional<Changeset> display;  // change to display(), ids relative to its pool before
  };

  struct RejectStep {
    bool resync = false;
    std::optional<wire::Submit> resubmit;
  };

  // Keeps at most this many revisions for rebasing stale submissions.
  explicit SyncState(std::size_t history_limit = 4096);

  void reset(const wire::Init& init);
  bool ready() const noexcept { return ready_; }

  std::uint64_t rev() const noexcept { return rev_; }
  const Document& committed() const noexcept { return committed_; }
  const Document& display() const noexcept { return display_; }

  bool in_flight() const noexcept { return sent_.has_value() || raw_.has_value(); }
  bool has_pending() const;

  // `cs` applies to display(); ids relative to display().pool.
  void local_edit(const Changeset& cs);

  // Re-expresses `cs`, based on `base_rev` and relative to pool_at(base_rev),
  // against display(), as if it had been made concurrently with everything
  // since. Throws Error{StaleBeyondHistory}.
  Changeset rebase_to_display(std::uint64_t base_rev, Changeset cs) const;

  // Moves pending into sent when nothing is in flight.
  std::optional<wire::Submit> next_submit();

  // Sends `cs`, based on `base_rev` and relative to pool_at(base_rev), as is.
  // Requires nothing in flight and no pending edits.
  wire::Submit submit_at(std::uint64_t base_rev, Changeset cs);

  Step on_update(const wire::Update& update);
  Step on_ack(const wire::Ack& ack);
  // Sent changes are resubmitted against the current revision; a rejected
  // submit_at changeset is dropped.
  RejectStep on_reject(const wire::Reject& reject);

  // Committed pool and length as of `rev`; throws Error{StaleBeyondHistory}.
  AttributePool pool_at(std::uint64_t rev) const;
  std::size_t length_at(std::uint64_t rev) const;

 private:
  struct Entry {
    std::uint64_t rev;  // revision produced by cs
    Changeset cs;
    std::size_t pool_before;
    std::size_t length_before;
  };
  struct Raw {
    std::uint64_t base_rev;
    Changeset cs;
  };

  Step apply_committed(const Changeset& u, std::uint64_t rev);
  const Entry& entry(std::uint64_t rev) const;

  std::size_t history_limit_;
  bool ready_ = false;
  std::uint64_t rev_ = 0;
  Document committed_;
  std::optional<Changeset> sent_;  // relative to committed_.pool
  std::optional<Raw> raw_;
  Changeset pending_;              // relative to committed_.pool + sent_.new_pool
  Document display_;
  std::deque<Entry> history_;
};

}  // namespace redsys::sdk

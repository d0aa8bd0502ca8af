#include "redsys/sdk/sync_state.hpp"

#include "redsys/core/algebra.hpp"
#include "redsys/error.hpp"

namespace redsys::sdk {

SyncState::SyncState(std::size_t history_limit) : history_limit_(std::max<std::size_t>(history_limit, 1)) {}

void SyncState::reset(const wire::Init& init) {
  Document empty;
  empty.pool = init.pool;
  committed_ = apply(empty, init.snapshot);
  rev_ = init.rev;
  sent_.reset();
  raw_.reset();
  pending_ = identity(committed_.size());
  display_ = committed_;
  history_.clear();
  ready_ = true;
}

bool SyncState::has_pending() const { return !is_identity(pending_); }

void SyncState::local_edit(const Changeset& cs) {
  const AttributePool base = sent_ ? extended_pool(committed_.pool, *sent_) : committed_.pool;
  const Changeset mapped = reintern(cs, display_.pool, extended_pool(base, pending_));
  display_ = apply(display_, cs);
  pending_ = compose(pending_, mapped, base);
}

Changeset SyncState::rebase_to_display(std::uint64_t base_rev, Changeset cs) const {
  if (base_rev > rev_) throw Error(Errc::kValidation, "base revision is ahead of the mirror");
  for (std::uint64_t r = base_rev + 1; r <= rev_; ++r) {
    const Entry& e = entry(r);
    cs = follow(e.cs, cs, true, committed_.pool.prefix(e.pool_before));
  }
  AttributePool base = committed_.pool;
  if (sent_) {
    cs = follow(*sent_, cs, true, base);
    base = extended_pool(base, *sent_);
  }
  cs = follow(pending_, cs, true, base);
  return reintern(cs, extended_pool(base, pending_), display_.pool);
}

std::optional<wire::Submit> SyncState::next_submit() {
  if (!ready_ || in_flight() || is_identity(pending_)) return std::nullopt;
  sent_ = pending_;
  pending_ = identity(pending_.new_len);
  return wire::Submit{rev_, *sent_};
}

wire::Submit SyncState::submit_at(std::uint64_t base_rev, Changeset cs) {
  if (in_flight() || has_pending()) throw Error(Errc::kProtocol, "a submission is already in flight");
  if (base_rev > rev_) throw Error(Errc::kValidation, "base revision is ahead of the mirror");
  raw_ = Raw{base_rev, cs};
  return wire::Submit{base_rev, std::move(cs)};
}

const SyncState::Entry& SyncState::entry(std::uint64_t rev) const {
  if (history_.empty() || rev < history_.front().rev || rev > history_.back().rev) {
    throw Error(Errc::kStaleBeyondHistory, "revision " + std::to_string(rev) + " not retained");
  }
  return history_[static_cast<std::size_t>(rev - history_.front().rev)];
}

AttributePool SyncState::pool_at(std::uint64_t rev) const {
  if (rev == rev_) return committed_.pool;
  return committed_.pool.prefix(entry(rev + 1).pool_before);
}

std::size_t SyncState::length_at(std::uint64_t rev) const {
  if (rev == rev_) return committed_.size();
  return entry(rev + 1).length_before;
}

SyncState::Step SyncState::apply_committed(const Changeset& u, std::uint64_t rev) {
  const AttributePool& p = committed_.pool;
  Changeset u_for_pending = u;
  AttributePool base = p;
  if (sent_) {
    base = extended_pool(p, *sent_);
    u_for_pending = follow(*sent_, u, false, p);
    sent_ = follow(u, *sent_, true, p);
  }
  const Changeset x = follow(pending_, u_for_pending, false, base);
  const Changeset rebased_pending = follow(u_for_pending, pending_, true, base);
  const AttributePool pending_from = extended_pool(base, u_for_pending);
  const AttributePool x_from = extended_pool(base, pending_);

  history_.push_back(Entry{rev, u, p.size(), committed_.size()});
  while (history_.size() > history_limit_) history_.pop_front();
  committed_ = apply(committed_, u);
  rev_ = rev;

  const AttributePool new_base = sent_ ? extended_pool(committed_.pool, *sent_) : committed_.pool;
  pending_ = reintern(rebased_pending, pending_from, new_base);

  Step step;
  step.display = reintern(x, x_from, display_.pool);
  display_ = apply(display_, *step.display);
  return step;
}

SyncState::Step SyncState::on_update(const wire::Update& update) {
  if (!ready_) return {};
  if (update.rev <= rev_) return {};
  if (update.rev != rev_ + 1) {
    ready_ = false;
    return Step{true, std::nullopt};
  }
  if (update.changeset.base_len != committed_.size() || validate(update.changeset, committed_.pool)) {
    ready_ = false;
    return Step{true, std::nullopt};
  }
  return apply_committed(update.changeset, update.rev);
}

SyncState::Step SyncState::on_ack(const wire::Ack& ack) {
  if (!ready_) return {};
  if (ack.new_rev != rev_ + 1) {
    ready_ = false;
    return Step{true, std::nullopt};
  }
  if (sent_) {
    const Changeset sent = std::move(*sent_);
    sent_.reset();
    history_.push_back(Entry{ack.new_rev, sent, committed_.pool.size(), committed_.size()});
    while (history_.size() > history_limit_) history_.pop_front();
    committed_ = apply(committed_, sent);
    rev_ = ack.new_rev;
    return {};
  }
  if (raw_) {
    Raw raw = std::move(*raw_);
    raw_.reset();
    Changeset cs = std::move(raw.cs);
    try {
      for (std::uint64_t r = raw.base_rev + 1; r <= rev_; ++r) {
        const Entry& e = entry(r);
        cs = follow(e.cs, cs, true, committed_.pool.prefix(e.pool_before));
      }
    } catch (const Error&) {
      ready_ = false;
      return Step{true, std::nullopt};
    }
    return apply_committed(cs, ack.new_rev);
  }
  ready_ = false;
  return Step{true, std::nullopt};
}

SyncState::RejectStep SyncState::on_reject(const wire::Reject& reject) {
  if (!ready_) return {};
  if (raw_) {
    raw_.reset();
    return {};
  }
  if (!sent_ || reject.reason != wire::RejectReason::kMergeConflict || reject.head_rev != rev_) {
    ready_ = false;
    return RejectStep{true, std::nullopt};
  }
  return RejectStep{false, wire::Submit{rev_, *sent_}};
}

}  // namespace redsys::sdk

#include "redsys/broker/broker.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <future>
#include <iomanip>
#include <sstream>

#include "redsys/core/algebra.hpp"
#include "redsys/core/utf8.hpp"
#include "redsys/error.hpp"

namespace redsys::broker {
namespace {

std::int64_t now_ms() {
  using namespace std::chrono;
  return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

bool subscribed(const std::vector<std::string>& prefixes, const std::string& uri) {
  return std::any_of(prefixes.begin(), prefixes.end(),
                     [&](const std::string& p) { return uri.compare(0, p.size(), p) == 0; });
}

wire::Message error_message(const std::string& doc_id, Errc code, const std::string& detail) {
  return wire::Message{doc_id, wire::ErrorMessage{std::string(errc_name(code)), detail}};
}

}  // namespace

Broker::Broker(BrokerOptions options) : options_(std::move(options)) {
  timer_ = std::thread([this] { timer_loop(); });
}

Broker::~Broker() {
  {
    std::lock_guard lock(events_mu_);
    stopping_ = true;
  }
  events_cv_.notify_all();
  timer_.join();
}

void Broker::record(const std::string& client_id, bool inbound, const wire::Message& msg) const {
  if (!options_.transcript) return;
  std::lock_guard lock(transcript_mu_);
  options_.transcript(client_id, inbound, wire::encode(msg));
}

void Broker::send(const std::shared_ptr<Peer>& peer, const std::string& client_id,
                  const wire::Message& msg) const {
  if (!peer) return;
  record(client_id, false, msg);
  peer->send(msg);
}

std::shared_ptr<Broker::DocState> Broker::find_doc(const std::string& doc_id) const {
  std::lock_guard lock(mu_);
  auto it = docs_.find(doc_id);
  if (it == docs_.end()) throw Error(Errc::kUnknownDoc, "unknown document '" + doc_id + "'");
  return it->second;
}

std::shared_ptr<Broker::DocState> Broker::create_doc_locked(const std::string& doc_id,
                                                            std::u32string_view initial_text,
                                                            const std::string& author_id) {
  if (docs_.count(doc_id)) throw Error(Errc::kDuplicateDocId, "document '" + doc_id + "' exists");
  auto doc = std::make_shared<DocState>();
  doc->doc_id = doc_id;
  Changeset first = identity(0);
  if (!initial_text.empty()) {
    first.new_len = initial_text.size();
    first.ops.push_back(ChangeOp::insert(std::u32string(initial_text)));
  }
  doc->head = apply(Document{}, first);
  doc->head_rev = 0;
  wire::Revision rev{0, first, author_id, now_ms()};
  doc->meta.push_back({doc->head.size(), doc->head.pool.size()});
  if (options_.log_dir) {
    std::filesystem::create_directories(*options_.log_dir);
    auto path = log_path(*options_.log_dir, doc_id);
    doc->log = std::make_unique<std::ofstream>(path, std::ios::trunc);
    if (!*doc->log) throw Error(Errc::kProtocol, "cannot open log " + path.string());
  }
  append_log_locked(*doc, rev);
  doc->history.push_back(std::move(rev));
  docs_[doc_id] = doc;
  return doc;
}

void Broker::append_log_locked(DocState& doc, const wire::Revision& rev) {
  if (!doc.log) return;
  *doc.log << wire::encode_revision(rev) << '\n';
  doc.log->flush();
}

void Broker::open_document(const std::string& doc_id, std::u32string_view initial_text,
                           const std::string& author_id) {
  std::lock_guard lock(mu_);
  auto doc = create_doc_locked(doc_id, initial_text, author_id);
  std::lock_guard doc_lock(doc->mu);
  for (auto& [id, s] : sessions_) {
    if (s.parked && s.doc_id == doc_id) {
      s.parked = false;
      s.joined = true;
      join_locked(*doc, id, s);
    }
  }
}

wire::Init Broker::snapshot_locked(const DocState& doc) const {
  return wire::Init{doc.head_rev, snapshot_of(doc.head), doc.head.pool};
}

void Broker::join_locked(DocState& doc, SessionId id, const SessionState& s) {
  auto it = std::find_if(doc.members.begin(), doc.members.end(),
                         [&](const Member& m) { return m.id == id; });
  if (it == doc.members.end()) {
    doc.members.push_back(Member{id, s.peer, s.client_id, s.role, s.subscriptions});
    std::sort(doc.members.begin(), doc.members.end(),
              [](const Member& a, const Member& b) { return a.id < b.id; });
  } else {
    it->client_id = s.client_id;
    it->role = s.role;
    it->subscriptions = s.subscriptions;
  }
  send(s.peer, s.client_id, wire::Message{doc.doc_id, snapshot_locked(doc)});
}

SubmitResult Broker::commit_locked(DocState& doc, const std::string& author_id,
                                   std::optional<SessionId> author_session, std::uint64_t base_rev,
                                   const Changeset& cs) {
  if (base_rev > doc.head_rev) return wire::Reject{wire::RejectReason::kValidation, doc.head_rev};
  const std::uint64_t oldest = doc.history.front().rev;
  if (base_rev + 1 < oldest) {
    throw Error(Errc::kStaleBeyondHistory, "base revision " + std::to_string(base_rev) +
                                               " is older than retained history");
  }
  const RevisionMeta& at_base = doc.meta[base_rev];
  const AttributePool base_pool = doc.head.pool.prefix(at_base.pool_size);
  if (cs.base_len != at_base.length || validate(cs, base_pool)) {
    return wire::Reject{wire::RejectReason::kValidation, doc.head_rev};
  }

  Changeset rebased = cs;
  if (base_rev < doc.head_rev) {
    const std::size_t first = static_cast<std::size_t>(base_rev + 1 - oldest);
    Changeset since = doc.history[first].changeset;
    for (std::size_t i = first + 1; i < doc.history.size(); ++i) {
      since = compose(since, doc.history[i].changeset, base_pool);
    }
    if (overlaps(since, cs)) return wire::Reject{wire::RejectReason::kMergeConflict, doc.head_rev};
    for (std::size_t i = first; i < doc.history.size(); ++i) {
      const auto pool = doc.head.pool.prefix(doc.meta[doc.history[i].rev - 1].pool_size);
      rebased = follow(doc.history[i].changeset, rebased, true, pool);
    }
  } else {
    rebased = canonicalize(reintern(cs, doc.head.pool, doc.head.pool));
  }

  doc.head = apply(doc.head, rebased);
  doc.head_rev += 1;
  doc.meta.push_back({doc.head.size(), doc.head.pool.size()});
  wire::Revision rev{doc.head_rev, rebased, author_id, now_ms()};
  append_log_locked(doc, rev);
  doc.history.push_back(rev);
  if (options_.history_limit && doc.history.size() > std::max<std::size_t>(*options_.history_limit, 1)) {
    doc.history.erase(doc.history.begin());
  }

  const wire::Message update{doc.doc_id, wire::Update{rev.rev, rebased, author_id}};
  for (const auto& m : doc.members) {
    if (author_session ? m.id == *author_session : m.client_id == author_id) continue;
    send(m.peer, m.client_id, update);
  }
  return wire::Ack{doc.head_rev};
}

SubmitResult Broker::submit(const std::string& doc_id, const std::string& author_id,
                            std::uint64_t base_rev, const Changeset& cs) {
  auto doc = find_doc(doc_id);
  std::lock_guard lock(doc->mu);
  return commit_locked(*doc, author_id, std::nullopt, base_rev, cs);
}

wire::Init Broker::snapshot_for(const std::string& doc_id) const {
  auto doc = find_doc(doc_id);
  std::lock_guard lock(doc->mu);
  return snapshot_locked(*doc);
}

Document Broker::head(const std::string& doc_id) const {
  auto doc = find_doc(doc_id);
  std::lock_guard lock(doc->mu);
  return doc->head;
}

std::uint64_t Broker::head_rev(const std::string& doc_id) const {
  auto doc = find_doc(doc_id);
  std::lock_guard lock(doc->mu);
  return doc->head_rev;
}

std::vector<wire::Revision> Broker::history(const std::string& doc_id) const {
  auto doc = find_doc(doc_id);
  std::lock_guard lock(doc->mu);
  return doc->history;
}

bool Broker::has_document(const std::string& doc_id) const {
  std::lock_guard lock(mu_);
  return docs_.count(doc_id) != 0;
}

void Broker::dispatch_event(const std::string& doc_id, const wire::EventMessage& ev,
                            EventCompletion done) {
  auto doc = find_doc(doc_id);
  std::vector<Member> targets;
  {
    std::lock_guard lock(doc->mu);
    for (const auto& m : doc->members) {
      if (m.role == wire::Role::kService && subscribed(m.subscriptions, ev.uri)) targets.push_back(m);
    }
  }
  if (ev.mode == wire::EventMode::kAsync) {
    for (const auto& m : targets) send(m.peer, m.client_id, wire::Message{doc_id, ev});
    return;
  }
  if (targets.empty()) throw Error(Errc::kNoSubscriber, "no service handles '" + ev.uri + "'");

  wire::EventMessage forwarded = ev;
  const auto timeout = ev.timeout_ms ? std::chrono::milliseconds(ev.timeout_ms) : options_.event_timeout;
  forwarded.timeout_ms = static_cast<std::uint32_t>(timeout.count());
  {
    std::lock_guard lock(events_mu_);
    forwarded.correlation_id = "ev" + std::to_string(next_event_++);
    PendingEvent pending;
    for (const auto& m : targets) pending.expected.push_back(m.id);
    pending.deadline = std::chrono::steady_clock::now() + timeout;
    pending.done = std::move(done);
    pending.original_correlation = ev.correlation_id;
    events_[forwarded.correlation_id] = std::move(pending);
  }
  events_cv_.notify_all();
  for (const auto& m : targets) send(m.peer, m.client_id, wire::Message{doc_id, forwarded});
}

std::optional<wire::EventResponse> Broker::dispatch_event_and_wait(const std::string& doc_id,
                                                                   const wire::EventMessage& ev) {
  if (ev.mode == wire::EventMode::kAsync) {
    dispatch_event(doc_id, ev, nullptr);
    return std::nullopt;
  }
  auto promise = std::make_shared<std::promise<wire::EventResponse>>();
  auto future = promise->get_future();
  dispatch_event(doc_id, ev, [promise](wire::EventResponse r) { promise->set_value(std::move(r)); });
  return future.get();
}

void Broker::finish_event(const std::string& correlation) {
  PendingEvent pending;
  {
    std::lock_guard lock(events_mu_);
    auto it = events_.find(correlation);
    if (it == events_.end()) return;
    pending = std::move(it->second);
    events_.erase(it);
  }
  wire::EventResponse merged{pending.original_correlation, {}};
  for (SessionId id : pending.expected) {
    auto it = pending.answers.find(id);
    if (it == pending.answers.end()) continue;
    merged.items.insert(merged.items.end(), it->second.begin(), it->second.end());
  }
  if (pending.done) pending.done(std::move(merged));
}

void Broker::handle_event_response(SessionId id, const wire::EventResponse& resp) {
  bool complete = false;
  {
    std::lock_guard lock(events_mu_);
    auto it = events_.find(resp.correlation_id);
    if (it == events_.end()) return;
    auto& pending = it->second;
    if (std::find(pending.expected.begin(), pending.expected.end(), id) == pending.expected.end()) return;
    pending.answers[id] = resp.items;
    complete = pending.answers.size() == pending.expected.size();
  }
  if (complete) finish_event(resp.correlation_id);
}

void Broker::timer_loop() {
  std::unique_lock lock(events_mu_);
  while (!stopping_) {
    auto next = std::chrono::steady_clock::time_point::max();
    std::vector<std::string> expired;
    const auto now = std::chrono::steady_clock::now();
    for (const auto& [id, pending] : events_) {
      if (pending.deadline <= now) expired.push_back(id);
      else next = std::min(next, pending.deadline);
    }
    if (!expired.empty()) {
      lock.unlock();
      for (const auto& id : expired) finish_event(id);
      lock.lock();
      continue;
    }
    if (next == std::chrono::steady_clock::time_point::max()) events_cv_.wait(lock);
    else events_cv_.wait_until(lock, next);
  }
}

SessionId Broker::attach(std::shared_ptr<Peer> peer) {
  std::lock_guard lock(mu_);
  SessionId id = next_session_++;
  sessions_[id].peer = std::move(peer);
  return id;
}

void Broker::detach(SessionId session) {
  std::shared_ptr<DocState> doc;
  {
    std::lock_guard lock(mu_);
    auto it = sessions_.find(session);
    if (it == sessions_.end()) return;
    auto d = docs_.find(it->second.doc_id);
    if (it->second.joined && d != docs_.end()) doc = d->second;
    sessions_.erase(it);
  }
  if (doc) {
    std::lock_guard lock(doc->mu);
    std::erase_if(doc->members, [&](const Member& m) { return m.id == session; });
  }
  std::vector<std::string> complete;
  {
    std::lock_guard lock(events_mu_);
    for (auto& [corr, pending] : events_) {
      if (std::erase(pending.expected, session) == 0) continue;
      pending.answers.erase(session);
      if (pending.answers.size() == pending.expected.size()) complete.push_back(corr);
    }
  }
  for (const auto& corr : complete) finish_event(corr);
}

std::size_t Broker::session_count() const {
  std::lock_guard lock(mu_);
  return sessions_.size();
}

std::size_t Broker::sessions_for(const std::string& doc_id) const {
  std::lock_guard lock(mu_);
  return static_cast<std::size_t>(std::count_if(sessions_.begin(), sessions_.end(), [&](const auto& e) {
    return (e.second.joined || e.second.parked) && e.second.doc_id == doc_id;
  }));
}

void Broker::handle_hello(SessionId id, const std::string& doc_id, const wire::Hello& hello) {
  std::lock_guard lock(mu_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) return;
  SessionState& s = it->second;
  if ((s.joined || s.parked) && s.doc_id != doc_id) {
    throw Error(Errc::kProtocol, "session already bound to document '" + s.doc_id + "'");
  }
  s.client_id = hello.client_id;
  s.role = hello.role;
  s.subscriptions = hello.subscriptions;
  s.doc_id = doc_id;

  auto d = docs_.find(doc_id);
  std::shared_ptr<DocState> doc;
  if (d != docs_.end()) {
    doc = d->second;
  } else if (hello.initial_text) {
    doc = create_doc_locked(doc_id, utf8::decode(*hello.initial_text), hello.client_id);
  } else if (hello.role == wire::Role::kService) {
    s.parked = true;
    return;
  } else {
    send(s.peer, s.client_id, error_message(doc_id, Errc::kUnknownDoc, "unknown document '" + doc_id + "'"));
    return;
  }

  std::lock_guard doc_lock(doc->mu);
  s.parked = false;
  s.joined = true;
  join_locked(*doc, id, s);
  for (auto& [other_id, other] : sessions_) {
    if (other.parked && other.doc_id == doc_id) {
      other.parked = false;
      other.joined = true;
      join_locked(*doc, other_id, other);
    }
  }
}

void Broker::handle(SessionId session, const wire::Message& msg) {
  std::shared_ptr<Peer> peer;
  std::string client_id;
  std::string bound_doc;
  bool joined = false;
  {
    std::lock_guard lock(mu_);
    auto it = sessions_.find(session);
    if (it == sessions_.end()) return;
    peer = it->second.peer;
    client_id = it->second.client_id;
    bound_doc = it->second.doc_id;
    joined = it->second.joined;
  }
  if (const auto* hello = msg.as<wire::Hello>()) {
    record(hello->client_id, true, msg);
  } else {
    record(client_id, true, msg);
  }

  try {
    if (const auto* hello = msg.as<wire::Hello>()) {
      handle_hello(session, msg.doc_id, *hello);
      return;
    }
    if (!joined || msg.doc_id != bound_doc) {
      throw Error(Errc::kProtocol, "no Hello for document '" + msg.doc_id + "'");
    }
    if (const auto* submit = msg.as<wire::Submit>()) {
      auto doc = find_doc(msg.doc_id);
      std::lock_guard lock(doc->mu);
      auto result = commit_locked(*doc, client_id, session, submit->base_rev, submit->changeset);
      std::visit([&](const auto& r) { send(peer, client_id, wire::Message{msg.doc_id, r}); }, result);
    } else if (const auto* ev = msg.as<wire::EventMessage>()) {
      EventCompletion done;
      if (ev->mode == wire::EventMode::kSync) {
        const std::string doc_id = msg.doc_id;
        done = [this, peer, client_id, doc_id](wire::EventResponse r) {
          send(peer, client_id, wire::Message{doc_id, std::move(r)});
        };
      }
      try {
        dispatch_event(msg.doc_id, *ev, std::move(done));
      } catch (const Error& e) {
        if (e.code() != Errc::kNoSubscriber) throw;
        send(peer, client_id, error_message(msg.doc_id, e.code(), ev->correlation_id));
      }
    } else if (const auto* resp = msg.as<wire::EventResponse>()) {
      handle_event_response(session, *resp);
    } else {
      throw Error(Errc::kProtocol, "unexpected message kind '" + std::string(msg.kind()) + "'");
    }
  } catch (const Error& e) {
    send(peer, client_id, error_message(msg.doc_id, e.code(), e.what()));
  }
}

std::filesystem::path log_path(const std::filesystem::path& dir, const std::string& doc_id) {
  std::ostringstream name;
  for (unsigned char c : doc_id) {
    if (std::isalnum(c) || c == '.' || c == '_' || c == '-') {
      name << c;
    } else {
      name << '%' << std::uppercase << std::hex << std::setw(2) << std::setfill('0')
           << static_cast<int>(c) << std::dec;
    }
  }
  name << ".log";
  return dir / name.str();
}

Document replay_log(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::kCorruptLog, "cannot read " + path.string());
  Document doc;
  std::string line;
  std::size_t line_no = 0;
  std::uint64_t expected = 0;
  while (std::getline(in, line)) {
    ++line_no;
    try {
      wire::Revision rev = wire::decode_revision(line);
      if (rev.rev != expected) throw Error(Errc::kCorruptLog, "revision " + std::to_string(rev.rev) +
                                                                  " where " + std::to_string(expected) +
                                                                  " was expected");
      doc = apply(doc, rev.changeset);
      ++expected;
    } catch (const Error& e) {
      throw Error(Errc::kCorruptLog, path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return doc;
}

}  // namespace redsys::broker

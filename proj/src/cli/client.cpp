#include "redsys/cli/client.hpp"

#include <json.hpp>

#include "redsys/core/builder.hpp"
#include "redsys/error.hpp"
#include "redsys/sdk/sync_state.hpp"

namespace redsys::cli {
namespace {

using Clock = std::chrono::steady_clock;

struct Failure {
  ClientResult::Status status;
  std::string message;
};

template <typename... Fs>
struct Overloaded : Fs... {
  using Fs::operator()...;
};
template <typename... Fs>
Overloaded(Fs...) -> Overloaded<Fs...>;

class Runner {
 public:
  Runner(sdk::MessageLink& link, const ClientOptions& options) : link_(link), options_(options) {}

  ClientResult run(const Script& script) {
    ClientResult result;
    try {
      std::optional<std::string> initial;
      std::size_t first = 0;
      if (!script.empty()) {
        if (const auto* open = std::get_if<cmd::Open>(&script.front().command)) {
          initial = open->text;
          first = 1;
        }
      }
      join(initial);
      for (std::size_t i = first; i < script.size(); ++i) {
        line_ = script[i].line;
        execute(script[i].command);
        drain();
      }
      line_ = 0;
      settle();
    } catch (const Failure& f) {
      result.status = f.status;
      result.message = f.message;
    } catch (const Error& e) {
      result.status = ClientResult::kError;
      result.message = where() + e.what();
    }
    result.document = state_.display();
    return result;
  }

 private:
  std::string where() const { return line_ ? "script line " + std::to_string(line_) + ": " : ""; }

  [[noreturn]] void fail(ClientResult::Status status, const std::string& message) const {
    throw Failure{status, where() + message};
  }

  void send(wire::Message msg) {
    msg.doc_id = options_.doc_id;
    if (options_.transcript) options_.transcript("> " + wire::encode(msg));
    link_.send(msg);
  }

  void send_hello(std::optional<std::string> initial) {
    send({options_.doc_id, wire::Hello{options_.client_id, wire::Role::kEditor, {}, std::move(initial)}});
  }

  void join(std::optional<std::string> initial) {
    joining_ = true;
    send_hello(std::move(initial));
    if (!pump_until([&] { return state_.ready(); }, Clock::now() + options_.reply_timeout)) {
      fail(ClientResult::kError, "no Init from the broker");
    }
    joining_ = false;
  }

  // Handles one received message.
  void handle(const wire::Message& msg) {
    if (options_.transcript) options_.transcript("< " + wire::encode(msg));
    if (const auto* init = msg.as<wire::Init>()) {
      state_.reset(*init);
      flush();
    } else if (const auto* update = msg.as<wire::Update>()) {
      if (state_.on_update(*update).resync) resync();
    } else if (const auto* ack = msg.as<wire::Ack>()) {
      if (state_.on_ack(*ack).resync) return resync();
      flush();
    } else if (const auto* reject = msg.as<wire::Reject>()) {
      auto step = state_.on_reject(*reject);
      if (step.resync) return resync();
      if (step.resubmit) send({options_.doc_id, *step.resubmit});
    } else if (const auto* response = msg.as<wire::EventResponse>()) {
      if (awaiting_ && response->correlation_id == *awaiting_) {
        items_ = response->items;
        awaiting_.reset();
      }
    } else if (const auto* error = msg.as<wire::ErrorMessage>()) {
      if (joining_) throw Error(errc_from_name(error->code), error->detail);
      if (awaiting_ && error->detail == *awaiting_) {
        items_.clear();
        awaiting_.reset();
      }
    }
  }

  void resync() { send_hello(std::nullopt); }

  void flush() {
    if (auto submit = state_.next_submit()) send({options_.doc_id, *submit});
  }

  template <typename Pred>
  bool pump_until(Pred done, Clock::time_point deadline) {
    while (!done()) {
      const auto now = Clock::now();
      if (now >= deadline) return false;
      auto msg = link_.receive(std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now) +
                               std::chrono::milliseconds(1));
      if (!msg) {
        if (link_.closed()) fail(ClientResult::kError, "connection closed");
        continue;
      }
      handle(*msg);
    }
    return true;
  }

  void drain() {
    while (auto msg = link_.receive(std::chrono::milliseconds(0))) handle(*msg);
  }

  // Waits until every local edit is acknowledged, then handles whatever
  // already arrived.
  void settle() {
    const bool ok = pump_until([&] { return state_.ready() && !state_.in_flight() && !state_.has_pending(); },
                               Clock::now() + options_.reply_timeout);
    if (!ok) fail(ClientResult::kError, "local edits were not acknowledged");
    drain();
  }

  // Waits for the acknowledgement so that a single client's transcript does
  // not depend on timing.
  void edit(const Changeset& cs) {
    state_.local_edit(cs);
    flush();
    settle();
  }

  void check_range(std::size_t pos, std::size_t len) const {
    const std::size_t size = state_.display().size();
    if (pos > size || len > size - pos) {
      fail(ClientResult::kError, "range [" + std::to_string(pos) + "," + std::to_string(pos + len) +
                                     ") outside a document of length " + std::to_string(size));
    }
  }

  void execute(const Command& command) {
    const Document& doc = state_.display();
    std::visit(
        Overloaded{
            [&](const cmd::Open&) { fail(ClientResult::kError, "open must be the first command"); },
            [&](const cmd::Insert& c) {
              check_range(c.pos, 0);
              edit(ChangesetBuilder(doc.pool, doc.size()).keep_to(c.pos).insert_utf8(c.text).finish());
            },
            [&](const cmd::Delete& c) {
              check_range(c.pos, c.len);
              edit(ChangesetBuilder(doc.pool, doc.size()).keep_to(c.pos).remove(c.len).finish());
            },
            [&](const cmd::Attr& c) {
              check_range(c.pos, c.len);
              edit(ChangesetBuilder(doc.pool, doc.size()).keep_to(c.pos).keep(c.len, {{c.key, c.value}}).finish());
            },
            [&](const cmd::Wait& c) {
              pump_until([] { return false; }, Clock::now() + std::chrono::milliseconds(c.ms));
            },
            [&](const cmd::ExpectText& c) {
              settle();
              const std::string actual = state_.display().utf8();
              if (actual != c.text) {
                fail(ClientResult::kExpectationFailed,
                     "expected text " + quoted(c.text) + ", got " + quoted(actual));
              }
            },
            [&](const cmd::ExpectAttr& c) {
              settle();
              const Document& now = state_.display();
              if (c.pos >= now.size()) {
                fail(ClientResult::kExpectationFailed, "position " + std::to_string(c.pos) + " is past the end");
              }
              const std::string actual = now.value_at(c.pos, c.key);
              if (actual != c.value) {
                fail(ClientResult::kExpectationFailed, "expected " + c.key + "=" + quoted(c.value) +
                                                           " at " + std::to_string(c.pos) + ", got " +
                                                           quoted(actual));
              }
            },
            [&](const cmd::Event& c) {
              wire::EventMessage ev{c.uri, c.params, c.mode, "", 0};
              if (c.mode == wire::EventMode::kSync) {
                ev.correlation_id = "c" + std::to_string(next_correlation_++);
                ev.timeout_ms = options_.event_timeout_ms;
                awaiting_ = ev.correlation_id;
              }
              send({options_.doc_id, ev});
              if (c.mode == wire::EventMode::kAsync) return;
              const auto deadline =
                  Clock::now() + std::chrono::milliseconds(options_.event_timeout_ms) + options_.reply_timeout;
              if (!pump_until([&] { return !awaiting_; }, deadline)) {
                fail(ClientResult::kError, "no response to event " + c.uri);
              }
            },
            [&](const cmd::ExpectItem& c) {
              if (c.index >= items_.size()) {
                fail(ClientResult::kExpectationFailed, "the last response has " + std::to_string(items_.size()) +
                                                           " items, no item " + std::to_string(c.index));
              }
              if (items_[c.index].label != c.label) {
                fail(ClientResult::kExpectationFailed, "expected item label " + quoted(c.label) +
                                                           ", got " + quoted(items_[c.index].label));
              }
            },
            [&](const cmd::Pick& c) {
              if (c.index >= items_.size() || !items_[c.index].action) {
                fail(ClientResult::kError, "no action at item " + std::to_string(c.index));
              }
              const auto& action = *items_[c.index].action;
              if (action.rev > state_.rev()) fail(ClientResult::kError, "action is ahead of the client");
              Changeset cs = reintern(action.changeset, {}, state_.pool_at(action.rev));
              if (cs.base_len != state_.length_at(action.rev)) {
                fail(ClientResult::kError, "action does not fit revision " + std::to_string(action.rev));
              }
              check(cs, state_.pool_at(action.rev));
              edit(state_.rebase_to_display(action.rev, std::move(cs)));
            },
        },
        command);
  }

  static std::string quoted(const std::string& s) { return nlohmann::json(s).dump(); }

  sdk::MessageLink& link_;
  const ClientOptions& options_;
  sdk::SyncState state_;
  bool joining_ = false;
  std::size_t line_ = 0;
  std::optional<std::string> awaiting_;
  std::vector<wire::EventItem> items_;
  std::uint64_t next_correlation_ = 1;
};

}  // namespace

ClientResult run_client(const Script& script, sdk::MessageLink& link, const ClientOptions& options) {
  return Runner(link, options).run(script);
}

ClientResult run_client(const Script& script, std::string_view address, const ClientOptions& options) {
  std::unique_ptr<sdk::MessageLink> link;
  try {
    link = sdk::MessageLink::connect(address);
  } catch (const Error& e) {
    ClientResult result;
    result.status = ClientResult::kError;
    result.message = e.what();
    return result;
  }
  ClientResult result = run_client(script, *link, options);
  link->close();
  return result;
}

std::string transcript_line(const std::string& client_id, bool inbound, const std::string& line) {
  return client_id + (inbound ? " -> " : " <- ") + line;
}

}  // namespace redsys::cli

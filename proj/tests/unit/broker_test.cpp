#include <doctest.h>

#include <atomic>
#include <condition_variable>
#include <fstream>
#include <mutex>
#include <thread>

#include "redsys/broker/broker.hpp"
#include "redsys/core/builder.hpp"
#include "support/fixtures.hpp"

using namespace redsys;
using namespace redsys::broker;
using namespace redsys::testing;

namespace {

struct RecordingPeer : Peer {
  void send(const wire::Message& msg) override {
    std::lock_guard lock(mu);
    inbox.push_back(msg);
    cv.notify_all();
  }

  template <typename T>
  std::vector<T> all() {
    std::lock_guard lock(mu);
    std::vector<T> out;
    for (const auto& m : inbox) {
      if (const auto* p = m.as<T>()) out.push_back(*p);
    }
    return out;
  }

  template <typename T>
  T wait_for() {
    std::unique_lock lock(mu);
    for (;;) {
      for (std::size_t i = 0; i < inbox.size(); ++i) {
        if (const auto* p = inbox[i].as<T>()) {
          T out = *p;
          inbox.erase(inbox.begin() + static_cast<std::ptrdiff_t>(i));
          return out;
        }
      }
      if (cv.wait_for(lock, std::chrono::seconds(5)) == std::cv_status::timeout) {
        throw std::runtime_error("timed out waiting for message");
      }
    }
  }

  std::mutex mu;
  std::condition_variable cv;
  std::vector<wire::Message> inbox;
};

wire::Message hello(const std::string& doc, const std::string& id, wire::Role role,
                    std::vector<std::string> subs = {},
                    std::optional<std::string> text = std::nullopt) {
  return wire::Message{doc, wire::Hello{id, role, std::move(subs), std::move(text)}};
}

Changeset insert_at(const Document& doc, std::size_t pos, std::u32string_view text) {
  return ChangesetBuilder(doc.pool, doc.size()).keep_to(pos).insert(text).finish();
}

Document fold(const std::vector<wire::Revision>& history) {
  Document doc;
  for (const auto& rev : history) doc = apply(doc, rev.changeset);
  return doc;
}

}  // namespace

TEST_CASE("broker commits fresh and stale submissions") {
  Broker broker;
  broker.open_document("d", U"hello world");
  const Document base = broker.head("d");

  auto r1 = broker.submit("d", "a", 0, insert_at(base, 0, U">"));
  CHECK(std::get<wire::Ack>(r1).new_rev == 1);
  auto r2 = broker.submit("d", "b", 0, insert_at(base, 11, U"!"));
  CHECK(std::get<wire::Ack>(r2).new_rev == 2);
  CHECK(broker.head("d").utf8() == ">hello world!");

  auto r3 = broker.submit("d", "c", 0, ChangesetBuilder(base.pool, 11).remove(5).finish());
  const auto* reject = std::get_if<wire::Reject>(&r3);
  REQUIRE(reject);
  CHECK(reject->reason == wire::RejectReason::kMergeConflict);
  CHECK(reject->head_rev == 2);
  CHECK(broker.head_rev("d") == 2);

  CHECK(fold(broker.history("d")) == broker.head("d"));
}

TEST_CASE("broker validation and unknown documents") {
  Broker broker;
  broker.open_document("d", U"abc");
  CHECK_THROWS_AS(broker.open_document("d", U"x"), Error);
  auto wrong_len = broker.submit("d", "a", 0, identity(5));
  CHECK(std::get<wire::Reject>(wrong_len).reason == wire::RejectReason::kValidation);
  auto future = broker.submit("d", "a", 7, identity(3));
  CHECK(std::get<wire::Reject>(future).reason == wire::RejectReason::kValidation);
  Changeset bad_id = identity(3);
  bad_id.ops = {ChangeOp::keep(1, {9})};
  CHECK(std::get<wire::Reject>(broker.submit("d", "a", 0, bad_id)).reason ==
        wire::RejectReason::kValidation);
  try {
    broker.head("nope");
    FAIL("expected UnknownDoc");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::kUnknownDoc);
  }
}

TEST_CASE("broker sessions: hello, parking, updates and acks") {
  Broker broker;
  auto svc = std::make_shared<RecordingPeer>();
  auto ed1 = std::make_shared<RecordingPeer>();
  auto ed2 = std::make_shared<RecordingPeer>();
  const auto s = broker.attach(svc);
  const auto e1 = broker.attach(ed1);
  const auto e2 = broker.attach(ed2);

  broker.handle(e2, hello("doc", "late", wire::Role::kEditor));
  auto err = ed2->wait_for<wire::ErrorMessage>();
  CHECK(err.code == "UnknownDoc");

  broker.handle(s, hello("doc", "svc", wire::Role::kService, {"x."}));
  CHECK(svc->all<wire::Init>().empty());
  CHECK(broker.sessions_for("doc") == 1);

  broker.handle(e1, hello("doc", "ed1", wire::Role::kEditor, {}, std::string("abc")));
  auto init1 = ed1->wait_for<wire::Init>();
  auto init_svc = svc->wait_for<wire::Init>();
  CHECK(init1.rev == 0);
  CHECK(apply(Document{}, init1.snapshot).utf8() == "abc");
  CHECK(init_svc == init1);

  broker.handle(e2, hello("doc", "ed2", wire::Role::kEditor));
  ed2->wait_for<wire::Init>();

  const Document base = broker.head("doc");
  broker.handle(e1, wire::Message{"doc", wire::Submit{0, insert_at(base, 3, U"d")}});
  CHECK(ed1->wait_for<wire::Ack>().new_rev == 1);
  auto u2 = ed2->wait_for<wire::Update>();
  auto us = svc->wait_for<wire::Update>();
  CHECK(u2.rev == 1);
  CHECK(u2.author_id == "ed1");
  CHECK(us == u2);
  CHECK(ed1->all<wire::Update>().empty());

  // Submit before Hello on another document is a protocol error.
  broker.handle(e2, wire::Message{"other", wire::Submit{0, identity(0)}});
  CHECK(ed2->wait_for<wire::ErrorMessage>().code == "Protocol");

  // A second Hello re-sends the snapshot.
  broker.handle(e2, hello("doc", "ed2", wire::Role::kEditor));
  CHECK(ed2->wait_for<wire::Init>().rev == 1);

  broker.detach(e2);
  broker.handle(e1, wire::Message{"doc", wire::Submit{1, insert_at(broker.head("doc"), 0, U"z")}});
  CHECK(ed1->wait_for<wire::Ack>().new_rev == 2);
  CHECK(broker.session_count() == 2);
}

TEST_CASE("broker sync events merge answers in connection order") {
  BrokerOptions opts;
  opts.event_timeout = std::chrono::milliseconds(200);
  Broker broker(opts);
  broker.open_document("doc", U"text");
  auto s1 = std::make_shared<RecordingPeer>();
  auto s2 = std::make_shared<RecordingPeer>();
  auto s3 = std::make_shared<RecordingPeer>();
  auto ed = std::make_shared<RecordingPeer>();
  const auto i1 = broker.attach(s1);
  const auto i2 = broker.attach(s2);
  const auto i3 = broker.attach(s3);
  const auto ie = broker.attach(ed);
  broker.handle(i2, hello("doc", "two", wire::Role::kService, {"complete."}));
  broker.handle(i1, hello("doc", "one", wire::Role::kService, {"complete.stex"}));
  broker.handle(i3, hello("doc", "three", wire::Role::kService, {"other"}));
  broker.handle(ie, hello("doc", "ed", wire::Role::kEditor));

  wire::EventMessage ev{"complete.stex", {{"pos", "1"}}, wire::EventMode::kSync, "c-7", 0};
  broker.handle(ie, wire::Message{"doc", ev});
  auto f1 = s1->wait_for<wire::EventMessage>();
  auto f2 = s2->wait_for<wire::EventMessage>();
  CHECK(f1.correlation_id == f2.correlation_id);
  CHECK(f1.correlation_id != "c-7");
  CHECK(f1.params == ev.params);
  CHECK(s3->all<wire::EventMessage>().empty());

  broker.handle(i2, wire::Message{"doc", wire::EventResponse{f2.correlation_id, {{"from two", {}}}}});
  broker.handle(i1, wire::Message{"doc", wire::EventResponse{f1.correlation_id, {{"from one", {}}}}});
  auto resp = ed->wait_for<wire::EventResponse>();
  CHECK(resp.correlation_id == "c-7");
  REQUIRE(resp.items.size() == 2);
  CHECK(resp.items[0].label == "from one");
  CHECK(resp.items[1].label == "from two");

  // Unknown correlation ids are ignored.
  broker.handle(i1, wire::Message{"doc", wire::EventResponse{"bogus", {}}});

  // Timeout returns the answers received so far.
  ev.correlation_id = "c-8";
  const auto start = std::chrono::steady_clock::now();
  broker.handle(ie, wire::Message{"doc", ev});
  auto g1 = s1->wait_for<wire::EventMessage>();
  broker.handle(i1, wire::Message{"doc", wire::EventResponse{g1.correlation_id, {{"only", {}}}}});
  auto partial = ed->wait_for<wire::EventResponse>();
  const auto waited = std::chrono::steady_clock::now() - start;
  CHECK(partial.correlation_id == "c-8");
  REQUIRE(partial.items.size() == 1);
  CHECK(partial.items[0].label == "only");
  CHECK(waited >= std::chrono::milliseconds(190));

  // No subscriber.
  ev.uri = "nobody.home";
  ev.correlation_id = "c-9";
  broker.handle(ie, wire::Message{"doc", ev});
  auto err = ed->wait_for<wire::ErrorMessage>();
  CHECK(err.code == "NoSubscriber");
  CHECK(err.detail == "c-9");
  CHECK_THROWS_AS(broker.dispatch_event("doc", ev, nullptr), Error);

  // Async events fan out without a response.
  wire::EventMessage async_ev{"other.ping", {}, wire::EventMode::kAsync, "", 0};
  CHECK_FALSE(broker.dispatch_event_and_wait("doc", async_ev).has_value());
  CHECK(s3->wait_for<wire::EventMessage>().uri == "other.ping");
}

TEST_CASE("broker detaching a service completes its pending events") {
  Broker broker;
  broker.open_document("doc", U"");
  auto svc = std::make_shared<RecordingPeer>();
  const auto id = broker.attach(svc);
  broker.handle(id, hello("doc", "svc", wire::Role::kService, {"q"}));
  std::thread t([&] {
    svc->wait_for<wire::EventMessage>();
    broker.detach(id);
  });
  auto resp = broker.dispatch_event_and_wait("doc", {"q", {}, wire::EventMode::kSync, "x", 5000});
  t.join();
  REQUIRE(resp);
  CHECK(resp->items.empty());
}

TEST_CASE("broker history limit and revision log") {
  const auto dir = std::filesystem::temp_directory_path() / "redsys_broker_test";
  std::filesystem::remove_all(dir);
  BrokerOptions opts;
  opts.history_limit = 3;
  opts.log_dir = dir;
  Broker broker(opts);
  broker.open_document("a/b", U"x");
  for (int i = 0; i < 6; ++i) {
    const auto head = broker.head("a/b");
    auto r = broker.submit("a/b", "w", broker.head_rev("a/b"), insert_at(head, head.size(), U"y"));
    REQUIRE(std::holds_alternative<wire::Ack>(r));
  }
  CHECK(broker.history("a/b").size() == 3);
  CHECK(broker.history("a/b").front().rev == 4);
  // Base 3 needs revisions 4..6, all retained.
  CHECK(std::holds_alternative<wire::Ack>(broker.submit("a/b", "w", 3, identity(4))));
  try {
    broker.submit("a/b", "w", 2, identity(3));
    FAIL("expected StaleBeyondHistory");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::kStaleBeyondHistory);
  }

  const auto path = log_path(dir, "a/b");
  CHECK(path.filename() == "a%2Fb.log");
  CHECK(same_content(replay_log(path), broker.head("a/b")));
  CHECK(replay_log(path).utf8() == "xyyyyyy");
  { std::ofstream empty(dir / "empty.log"); }
  CHECK(replay_log(dir / "empty.log").size() == 0);

  {
    std::ofstream out(path, std::ios::app);
    out << "{not json\n";
  }
  try {
    replay_log(path);
    FAIL("expected CorruptLog");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::kCorruptLog);
    CHECK(std::string(e.what()).find(":9:") != std::string::npos);
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("broker transcript sees inbound before outbound") {
  std::vector<std::string> lines;
  BrokerOptions opts;
  opts.transcript = [&](const std::string& id, bool in, const std::string& line) {
    lines.push_back(id + (in ? " > " : " < ") + line);
  };
  Broker broker(opts);
  auto ed = std::make_shared<RecordingPeer>();
  const auto id = broker.attach(ed);
  broker.handle(id, hello("d", "ed", wire::Role::kEditor, {}, std::string("hi")));
  REQUIRE(lines.size() == 2);
  CHECK(lines[0].rfind("ed > {", 0) == 0);
  CHECK(lines[1].rfind("ed < {", 0) == 0);
  CHECK(lines[1].find("\"kind\":\"Init\"") != std::string::npos);
}

TEST_CASE("broker concurrent random submissions keep head equal to folded history") {
  Broker broker;
  broker.open_document("d", U"the quick brown fox");
  std::atomic<int> acks{0}, rejects{0};
  std::vector<std::thread> writers;
  for (int w = 0; w < 4; ++w) {
    writers.emplace_back([&, w] {
      Rng rng(1000 + w);
      for (int i = 0; i < 150; ++i) {
        auto history = broker.history("d");
        // Base on a random recent revision to exercise rebasing.
        const std::size_t back = rng.uniform(0, std::min<std::size_t>(history.size() - 1, 3));
        Document base;
        for (std::size_t k = 0; k + back < history.size(); ++k) base = apply(base, history[k].changeset);
        const auto rev = history[history.size() - 1 - back].rev;
        auto r = broker.submit("d", "w" + std::to_string(w), rev, random_changeset(rng, base.pool, base.size()));
        if (std::holds_alternative<wire::Ack>(r)) ++acks;
        else ++rejects;
      }
    });
  }
  for (auto& t : writers) t.join();
  CHECK(acks + rejects == 600);
  CHECK(acks > 0);
  const auto history = broker.history("d");
  CHECK(history.size() == static_cast<std::size_t>(acks) + 1);
  CHECK(fold(history) == broker.head("d"));
  check_document(broker.head("d"));
}

#include <doctest.h>

#include <atomic>
#include <set>
#include <thread>

#include "redsys/core/builder.hpp"
#include "redsys/sdk/service.hpp"
#include "support/simulator.hpp"

using namespace redsys;
using namespace redsys::testing;

namespace {

// Identity-tracking model: every character gets a serial number, so ranges
// can be followed without any position arithmetic.
struct Tracked {
  std::vector<std::uint64_t> ids;
  std::uint64_t next = 0;

  explicit Tracked(std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) ids.push_back(next++);
  }

  // Indices touched by the non-plain-keep ops of `cs`, by brute force.
  static std::vector<std::size_t> touched(const Changeset& cs) {
    std::vector<std::size_t> out;
    std::size_t pos = 0;
    for (const auto& op : cs.ops) {
      if (op.type == OpType::kInsert) {
        out.push_back(pos);
      } else {
        if (op.type == OpType::kDelete || !op.attrs.empty()) {
          for (std::size_t k = 0; k < op.len; ++k) out.push_back(pos + k);
        }
        pos += op.len;
      }
    }
    return out;
  }

  void apply(const Changeset& cs) {
    std::vector<std::uint64_t> out;
    std::size_t pos = 0;
    for (const auto& op : cs.ops) {
      switch (op.type) {
        case OpType::kInsert:
          for (std::size_t k = 0; k < op.len; ++k) out.push_back(next++);
          break;
        case OpType::kDelete:
          pos += op.len;
          break;
        case OpType::kKeep:
          out.insert(out.end(), ids.begin() + static_cast<std::ptrdiff_t>(pos),
                     ids.begin() + static_cast<std::ptrdiff_t>(pos + op.len));
          pos += op.len;
          break;
      }
    }
    out.insert(out.end(), ids.begin() + static_cast<std::ptrdiff_t>(pos), ids.end());
    ids = std::move(out);
  }

  std::vector<Range> runs_of(const std::set<std::uint64_t>& watched) const {
    std::vector<Range> out;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (!watched.count(ids[i])) continue;
      if (!out.empty() && out.back().end == i) out.back().end = i + 1;
      else out.push_back({i, i + 1});
    }
    return out;
  }
};

}  // namespace

TEST_CASE("token soundness against identity tracking") {
  Rng rng(77);
  int cancelled = 0, survived = 0;
  for (int trial = 0; trial < 1500; ++trial) {
    Document doc = random_document(rng, 30);
    if (doc.size() == 0) continue;
    std::vector<Range> ranges;
    for (int k = 0, n = static_cast<int>(rng.uniform(1, 3)); k < n; ++k) {
      const std::size_t b = rng.uniform(0, doc.size() - 1);
      ranges.push_back({b, rng.uniform(b + 1, std::min(doc.size(), b + 6))});
    }
    sdk::ProcessingToken token(0, ranges);
    Tracked model(doc.size());
    std::set<std::uint64_t> watched;
    for (const auto& r : token.ranges()) {
      for (std::size_t i = r.begin; i < r.end; ++i) watched.insert(model.ids[i]);
    }
    bool expect_cancel = false;
    for (int step = 0; step < 4 && !expect_cancel; ++step) {
      const Changeset cs = rng.coin(0.3) ? identity(doc.size()) : random_changeset(rng, doc.pool, doc.size());
      for (std::size_t i : Tracked::touched(cs)) {
        if (i < model.ids.size() && watched.count(model.ids[i])) expect_cancel = true;
      }
      token.observe(cs, doc.pool);
      model.apply(cs);
      doc = apply(doc, cs);
      REQUIRE(token.cancelled() == expect_cancel);
      if (!expect_cancel) CHECK(token.ranges() == model.runs_of(watched));
    }
    (expect_cancel ? cancelled : survived)++;
  }
  CHECK(cancelled > 100);
  CHECK(survived > 100);
}

TEST_CASE("token examples") {
  const Document doc = Document::from_utf8("0123456789");
  sdk::ProcessingToken a(3, {{2, 5}});
  a.observe(identity(10), doc.pool);
  CHECK_FALSE(a.cancelled());
  CHECK(a.ranges() == std::vector<Range>{{2, 5}});
  a.observe(ChangesetBuilder(doc.pool, 10).keep(8).insert(U"xy").finish(), doc.pool);
  CHECK(a.ranges() == std::vector<Range>{{2, 5}});
  a.observe(ChangesetBuilder(doc.pool, 12).insert(U"abc").finish(), doc.pool);
  CHECK(a.ranges() == std::vector<Range>{{5, 8}});
  a.observe(ChangesetBuilder(doc.pool, 15).keep(6).remove(1).finish(), doc.pool);
  CHECK(a.cancelled());
  CHECK(a.start_rev() == 3);
}

TEST_CASE("sync state mirrors the broker under random interleavings") {
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    Rng rng(seed);
    Simulator sim(3, U"shared text");
    for (std::size_t i = 0; i < sim.size(); ++i) sim.deliver_one(i);
    for (int step = 0; step < 120; ++step) {
      const std::size_t i = rng.uniform(0, sim.size() - 1);
      if (rng.coin(0.4)) sim.random_edit(i, rng);
      else sim.deliver_one(i);
    }
    sim.drain();
    const Document head = sim.broker().head("doc");
    for (std::size_t i = 0; i < sim.size(); ++i) {
      auto& st = sim.client(i).state;
      REQUIRE(st.rev() == sim.broker().head_rev("doc"));
      CHECK(st.committed() == head);
      CHECK(same_content(st.display(), head));
      CHECK_FALSE(st.in_flight());
      CHECK(sim.client(i).resyncs == 0);
    }
  }
}

TEST_CASE("stale submissions are rebased locally as the broker did") {
  broker::Broker broker;
  broker.open_document("doc", U"alpha beta gamma");
  auto peer = std::make_shared<Simulator::Queue>();
  const auto session = broker.attach(peer);
  broker.handle(session, wire::Message{"doc", wire::Hello{"svc", wire::Role::kService, {}, {}}});
  sdk::SyncState st;
  st.reset(*peer->inbox.front().as<wire::Init>());
  peer->inbox.clear();

  // Someone else edits the start; the service's change at rev 0 marks "gamma".
  const Document base = broker.head("doc");
  broker.submit("doc", "ed", 0, ChangesetBuilder(base.pool, base.size()).insert(U">> ").finish());
  const Changeset mark =
      ChangesetBuilder(base.pool, base.size()).keep(11).keep(5, {{"hl", "word"}}).finish();
  const auto submit = st.submit_at(0, mark);
  broker.handle(session, wire::Message{"doc", submit});

  REQUIRE(peer->inbox.size() == 2);
  CHECK_FALSE(st.on_update(*peer->inbox[0].as<wire::Update>()).resync);
  auto step = st.on_ack(*peer->inbox[1].as<wire::Ack>());
  CHECK_FALSE(step.resync);
  REQUIRE(step.display);
  CHECK(st.committed() == broker.head("doc"));
  CHECK(st.display().value_at(14, "hl") == "word");
  CHECK(st.display().value_at(13, "hl") == "");

  // A stale overlapping change is rejected and dropped.
  peer->inbox.clear();
  const Document now = broker.head("doc");
  broker.submit("doc", "ed", 2, ChangesetBuilder(now.pool, now.size()).keep(14).remove(2).finish());
  broker.handle(session, wire::Message{"doc", st.submit_at(2, ChangesetBuilder(now.pool, now.size()).keep(15).keep(2, {{"hl", "x"}}).finish())});
  REQUIRE(peer->inbox.size() == 2);
  st.on_update(*peer->inbox[0].as<wire::Update>());
  auto rej = st.on_reject(*peer->inbox[1].as<wire::Reject>());
  CHECK_FALSE(rej.resync);
  CHECK_FALSE(rej.resubmit);
  CHECK_FALSE(st.in_flight());
  CHECK(st.committed() == broker.head("doc"));
}

TEST_CASE("sync state detects revision gaps") {
  sdk::SyncState st;
  st.reset(wire::Init{4, snapshot_of(Document::from_utf8("ab")), {}});
  CHECK(st.on_update(wire::Update{6, identity(2), "x"}).resync);
  CHECK_FALSE(st.ready());
  st.reset(wire::Init{6, snapshot_of(Document::from_utf8("ab")), {}});
  CHECK_FALSE(st.on_update(wire::Update{6, identity(2), "x"}).resync);
  auto step = st.on_update(wire::Update{7, identity(2), "x"});
  CHECK_FALSE(step.resync);
  CHECK(st.rev() == 7);
}

namespace {

struct ProbeHandler : sdk::ServiceHandler {
  std::atomic<int> inside{0};
  std::atomic<int> overlaps{0};
  std::atomic<int> calls{0};

  void enter() {
    if (inside.fetch_add(1) != 0) ++overlaps;
    std::this_thread::sleep_for(std::chrono::microseconds(200));
    ++calls;
    inside.fetch_sub(1);
  }
  void on_init(sdk::ServiceSession&) override { enter(); }
  void on_update(sdk::ServiceSession&, const Changeset&, const std::string&) override { enter(); }
  std::vector<wire::EventItem> on_event(sdk::ServiceSession&, const wire::EventMessage&) override {
    enter();
    return {{"item", {}}};
  }
};

}  // namespace

TEST_CASE("service callbacks never run concurrently") {
  ProbeHandler probe;
  std::atomic<int> responses{0};
  sdk::ServiceSession session("svc", "doc", probe, [&](const wire::Message& m) {
    if (m.as<wire::EventResponse>()) ++responses;
  });
  session.deliver(wire::Message{"doc", wire::Init{0, identity(0), {}}});
  std::thread executor([&] { session.run(); });
  std::vector<std::thread> senders;
  for (int t = 0; t < 4; ++t) {
    senders.emplace_back([&, t] {
      for (int i = 0; i < 50; ++i) {
        session.deliver(wire::Message{"doc", wire::EventMessage{"x", {}, wire::EventMode::kSync,
                                                                "c" + std::to_string(t * 100 + i), 100}});
        session.post([&] { probe.enter(); });
      }
    });
  }
  for (auto& s : senders) s.join();
  std::atomic<bool> done{false};
  session.post([&] { done = true; });
  while (!done) std::this_thread::sleep_for(std::chrono::milliseconds(5));
  session.stop();
  executor.join();
  CHECK(probe.overlaps == 0);
  CHECK(probe.calls == 1 + 4 * 50 * 2);
  CHECK(responses == 200);
}

TEST_CASE("an invalid snapshot stops the session") {
  sdk::ServiceHandler plain;
  sdk::ServiceSession session("svc", "doc", plain, [](const wire::Message&) {});
  Changeset bad = identity(0);
  bad.new_len = 1;
  bad.ops = {ChangeOp::insert(U"a", {5})};
  session.deliver(wire::Message{"doc", wire::Init{0, bad, {}}});
  session.run_pending();
  CHECK(session.failure().has_value());
  CHECK_FALSE(session.ready());
}

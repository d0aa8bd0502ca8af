// Acceptance suite: one PASS/FAIL line per criterion.
//
//   acceptance [--strict] [--update-golden]
//
// A criterion listed in kKnownFailures still prints FAIL; it only leaves the
// exit status alone unless --strict is given.

#include <algorithm>
#include <chrono>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <json.hpp>
#include <mutex>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "redsys/cli/client.hpp"
#include "redsys/cli/script.hpp"
#include "redsys/core/algebra.hpp"
#include "redsys/core/builder.hpp"
#include "redsys/core/utf8.hpp"
#include "redsys/sdk/link.hpp"
#include "redsys/sdk/service.hpp"
#include "redsys/sdk/sync_state.hpp"
#include "redsys/services/analysis.hpp"
#include "redsys/services/services.hpp"
#include "support/fixtures.hpp"
#include "support/live.hpp"
#include "support/painting.hpp"
#include "support/simulator.hpp"
#include "support/text.hpp"

using namespace redsys;
using namespace redsys::testing;
using Clock = std::chrono::steady_clock;

namespace {

bool g_update_golden = false;

const std::set<std::string> kKnownFailures = {"rendering-equivalence"};

struct Outcome {
  bool pass = false;
  std::string detail;
};

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

std::string fmt_ms(double ms) {
  std::ostringstream out;
  out.precision(ms < 10 ? 3 : 1);
  out << std::fixed << ms << " ms";
  return out.str();
}

// ---------------------------------------------------------------------------

Outcome golden_eq() {
  const Document doc = math_document();
  const Changeset cs = mkm_changeset();
  const auto start = Clock::now();
  const Document out = apply(doc, cs);
  const double elapsed = ms_since(start);

  // Oracle: the independent per-character model.
  const NaiveDoc expected = naive_apply(to_naive(doc), doc.pool.entries(), cs);
  const NaiveDoc literal = {
      {U'M', {}}, {U'K', {}}, {U'M', {}}, {U' ', {{"author", "p1"}}},
      {U'i', {{"author", "p2"}, {"bold", "true"}}}, {U's', {{"author", "p2"}, {"bold", "true"}}},
      {U' ', {{"author", "p2"}}}, {U'g', {{"author", "p2"}}}, {U'r', {{"author", "p2"}}},
      {U'e', {{"author", "p2"}}}, {U'a', {{"author", "p2"}}}, {U't', {{"author", "p2"}}}};
  const bool ok = out.utf8() == "MKM is great" && to_naive(out) == expected && expected == literal;
  return {ok && elapsed < 1.0, "text \"" + out.utf8() + "\", MKM without author, " + fmt_ms(elapsed) + " (< 1 ms)"};
}

Outcome algebra_fuzz() {
  const auto start = Clock::now();
  Rng rng(20240601);
  const int kCases = 10000;
  int compose_failures = 0;
  int follow_failures = 0;
  for (int i = 0; i < kCases; ++i) {
    const Document d = random_document(rng, 50);
    const Changeset a = random_changeset(rng, d.pool, d.size());
    const Document da = apply(d, a);
    const Changeset b = random_changeset(rng, da.pool, da.size());

    // compose(a, b) against the naive model of a then b.
    const Changeset ab = compose(a, b, d.pool);
    const NaiveDoc via_model =
        naive_apply(naive_apply(to_naive(d), d.pool.entries(), a), da.pool.entries(), b);
    if (validate(ab, d.pool) || to_naive(apply(d, ab)) != via_model) ++compose_failures;

    // Both orders of a concurrent pair reach the same document.
    const Changeset c = random_changeset(rng, d.pool, d.size());
    const Document left = apply(apply(d, a), follow(a, c, false, d.pool));
    const Document right = apply(apply(d, c), follow(c, a, true, d.pool));
    if (to_naive(left) != to_naive(right)) ++follow_failures;
  }
  const double elapsed = ms_since(start);
  const bool ok = compose_failures == 0 && follow_failures == 0 && elapsed < 30000;
  return {ok, std::to_string(kCases) + " cases (len <= 50, 8 keys), compose mismatches " +
                  std::to_string(compose_failures) + ", follow divergences " + std::to_string(follow_failures) +
                  ", " + fmt_ms(elapsed) + " (< 30 s)"};
}

Outcome sweep_equivalence() {
  const auto start = Clock::now();
  std::size_t cases = 0;
  std::size_t mismatches = 0;
  for (std::size_t len = 1; len <= 8; ++len) {
    std::vector<std::pair<std::size_t, std::size_t>> ranges;
    for (std::size_t b = 0; b < len; ++b) {
      for (std::size_t e = b; e < len; ++e) ranges.push_back({b, e});
    }
    const Document doc = Document::from_text(std::u32string(len, U'x'));
    // Every sequence of up to three rules over every range; keys drawn from
    // {a, b} so rules on one key overlap, values distinct per rule so the
    // later-wins order is visible.
    for (std::size_t n = 0; n <= 3; ++n) {
      std::vector<std::size_t> pick(n, 0);
      const std::size_t key_patterns = std::size_t{1} << n;
      while (true) {
        for (std::size_t keys = 0; keys < key_patterns; ++keys) {
          std::vector<AttributeRangeRule> rules;
          for (std::size_t r = 0; r < n; ++r) {
            rules.push_back({(keys >> r) & 1 ? "b" : "a", std::to_string(r + 1), ranges[pick[r]].first,
                             ranges[pick[r]].second});
          }
          const Document out = apply(doc, ranges_to_changeset(rules, len, doc.pool));
          const auto expected = paint_rules(rules, len);
          ++cases;
          for (std::size_t i = 0; i < len; ++i) {
            std::map<std::string, std::string> got;
            for (const auto& a : out.attributes_at(i)) got[a.key] = a.value;
            if (got != expected[i]) {
              ++mismatches;
              break;
            }
          }
        }
        std::size_t r = 0;
        while (r < n && ++pick[r] == ranges.size()) pick[r++] = 0;
        if (r == n) break;
      }
    }
  }
  return {mismatches == 0, std::to_string(cases) + " rule sets (len <= 8, <= 3 rules), " +
                               std::to_string(mismatches) + " mismatches, " + fmt_ms(ms_since(start))};
}

// ---------------------------------------------------------------------------

std::string lit(const std::string& s) { return nlohmann::json(s).dump(); }

std::size_t find_line(const std::vector<std::string>& lines, std::size_t from,
                      const std::vector<std::string>& needles) {
  for (std::size_t i = from; i < lines.size(); ++i) {
    if (std::all_of(needles.begin(), needles.end(),
                    [&](const std::string& n) { return lines[i].find(n) != std::string::npos; })) {
      return i;
    }
  }
  return std::string::npos;
}

Outcome session_scenario() {
  const auto start = Clock::now();
  const std::string doc_id = "session";
  std::mutex mu;
  std::vector<std::string> transcript;
  broker::BrokerOptions options;
  options.transcript = [&](const std::string& client, bool inbound, const std::string& line) {
    std::lock_guard lock(mu);
    transcript.push_back(cli::transcript_line(client, inbound, line));
  };

  cli::ClientResult result;
  {
    LiveBroker live(std::move(options));
    services::Autocomplete autocomplete;
    sdk::ServiceRunner ac(live.address(), doc_id, "autocomplete", autocomplete);
    if (!live.wait_sessions(doc_id, 1)) return {false, "autocomplete did not attach"};

    services::Spotter::Options spot;
    spot.dictionary = services::Dictionary::parse("gravitational\tphysics\tgravity\n");
    spot.latency = std::chrono::milliseconds(200);
    spot.keep_stale = true;
    services::Spotter spotter(std::move(spot));
    sdk::ServiceRunner sp(live.address(), doc_id, "spotter", spotter);
    if (!live.wait_sessions(doc_id, 2)) return {false, "spotter did not attach"};

    const std::string plain = golden("plain.tex");
    const std::size_t len = utf8::decode(plain).size();
    const std::string tail = " Energy is conserved.";
    const std::size_t term_at = len + tail.size();
    const std::string script =
        "# The editor opens the document; both services get Init.\n"
        "open " + lit(plain) + "\n" +
        "# (a) a sync autocomplete request while the spotter is still working.\n"
        "event autocomplete.stex sync pos=" + std::to_string(plain.find("\\begin") + 4) + "\n" +
        "expectItem 0 \"\\\\begin\"\n"
        "# (b) an edit away from every term; the spotter's stale submit still merges.\n"
        "insert " + std::to_string(len) + " " + lit(tail) + "\n" +
        "wait 400\n"
        "expectAttr 4 spot \"1\"\n"
        "# (c) a new term, then an edit inside it before the spotter answers.\n"
        "insert " + std::to_string(term_at) + " \" gravitational\"\n" +
        "wait 50\n"
        "insert " + std::to_string(term_at + 6) + " \"X\"\n" +
        "wait 400\n"
        "expectText " + lit(plain + tail + " graviXtational") + "\n";
    cli::ClientOptions client;
    client.client_id = "editor";
    client.doc_id = doc_id;
    result = cli::run_client(cli::parse_script(script), live.address(), client);
  }
  const double elapsed = ms_since(start);
  if (result.status != cli::ClientResult::kOk) return {false, "client: " + result.message};

  std::string joined;
  for (const auto& l : transcript) joined += l + "\n";
  const auto golden_path = std::filesystem::path(REDSYS_GOLDEN_DIR) / "session_transcript.txt";
  if (g_update_golden) std::ofstream(golden_path, std::ios::binary) << joined;
  const bool golden_ok = read_file(golden_path.string()) == joined;

  const auto a = find_line(transcript, 0, {"editor <- ", "\"kind\":\"EventResponse\"", "\"items\":[{"});
  const auto head1 = find_line(transcript, 0, {"editor <- ", "\"kind\":\"Ack\"", "\"newRev\":1"});
  const auto stale = find_line(transcript, head1, {"spotter -> ", "\"kind\":\"Submit\"", "\"baseRev\":0"});
  const auto ack = find_line(transcript, stale, {"spotter <- ", "\"kind\":\"Ack\"", "\"newRev\":2"});
  const auto broadcast =
      find_line(transcript, stale, {"editor <- ", "\"authorId\":\"spotter\"", "\"kind\":\"Update\"", "\"rev\":2"});
  const auto reject = find_line(transcript, 0, {"spotter <- ", "\"kind\":\"Reject\"", "\"reason\":\"MergeConflict\""});
  const bool b = head1 != std::string::npos && stale != std::string::npos && ack != std::string::npos &&
                 broadcast != std::string::npos;
  const bool ok = a != std::string::npos && b && reject != std::string::npos && golden_ok && elapsed < 5000;
  return {ok, std::string("(a) EventResponse ") + (a != std::string::npos ? "yes" : "no") +
                  ", (b) stale Submit merged " + (b ? "yes" : "no") + ", (c) Reject{MergeConflict} " +
                  (reject != std::string::npos ? "yes" : "no") + ", golden transcript " +
                  (golden_ok ? "matches" : "differs") + ", " + fmt_ms(elapsed) + " (< 5 s)"};
}

Outcome convergence() {
  const auto start = Clock::now();
  Rng rng(777);
  Simulator sim(3, U"The gravitational potential energy of a system of masses");
  std::vector<int> edits(sim.size(), 0);
  for (std::size_t i = 0; i < sim.size(); ++i) sim.deliver_one(i);
  while (std::any_of(edits.begin(), edits.end(), [](int e) { return e < 200; })) {
    const std::size_t i = rng.uniform(0, sim.size() - 1);
    if (edits[i] < 200 && rng.coin(0.5)) {
      sim.random_edit(i, rng);
      ++edits[i];
    } else {
      sim.deliver_one(i);
    }
  }
  sim.drain();
  const Document head = sim.broker().head("doc");
  bool ok = true;
  for (std::size_t i = 0; i < sim.size(); ++i) {
    const auto& st = sim.client(i).state;
    ok = ok && st.rev() == sim.broker().head_rev("doc") && st.committed() == head &&
         to_naive(st.display()) == to_naive(head) && !st.in_flight();
  }
  const double elapsed = ms_since(start);
  return {ok && elapsed < 10000, "3 clients x 200 edits, " + std::to_string(sim.broker().head_rev("doc")) +
                                     " revisions, documents " + (ok ? "identical" : "differ") + ", " +
                                     fmt_ms(elapsed) + " (< 10 s)"};
}

Outcome reactive_budget() {
  std::string text;
  const std::string plain = golden("plain.tex");
  while (text.size() < 10 * 1024) text += plain + "\n\n";

  LiveBroker live;
  live.broker.open_document("big", utf8::decode(text));
  services::Highlighter highlighter;
  sdk::ServiceRunner runner(live.address(), "big", "highlighter", highlighter);
  auto link = sdk::MessageLink::connect(live.address());
  link->send({"big", wire::Hello{"editor", wire::Role::kEditor, {}, std::nullopt}});

  sdk::SyncState st;
  // Handles messages until an Update authored by the highlighter arrives.
  auto until_highlight = [&](std::chrono::milliseconds timeout) {
    const auto deadline = Clock::now() + timeout;
    while (Clock::now() < deadline) {
      auto msg = link->receive(std::chrono::milliseconds(5));
      if (!msg) continue;
      if (const auto* init = msg->as<wire::Init>()) st.reset(*init);
      if (const auto* ack = msg->as<wire::Ack>()) st.on_ack(*ack);
      if (const auto* update = msg->as<wire::Update>()) {
        st.on_update(*update);
        if (update->author_id == "highlighter") return true;
      }
    }
    return false;
  };
  if (!until_highlight(std::chrono::seconds(5))) return {false, "no initial highlighting"};

  Rng rng(5);
  std::vector<double> samples;
  for (int trial = 0; trial < 100; ++trial) {
    const Document& d = st.display();
    std::vector<std::size_t> line_starts = {0};
    for (std::size_t i = 0; i + 1 < d.size(); ++i) {
      if (d.text[i] == U'\n') line_starts.push_back(i + 1);
    }
    const std::size_t pos = line_starts[rng.uniform(0, line_starts.size() - 1)];
    st.local_edit(ChangesetBuilder(d.pool, d.size()).keep_to(pos).insert(U"\\x ").finish());
    const auto submit = st.next_submit();
    if (!submit) return {false, "nothing to submit"};
    const auto t0 = Clock::now();
    link->send({"big", *submit});
    if (!until_highlight(std::chrono::seconds(2))) return {false, "trial " + std::to_string(trial) + " timed out"};
    samples.push_back(ms_since(t0));
  }
  std::sort(samples.begin(), samples.end());
  const double median = (samples[49] + samples[50]) / 2;
  return {median <= 50.0, std::to_string(st.display().size()) + " chars, 100 trials, median " + fmt_ms(median) +
                              " (<= 50 ms), max " + fmt_ms(samples.back())};
}

Outcome rendering_equivalence() {
  const std::string annotated = golden("annotated.tex");
  const std::string plain = golden("plain.tex");
  Document rendered_doc;
  {
    LiveBroker live;
    services::Hider hider;
    services::Transclusion transclusion;
    sdk::ServiceRunner h(live.address(), "annotated", "hider", hider);
    sdk::ServiceRunner t(live.address(), "annotated", "transclusion", transclusion);
    if (!live.wait_sessions("annotated", 2)) return {false, "services did not attach"};
    live.broker.open_document("annotated", utf8::decode(annotated));
    // Quiescent once both services committed and nothing changed for a while.
    std::uint64_t last = 0;
    auto stable_since = Clock::now();
    const auto deadline = Clock::now() + std::chrono::seconds(5);
    while (Clock::now() < deadline) {
      const std::uint64_t rev = live.broker.head_rev("annotated");
      if (rev != last) {
        last = rev;
        stable_since = Clock::now();
      } else if (rev >= 2 && ms_since(stable_since) > 200) {
        break;
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }
    rendered_doc = live.broker.head("annotated");
  }
  const std::u32string rendered = strip_whitespace(services::render(rendered_doc));
  const std::u32string expected = strip_whitespace(utf8::decode(plain));
  if (rendered == expected) return {true, "rendered annotated text equals the plain text after whitespace removal"};
  std::size_t at = 0;
  while (at < rendered.size() && at < expected.size() && rendered[at] == expected[at]) ++at;
  auto excerpt = [&](const std::u32string& s) { return utf8::encode(s.substr(at, 24)); };
  return {false, "first difference at stripped offset " + std::to_string(at) + ": rendered \"" +
                     excerpt(rendered) + "\" vs expected \"" + excerpt(expected) + "\""};
}

}  // namespace

int main(int argc, char** argv) {
  bool strict = false;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--strict") == 0) strict = true;
    if (std::strcmp(argv[i], "--update-golden") == 0) g_update_golden = true;
  }
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"changeset-golden", golden_eq},
      {"algebra-fuzz", algebra_fuzz},
      {"sweep-equivalence", sweep_equivalence},
      {"editing-session-replay", session_scenario},
      {"broker-convergence", convergence},
      {"reactive-budget", reactive_budget},
      {"rendering-equivalence", rendering_equivalence},
  };
  int unexpected = 0;
  for (const auto& [name, run] : criteria) {
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const bool known = !o.pass && kKnownFailures.count(name);
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail
              << (known ? " [known failure, see README]" : "") << std::endl;
    if (!o.pass && (strict || !known)) ++unexpected;
  }
  return unexpected == 0 ? 0 : 1;
}

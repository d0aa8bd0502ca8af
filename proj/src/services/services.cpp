#include "redsys/services/services.hpp"

#include <charconv>

#include "redsys/core/builder.hpp"
#include "redsys/core/utf8.hpp"

namespace redsys::services {

LayerService::LayerService(std::vector<std::string> shared_keys) : tracker_(std::move(shared_keys)) {}

void LayerService::on_init(sdk::ServiceSession& s) {
  tracker_.reset(s.view().size());
  dirty_ = true;
  pump(s);
}

void LayerService::on_update(sdk::ServiceSession& s, const Changeset& change, const std::string& author) {
  tracker_.observe(change);
  if (author != s.client_id()) dirty_ = true;
  pump(s);
}

void LayerService::on_ack(sdk::ServiceSession& s, std::uint64_t) {
  tracker_.accept();
  pump(s);
}

void LayerService::on_reject(sdk::ServiceSession& s, const wire::Reject&) {
  tracker_.discard();
  dirty_ = true;
  pump(s);
}

void LayerService::pump(sdk::ServiceSession& s) {
  if (!dirty_ || !s.ready() || s.in_flight()) return;
  dirty_ = false;
  Changeset cs = tracker_.propose(s.view(), compute(s.view()));
  if (is_identity(cs)) {
    tracker_.accept();
    return;
  }
  if (s.submit(s.rev(), std::move(cs))) ++submissions_;
}

Highlighter::Highlighter() : LayerService({}) {}
Layer Highlighter::compute(const Document& view) { return highlight_layer(view.text); }

Hider::Hider() : LayerService({"fold"}) {}
Layer Hider::compute(const Document& view) { return hider_layer(view.text); }

Transclusion::Transclusion() : LayerService({"fold"}) {}
Layer Transclusion::compute(const Document& view) { return transclusion_layer(view.text); }

Spotter::Spotter(Options options) : options_(std::move(options)) {}

Spotter::~Spotter() { shutdown(); }

std::vector<std::string> Spotter::subscriptions() const { return {"contextmenu.spotter_plugin"}; }

void Spotter::on_init(sdk::ServiceSession& s) {
  job_active_ = false;
  dirty_ = true;
  pump(s);
}

void Spotter::on_update(sdk::ServiceSession& s, const Changeset&, const std::string& author) {
  if (author != s.client_id()) dirty_ = true;
  pump(s);
}

void Spotter::on_ack(sdk::ServiceSession& s, std::uint64_t) { pump(s); }

void Spotter::on_reject(sdk::ServiceSession& s, const wire::Reject&) {
  dirty_ = true;
  pump(s);
}

void Spotter::pump(sdk::ServiceSession& s) {
  if (!dirty_ || job_active_ || !s.ready() || s.in_flight()) return;
  dirty_ = false;
  const Document& view = s.view();
  const auto matches = spot(view.text, options_.dictionary);
  Changeset cs = layer_changeset(view, spot_layer(view.size(), matches));
  if (is_identity(cs)) return;

  std::vector<Range> watched = touched_ranges(cs);
  for (const auto& m : matches) watched.push_back({m.begin, m.end});
  auto token = s.watch(std::move(watched));
  const std::uint64_t rev = s.rev();
  job_active_ = true;

  std::lock_guard lock(mu_);
  if (stopping_) return;
  if (worker_.joinable()) worker_.join();
  worker_ = std::thread([this, &s, token, rev, cs = std::move(cs)]() mutable {
    {
      std::unique_lock lock(mu_);
      cv_.wait_for(lock, options_.latency, [&] { return stopping_; });
      if (stopping_) return;
    }
    s.post([this, &s, token, rev, cs = std::move(cs)]() mutable { finish(s, token, rev, std::move(cs)); });
  });
}

void Spotter::finish(sdk::ServiceSession& s, const std::shared_ptr<sdk::ProcessingToken>& token,
                     std::uint64_t rev, Changeset cs) {
  job_active_ = false;
  if (token->cancelled() && !options_.keep_stale) {
    ++cancelled_jobs_;
    dirty_ = true;
    pump(s);
    return;
  }
  if (!s.submit(rev, std::move(cs))) {
    dirty_ = true;
    pump(s);
  }
}

std::vector<wire::EventItem> Spotter::on_event(sdk::ServiceSession& s, const wire::EventMessage& ev) {
  const std::string prefix = "contextmenu.spotter_plugin.";
  if (ev.uri.compare(0, prefix.size(), prefix) != 0) return {};
  std::size_t index = 0;
  const char* first = ev.uri.data() + prefix.size();
  const char* last = ev.uri.data() + ev.uri.size();
  auto [ptr, ec] = std::from_chars(first, last, index);
  if (ec != std::errc() || ptr != last || first == last) return {};

  const Document& view = s.view();
  const auto matches = spot(view.text, options_.dictionary);
  if (index >= matches.size()) return {};  // UnknownMatchIndex
  const auto* senses = options_.dictionary.senses(matches[index].surface);
  if (!senses) return {};
  std::vector<wire::EventItem> items;
  for (const auto& sense : *senses) {
    items.push_back({"Annotate as " + sense.cd + "/" + sense.name,
                     wire::EditAction{s.rev(), annotate(view, matches[index], sense)}});
  }
  return items;
}

void Spotter::shutdown() {
  std::thread worker;
  {
    std::lock_guard lock(mu_);
    stopping_ = true;
    worker = std::move(worker_);
  }
  cv_.notify_all();
  if (worker.joinable()) worker.join();
}

std::optional<std::size_t> cursor_position(const Document& doc, const std::map<std::string, std::string>& params) {
  auto number = [&](const char* key) -> std::optional<std::size_t> {
    auto it = params.find(key);
    if (it == params.end()) return std::nullopt;
    std::size_t v = 0;
    const char* first = it->second.data();
    const char* last = first + it->second.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last || first == last) return std::nullopt;
    return v;
  };
  if (auto pos = number("pos")) {
    if (*pos > doc.size()) return std::nullopt;
    return pos;
  }
  auto line = number("line");
  auto col = number("col");
  if (!line || !col) return std::nullopt;
  std::size_t start = 0;
  for (std::size_t l = 0; l < *line; ++l) {
    const auto nl = doc.text.find(U'\n', start);
    if (nl == std::u32string::npos) return std::nullopt;
    start = nl + 1;
  }
  auto end = doc.text.find(U'\n', start);
  if (end == std::u32string::npos) end = doc.size();
  if (start + *col > end) return std::nullopt;
  return start + *col;
}

std::vector<std::string> Autocomplete::subscriptions() const { return {"autocomplete.stex"}; }

std::vector<wire::EventItem> Autocomplete::on_event(sdk::ServiceSession& s, const wire::EventMessage& ev) {
  if (ev.uri != "autocomplete.stex") return {};
  const Document& view = s.view();
  const auto pos = cursor_position(view, ev.params);
  if (!pos) return {};
  std::size_t b = *pos;
  while (b > 0 && ((view.text[b - 1] >= U'a' && view.text[b - 1] <= U'z') ||
                   (view.text[b - 1] >= U'A' && view.text[b - 1] <= U'Z'))) {
    --b;
  }
  if (b == 0 || view.text[b - 1] != U'\\') return {};
  const std::u32string prefix = view.text.substr(b - 1, *pos - b + 1);
  std::vector<wire::EventItem> items;
  for (const auto& candidate : complete_command(prefix)) {
    const auto suffix = std::u32string_view(candidate).substr(prefix.size());
    Changeset cs = ChangesetBuilder(view.pool, view.size()).keep_to(*pos).insert(suffix).finish();
    items.push_back({utf8::encode(candidate), wire::EditAction{s.rev(), std::move(cs)}});
  }
  return items;
}

}  // namespace redsys::services

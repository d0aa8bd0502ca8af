#include "redsys/sdk/service.hpp"

#include "redsys/error.hpp"

namespace redsys::sdk {

ServiceSession::ServiceSession(std::string client_id, std::string doc_id, ServiceHandler& handler,
                               Sender sender)
    : client_id_(std::move(client_id)), doc_id_(std::move(doc_id)), handler_(handler), sender_(std::move(sender)) {}

void ServiceSession::start() {
  sender_(wire::Message{doc_id_, wire::Hello{client_id_, wire::Role::kService, handler_.subscriptions(), {}}});
}

void ServiceSession::deliver(wire::Message msg) {
  post([this, msg = std::move(msg)] { process(msg); });
}

void ServiceSession::post(std::function<void()> task) {
  {
    std::lock_guard lock(mu_);
    tasks_.push_back(std::move(task));
  }
  cv_.notify_one();
}

std::size_t ServiceSession::run_pending() {
  std::size_t n = 0;
  for (;;) {
    std::function<void()> task;
    {
      std::lock_guard lock(mu_);
      if (tasks_.empty()) return n;
      task = std::move(tasks_.front());
      tasks_.pop_front();
    }
    task();
    ++n;
  }
}

void ServiceSession::run() {
  for (;;) {
    std::function<void()> task;
    {
      std::unique_lock lock(mu_);
      cv_.wait(lock, [&] { return stopping_ || !tasks_.empty(); });
      if (stopping_) return;
      task = std::move(tasks_.front());
      tasks_.pop_front();
    }
    task();
  }
}

void ServiceSession::stop() {
  {
    std::lock_guard lock(mu_);
    stopping_ = true;
  }
  cv_.notify_all();
}

bool ServiceSession::submit(std::uint64_t base_rev, Changeset cs) {
  if (!state_.ready() || state_.in_flight()) return false;
  sender_(wire::Message{doc_id_, state_.submit_at(base_rev, std::move(cs))});
  return true;
}

std::shared_ptr<ProcessingToken> ServiceSession::watch(std::vector<Range> ranges) {
  auto token = std::make_shared<ProcessingToken>(state_.rev(), std::move(ranges));
  std::erase_if(tokens_, [](const auto& w) { return w.expired(); });
  tokens_.push_back(token);
  return token;
}

void ServiceSession::observe(const Changeset& change, const AttributePool& pool_before) {
  for (const auto& weak : tokens_) {
    if (auto token = weak.lock()) token->observe(change, pool_before);
  }
  std::erase_if(tokens_, [](const auto& w) { return w.expired(); });
}

void ServiceSession::resync() {
  for (const auto& weak : tokens_) {
    if (auto token = weak.lock()) token->cancel();
  }
  tokens_.clear();
  start();
}

void ServiceSession::process(const wire::Message& msg) {
  if (msg.doc_id != doc_id_ && !msg.as<wire::ErrorMessage>()) return;
  if (const auto* init = msg.as<wire::Init>()) {
    try {
      state_.reset(*init);
    } catch (const Error& e) {
      failure_ = e.what();
      stop();
      return;
    }
    for (const auto& weak : tokens_) {
      if (auto token = weak.lock()) token->cancel();
    }
    tokens_.clear();
    handler_.on_init(*this);
  } else if (const auto* update = msg.as<wire::Update>()) {
    const AttributePool before = state_.display().pool;
    auto step = state_.on_update(*update);
    if (step.resync) return resync();
    if (!step.display) return;
    observe(*step.display, before);
    handler_.on_update(*this, *step.display, update->author_id);
  } else if (const auto* ack = msg.as<wire::Ack>()) {
    const AttributePool before = state_.display().pool;
    auto step = state_.on_ack(*ack);
    if (step.resync) return resync();
    if (step.display) {
      observe(*step.display, before);
      handler_.on_update(*this, *step.display, client_id_);
    }
    handler_.on_ack(*this, ack->new_rev);
  } else if (const auto* reject = msg.as<wire::Reject>()) {
    auto step = state_.on_reject(*reject);
    if (step.resync) return resync();
    handler_.on_reject(*this, *reject);
  } else if (const auto* ev = msg.as<wire::EventMessage>()) {
    if (!state_.ready()) {
      if (ev->mode == wire::EventMode::kSync) {
        sender_(wire::Message{doc_id_, wire::EventResponse{ev->correlation_id, {}}});
      }
      return;
    }
    auto items = handler_.on_event(*this, *ev);
    for (auto& item : items) {
      if (item.action) item.action->changeset = reintern(item.action->changeset, view().pool, {});
    }
    if (ev->mode == wire::EventMode::kSync) {
      sender_(wire::Message{doc_id_, wire::EventResponse{ev->correlation_id, std::move(items)}});
    }
  }
}

ServiceRunner::ServiceRunner(std::string_view address, std::string doc_id, std::string client_id,
                             ServiceHandler& handler)
    : handler_(handler), link_(MessageLink::connect(address)) {
  session_ = std::make_unique<ServiceSession>(std::move(client_id), std::move(doc_id), handler,
                                              [this](const wire::Message& m) {
                                                try {
                                                  link_->send(m);
                                                } catch (const Error&) {
                                                  link_->close();
                                                }
                                              });
  executor_ = std::thread([this] {
    session_->run();
    link_->close();
  });
  session_->start();
  pump_ = std::thread([this] {
    while (auto msg = link_->receive()) session_->deliver(std::move(*msg));
    session_->stop();
  });
}

ServiceRunner::~ServiceRunner() {
  stop();
  executor_.join();
  handler_.shutdown();
  pump_.join();
}

void ServiceRunner::wait() {
  while (!stopped_ && !link_->closed()) std::this_thread::sleep_for(std::chrono::milliseconds(50));
}

void ServiceRunner::stop() {
  stopped_ = true;
  link_->close();
  session_->stop();
}

}  // namespace redsys::sdk

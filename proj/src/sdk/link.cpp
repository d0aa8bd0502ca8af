#include "redsys/sdk/link.hpp"

#include "redsys/error.hpp"

namespace redsys::sdk {

MessageLink::MessageLink(std::unique_ptr<net::LineChannel> channel, Observer observer)
    : channel_(std::move(channel)), observer_(std::move(observer)) {
  reader_ = std::thread([this] { read_loop(); });
}

MessageLink::~MessageLink() {
  close();
  reader_.join();
}

std::unique_ptr<MessageLink> MessageLink::connect(std::string_view address, Observer observer) {
  return std::make_unique<MessageLink>(net::connect(address), std::move(observer));
}

void MessageLink::read_loop() {
  try {
    while (auto line = channel_->read_line()) {
      if (line->empty()) continue;
      if (observer_) observer_(true, *line);
      wire::Message msg;
      try {
        msg = wire::decode(*line);
      } catch (const DecodeError&) {
        continue;
      }
      {
        std::lock_guard lock(mu_);
        inbox_.push_back(std::move(msg));
      }
      cv_.notify_all();
    }
  } catch (const Error&) {
  }
  {
    std::lock_guard lock(mu_);
    closed_ = true;
  }
  cv_.notify_all();
}

void MessageLink::send(const wire::Message& msg) {
  const std::string line = wire::encode(msg);
  if (observer_) observer_(false, line);
  channel_->write_line(line);
}

std::optional<wire::Message> MessageLink::receive(std::chrono::milliseconds timeout) {
  std::unique_lock lock(mu_);
  cv_.wait_for(lock, timeout, [&] { return closed_ || !inbox_.empty(); });
  if (inbox_.empty()) return std::nullopt;
  wire::Message msg = std::move(inbox_.front());
  inbox_.pop_front();
  return msg;
}

std::optional<wire::Message> MessageLink::receive() {
  std::unique_lock lock(mu_);
  cv_.wait(lock, [&] { return closed_ || !inbox_.empty(); });
  if (inbox_.empty()) return std::nullopt;
  wire::Message msg = std::move(inbox_.front());
  inbox_.pop_front();
  return msg;
}

bool MessageLink::closed() const {
  std::lock_guard lock(mu_);
  return closed_;
}

void MessageLink::close() { channel_->close(); }

}  // namespace redsys::sdk

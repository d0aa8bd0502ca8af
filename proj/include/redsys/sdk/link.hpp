#pragma once

#include <chrono>
#include <condition_variable>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>

#include "redsys/net/channel.hpp"
#include "redsys/wire/message.hpp"

namespace redsys::sdk {

// A connection to the broker with a reader thread feeding an inbox.
class MessageLink {
 public:
  // Sees every record: inbound as received, outbound before it is written.
  using Observer = std::function<void(bool inbound, const std::string& line)>;

  explicit MessageLink(std::unique_ptr<net::LineChannel> channel, Observer observer = nullptr);
  ~MessageLink();

  MessageLink(const MessageLink&) = delete;
  MessageLink& operator=(const MessageLink&) = delete;

  static std::unique_ptr<MessageLink> connect(std::string_view address, Observer observer = nullptr);

  void send(const wire::Message& msg);

  // nullopt on timeout or once the connection closed and the inbox is empty.
  std::optional<wire::Message> receive(std::chrono::milliseconds timeout);
  std::optional<wire::Message> receive();

  bool closed() const;
  void close();

 private:
  void read_loop();

  std::unique_ptr<net::LineChannel> channel_;
  Observer observer_;
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::deque<wire::Message> inbox_;
  bool closed_ = false;
  std::thread reader_;
};

}  // namespace redsys::sdk

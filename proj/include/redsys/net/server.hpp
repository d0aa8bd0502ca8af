#pragma once

#include <atomic>
#include <memory>
#include <mutex>
#include <thread>
#include <vector>

#include "redsys/broker/broker.hpp"
#include "redsys/net/channel.hpp"

namespace redsys::net {

// Serves a broker on one or more listeners. Each connection gets a reader
// thread that feeds the broker and a writer thread that drains its queue.
class Server {
 public:
  explicit Server(broker::Broker& broker);
  ~Server();

  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  // Starts accepting; returns the bound port.
  std::uint16_t listen(const Endpoint& endpoint, bool websocket);
  std::uint16_t listen(std::string_view address, bool websocket);

  // Closes listeners and connections and joins every thread.
  void stop();

 private:
  struct Connection;

  void accept_loop(Listener* listener);
  void serve(std::shared_ptr<Connection> conn);

  broker::Broker& broker_;
  std::mutex mu_;
  bool stopped_ = false;
  std::vector<std::unique_ptr<Listener>> listeners_;
  std::vector<std::thread> acceptors_;
  std::vector<std::shared_ptr<Connection>> connections_;
  std::vector<std::thread> workers_;
};

}  // namespace redsys::net

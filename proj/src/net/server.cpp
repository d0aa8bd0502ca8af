#include "redsys/net/server.hpp"

#include <condition_variable>
#include <deque>

#include "redsys/error.hpp"

namespace redsys::net {

struct Server::Connection : broker::Peer {
  explicit Connection(std::unique_ptr<LineChannel> ch) : channel(std::move(ch)) {}

  void send(const wire::Message& msg) override { push(wire::encode(msg)); }

  void push(std::string line) {
    {
      std::lock_guard lock(mu);
      if (done) return;
      queue.push_back(std::move(line));
    }
    cv.notify_one();
  }

  void finish() {
    {
      std::lock_guard lock(mu);
      done = true;
    }
    cv.notify_one();
  }

  void write_loop() {
    std::unique_lock lock(mu);
    for (;;) {
      cv.wait(lock, [&] { return done || !queue.empty(); });
      if (queue.empty()) {
        channel->close();
        return;
      }
      std::string line = std::move(queue.front());
      queue.pop_front();
      lock.unlock();
      try {
        channel->write_line(line);
      } catch (const Error&) {
        channel->close();
      }
      lock.lock();
    }
  }

  std::unique_ptr<LineChannel> channel;
  std::mutex mu;
  std::condition_variable cv;
  std::deque<std::string> queue;
  bool done = false;
};

Server::Server(broker::Broker& broker) : broker_(broker) {}

Server::~Server() { stop(); }

std::uint16_t Server::listen(const Endpoint& endpoint, bool websocket) {
  auto listener = std::make_unique<Listener>(endpoint, websocket);
  const auto port = listener->port();
  std::lock_guard lock(mu_);
  Listener* raw = listener.get();
  listeners_.push_back(std::move(listener));
  acceptors_.emplace_back([this, raw] { accept_loop(raw); });
  return port;
}

std::uint16_t Server::listen(std::string_view address, bool websocket) {
  Endpoint ep = parse_endpoint(address);
  return listen(ep, websocket || ep.websocket);
}

void Server::accept_loop(Listener* listener) {
  for (;;) {
    std::unique_ptr<LineChannel> channel;
    try {
      channel = listener->accept();
    } catch (const Error&) {
      continue;
    }
    if (!channel) return;
    auto conn = std::make_shared<Connection>(std::move(channel));
    std::lock_guard lock(mu_);
    if (stopped_) {
      conn->channel->close();
      return;
    }
    connections_.push_back(conn);
    workers_.emplace_back([conn] { conn->write_loop(); });
    workers_.emplace_back([this, conn] { serve(conn); });
  }
}

void Server::serve(std::shared_ptr<Connection> conn) {
  const auto session = broker_.attach(conn);
  try {
    while (auto line = conn->channel->read_line()) {
      if (line->empty()) continue;
      wire::Message msg;
      try {
        msg = wire::decode(*line);
      } catch (const DecodeError& e) {
        conn->send(wire::Message{"", wire::ErrorMessage{std::string(errc_name(Errc::kDecodeError)),
                                                       "offset " + std::to_string(e.offset()) + ": " + e.what()}});
        continue;
      }
      broker_.handle(session, msg);
    }
  } catch (const Error&) {
  }
  broker_.detach(session);
  conn->finish();
  std::lock_guard lock(mu_);
  std::erase(connections_, conn);
}

void Server::stop() {
  std::vector<std::thread> threads;
  {
    std::lock_guard lock(mu_);
    if (stopped_) return;
    stopped_ = true;
    for (auto& l : listeners_) l->close();
  }
  for (auto& t : acceptors_) t.join();
  {
    std::lock_guard lock(mu_);
    for (auto& c : connections_) c->channel->close();
    threads = std::move(workers_);
  }
  for (auto& t : threads) t.join();
  connections_.clear();
  listeners_.clear();
}

}  // namespace redsys::net

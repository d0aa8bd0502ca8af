#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

namespace redsys::net {

// A duplex stream of newline-free text records. write_line may be called
// from several threads; read_line from one thread at a time.
class LineChannel {
 public:
  virtual ~LineChannel() = default;

  // nullopt once the peer closed the stream. Throws Error{ConnectionError}.
  virtual std::optional<std::string> read_line() = 0;
  virtual void write_line(std::string_view line) = 0;
  // Unblocks a pending read_line; safe to call more than once.
  virtual void close() = 0;
  virtual std::string peer_name() const = 0;
};

struct Endpoint {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;
  bool websocket = false;
  std::string target = "/";  // WebSocket request target
};

// "host:port", ":port", "port" or "ws://host:port/target".
Endpoint parse_endpoint(std::string_view address);

// Throws Error{ConnectionError}.
std::unique_ptr<LineChannel> connect(const Endpoint& endpoint);
std::unique_ptr<LineChannel> connect(std::string_view address);

// Accepts raw TCP or WebSocket connections on one endpoint.
class Listener {
 public:
  Listener(const Endpoint& endpoint, bool websocket);
  ~Listener();

  Listener(const Listener&) = delete;
  Listener& operator=(const Listener&) = delete;

  std::uint16_t port() const;
  // nullptr after close(). A failed WebSocket handshake is skipped.
  std::unique_ptr<LineChannel> accept();
  void close();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace redsys::net

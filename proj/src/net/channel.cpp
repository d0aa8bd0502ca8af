#include "redsys/net/channel.hpp"

#include <sys/socket.h>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>
#include <charconv>
#include <deque>
#include <mutex>

#include "redsys/error.hpp"

namespace redsys::net {
namespace {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;

[[noreturn]] void connection_error(const std::string& what) { throw Error(Errc::kConnectionError, what); }

std::string describe(const tcp::socket& socket) {
  boost::system::error_code ec;
  auto ep = socket.remote_endpoint(ec);
  if (ec) return "?";
  return ep.address().to_string() + ":" + std::to_string(ep.port());
}

void tune(tcp::socket& socket) {
  boost::system::error_code ec;
  socket.set_option(tcp::no_delay(true), ec);
}

class TcpChannel : public LineChannel {
 public:
  TcpChannel(std::shared_ptr<asio::io_context> io, tcp::socket socket)
      : io_(std::move(io)), socket_(std::move(socket)), name_(describe(socket_)) {
    tune(socket_);
  }

  std::optional<std::string> read_line() override {
    boost::system::error_code ec;
    const std::size_t n = asio::read_until(socket_, buffer_, '\n', ec);
    if (ec) {
      if (ec == asio::error::eof && buffer_.size() > 0) {
        std::string rest(asio::buffers_begin(buffer_.data()), asio::buffers_end(buffer_.data()));
        buffer_.consume(buffer_.size());
        return rest;
      }
      if (ec == asio::error::eof || closed_) return std::nullopt;
      connection_error("read from " + name_ + ": " + ec.message());
    }
    std::string line(asio::buffers_begin(buffer_.data()),
                     asio::buffers_begin(buffer_.data()) + static_cast<std::ptrdiff_t>(n - 1));
    buffer_.consume(n);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
  }

  void write_line(std::string_view line) override {
    std::lock_guard lock(write_mu_);
    std::array<asio::const_buffer, 2> parts{asio::buffer(line.data(), line.size()), asio::buffer("\n", 1)};
    boost::system::error_code ec;
    asio::write(socket_, parts, ec);
    if (ec) connection_error("write to " + name_ + ": " + ec.message());
  }

  void close() override {
    closed_ = true;
    ::shutdown(socket_.native_handle(), SHUT_RDWR);
  }

  std::string peer_name() const override { return name_; }

 private:
  std::shared_ptr<asio::io_context> io_;
  tcp::socket socket_;
  std::string name_;
  asio::streambuf buffer_;
  std::mutex write_mu_;
  std::atomic<bool> closed_{false};
};

class WsChannel : public LineChannel {
 public:
  WsChannel(std::shared_ptr<asio::io_context> io, websocket::stream<tcp::socket> ws, std::string name)
      : io_(std::move(io)), ws_(std::move(ws)), name_(std::move(name)) {
    ws_.text(true);
  }

  std::optional<std::string> read_line() override {
    while (lines_.empty()) {
      beast::flat_buffer buffer;
      boost::system::error_code ec;
      ws_.read(buffer, ec);
      if (ec) {
        if (closed_ || ec == websocket::error::closed || ec == asio::error::eof) return std::nullopt;
        connection_error("read from " + name_ + ": " + ec.message());
      }
      std::string payload = beast::buffers_to_string(buffer.data());
      std::size_t start = 0;
      while (start <= payload.size()) {
        std::size_t end = payload.find('\n', start);
        if (end == std::string::npos) end = payload.size();
        std::string line = payload.substr(start, end - start);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty() || end < payload.size()) lines_.push_back(std::move(line));
        start = end + 1;
      }
    }
    std::string line = std::move(lines_.front());
    lines_.pop_front();
    return line;
  }

  void write_line(std::string_view line) override {
    std::lock_guard lock(write_mu_);
    boost::system::error_code ec;
    ws_.write(asio::buffer(line.data(), line.size()), ec);
    if (ec) connection_error("write to " + name_ + ": " + ec.message());
  }

  void close() override {
    closed_ = true;
    ::shutdown(beast::get_lowest_layer(ws_).native_handle(), SHUT_RDWR);
  }

  std::string peer_name() const override { return name_; }

 private:
  std::shared_ptr<asio::io_context> io_;
  websocket::stream<tcp::socket> ws_;
  std::string name_;
  std::deque<std::string> lines_;
  std::mutex write_mu_;
  std::atomic<bool> closed_{false};
};

std::uint16_t parse_port(std::string_view text) {
  unsigned value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || value > 65535) {
    connection_error("bad port '" + std::string(text) + "'");
  }
  return static_cast<std::uint16_t>(value);
}

}  // namespace

Endpoint parse_endpoint(std::string_view address) {
  Endpoint ep;
  if (address.rfind("ws://", 0) == 0) {
    ep.websocket = true;
    address.remove_prefix(5);
    if (auto slash = address.find('/'); slash != std::string_view::npos) {
      ep.target = std::string(address.substr(slash));
      address = address.substr(0, slash);
    }
  } else if (address.rfind("tcp://", 0) == 0) {
    address.remove_prefix(6);
  }
  const auto colon = address.rfind(':');
  if (colon == std::string_view::npos) {
    ep.port = parse_port(address);
  } else {
    if (colon > 0) ep.host = std::string(address.substr(0, colon));
    ep.port = parse_port(address.substr(colon + 1));
  }
  return ep;
}

std::unique_ptr<LineChannel> connect(const Endpoint& endpoint) {
  auto io = std::make_shared<asio::io_context>();
  tcp::resolver resolver(*io);
  boost::system::error_code ec;
  auto results = resolver.resolve(endpoint.host, std::to_string(endpoint.port), ec);
  if (ec) connection_error("resolve " + endpoint.host + ": " + ec.message());
  tcp::socket socket(*io);
  asio::connect(socket, results, ec);
  if (ec) {
    connection_error("connect " + endpoint.host + ":" + std::to_string(endpoint.port) + ": " + ec.message());
  }
  if (!endpoint.websocket) return std::make_unique<TcpChannel>(io, std::move(socket));
  tune(socket);
  const std::string name = describe(socket);
  websocket::stream<tcp::socket> ws(std::move(socket));
  ws.handshake(endpoint.host + ":" + std::to_string(endpoint.port), endpoint.target, ec);
  if (ec) connection_error("websocket handshake with " + name + ": " + ec.message());
  return std::make_unique<WsChannel>(io, std::move(ws), name);
}

std::unique_ptr<LineChannel> connect(std::string_view address) { return connect(parse_endpoint(address)); }

struct Listener::Impl {
  std::shared_ptr<asio::io_context> io = std::make_shared<asio::io_context>();
  tcp::acceptor acceptor{*io};
  bool websocket = false;
  std::atomic<bool> closed{false};
};

Listener::Listener(const Endpoint& endpoint, bool websocket) : impl_(std::make_unique<Impl>()) {
  impl_->websocket = websocket;
  boost::system::error_code ec;
  auto address = asio::ip::make_address(endpoint.host == "localhost" ? "127.0.0.1" : endpoint.host, ec);
  if (ec) connection_error("bad listen address '" + endpoint.host + "'");
  tcp::endpoint ep(address, endpoint.port);
  impl_->acceptor.open(ep.protocol(), ec);
  if (!ec) impl_->acceptor.set_option(tcp::acceptor::reuse_address(true), ec);
  if (!ec) impl_->acceptor.bind(ep, ec);
  if (!ec) impl_->acceptor.listen(asio::socket_base::max_listen_connections, ec);
  if (ec) connection_error("listen on " + endpoint.host + ":" + std::to_string(endpoint.port) + ": " + ec.message());
}

Listener::~Listener() { close(); }

std::uint16_t Listener::port() const { return impl_->acceptor.local_endpoint().port(); }

std::unique_ptr<LineChannel> Listener::accept() {
  while (!impl_->closed) {
    tcp::socket socket(*impl_->io);
    boost::system::error_code ec;
    impl_->acceptor.accept(socket, ec);
    if (impl_->closed) return nullptr;
    if (ec) {
      if (ec == asio::error::connection_aborted || ec == asio::error::interrupted) continue;
      connection_error("accept: " + ec.message());
    }
    if (!impl_->websocket) return std::make_unique<TcpChannel>(impl_->io, std::move(socket));
    tune(socket);
    const std::string name = describe(socket);
    websocket::stream<tcp::socket> ws(std::move(socket));
    ws.accept(ec);
    if (ec) continue;
    return std::make_unique<WsChannel>(impl_->io, std::move(ws), name);
  }
  return nullptr;
}

void Listener::close() {
  if (impl_->closed.exchange(true)) return;
  ::shutdown(impl_->acceptor.native_handle(), SHUT_RDWR);
}

}  // namespace redsys::net

#pragma once

#include <memory>
#include <string>

#include "edgepark/transport.hpp"

namespace edgepark {

struct HostPort {
  std::string host;
  std::uint16_t port = 0;
};

/// "host:port". Throws ConfigError.
HostPort parse_host_port(const std::string& address);

/// Non-blocking line-framed TCP stream over an owned socket.
class TcpConnection final : public Connection {
 public:
  explicit TcpConnection(int fd);
  ~TcpConnection() override;
  TcpConnection(const TcpConnection&) = delete;
  TcpConnection& operator=(const TcpConnection&) = delete;

  bool send_line(std::string_view line) override;
  std::optional<std::string> receive_line() override;
  bool is_open() const override { return fd_ >= 0 && !peer_closed_; }
  void close() override;

 private:
  void fill();
  bool flush();

  int fd_;
  bool peer_closed_ = false;
  std::string inbuf_;
  std::string outbuf_;
};

class TcpAcceptor final : public Acceptor {
 public:
  /// Binds and listens; throws std::system_error on failure. Port 0 picks a free port.
  explicit TcpAcceptor(const std::string& address);
  ~TcpAcceptor() override;
  TcpAcceptor(const TcpAcceptor&) = delete;
  TcpAcceptor& operator=(const TcpAcceptor&) = delete;

  std::unique_ptr<Connection> accept() override;
  std::uint16_t port() const { return port_; }

 private:
  int fd_;
  std::uint16_t port_ = 0;
};

class TcpConnector final : public Connector {
 public:
  explicit TcpConnector(std::string address) : address_(std::move(address)) {}
  std::unique_ptr<Connection> connect() override;

 private:
  std::string address_;
};

}  // namespace edgepark

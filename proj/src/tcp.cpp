#include "edgepark/tcp.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <system_error>

#include "edgepark/types.hpp"

namespace edgepark {
namespace {

void set_nonblocking(int fd) {
  const int flags = ::fcntl(fd, F_GETFL, 0);
  ::fcntl(fd, F_SETFL, flags | O_NONBLOCK);
}

sockaddr_in resolve(const HostPort& hp) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  const std::string host = hp.host.empty() ? "0.0.0.0" : hp.host;
  if (::getaddrinfo(host.c_str(), nullptr, &hints, &res) != 0 || !res) {
    throw ConfigError("cannot resolve host '" + host + "'");
  }
  sockaddr_in addr{};
  std::memcpy(&addr, res->ai_addr, sizeof addr);
  ::freeaddrinfo(res);
  addr.sin_port = htons(hp.port);
  return addr;
}

}  // namespace

HostPort parse_host_port(const std::string& address) {
  const auto colon = address.rfind(':');
  if (colon == std::string::npos) throw ConfigError("address '" + address + "' is not host:port");
  HostPort hp;
  hp.host = address.substr(0, colon);
  try {
    const unsigned long port = std::stoul(address.substr(colon + 1));
    if (port > 65535) throw std::out_of_range("port");
    hp.port = static_cast<std::uint16_t>(port);
  } catch (const std::logic_error&) {
    throw ConfigError("address '" + address + "' has an invalid port");
  }
  return hp;
}

TcpConnection::TcpConnection(int fd) : fd_(fd) {
  set_nonblocking(fd_);
  int one = 1;
  ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
}

TcpConnection::~TcpConnection() { close(); }

void TcpConnection::close() {
  if (fd_ >= 0) {
    flush();
    ::close(fd_);
    fd_ = -1;
  }
}

bool TcpConnection::flush() {
  while (fd_ >= 0 && !outbuf_.empty()) {
    const ssize_t n = ::send(fd_, outbuf_.data(), outbuf_.size(), MSG_NOSIGNAL);
    if (n > 0) {
      outbuf_.erase(0, static_cast<std::size_t>(n));
    } else if (n < 0 && (errno == EAGAIN || errno == EWOULDBLOCK)) {
      pollfd p{fd_, POLLOUT, 0};
      ::poll(&p, 1, 50);
    } else if (n < 0 && errno == EINTR) {
      continue;
    } else {
      peer_closed_ = true;
      return false;
    }
  }
  return true;
}

bool TcpConnection::send_line(std::string_view line) {
  if (!is_open()) return false;
  outbuf_.append(line);
  outbuf_.push_back('\n');
  return flush();
}

void TcpConnection::fill() {
  if (fd_ < 0 || peer_closed_) return;
  char buf[4096];
  for (;;) {
    const ssize_t n = ::recv(fd_, buf, sizeof buf, 0);
    if (n > 0) {
      inbuf_.append(buf, static_cast<std::size_t>(n));
    } else if (n == 0) {
      peer_closed_ = true;
      return;
    } else if (errno == EINTR) {
      continue;
    } else {
      if (errno != EAGAIN && errno != EWOULDBLOCK) peer_closed_ = true;
      return;
    }
  }
}

std::optional<std::string> TcpConnection::receive_line() {
  fill();
  const auto nl = inbuf_.find('\n');
  if (nl == std::string::npos) return std::nullopt;
  std::string line = inbuf_.substr(0, nl);
  inbuf_.erase(0, nl + 1);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

TcpAcceptor::TcpAcceptor(const std::string& address) {
  const sockaddr_in addr = resolve(parse_host_port(address));
  fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd_ < 0) throw std::system_error(errno, std::generic_category(), "socket");
  int one = 1;
  ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  if (::bind(fd_, reinterpret_cast<const sockaddr*>(&addr), sizeof addr) != 0 ||
      ::listen(fd_, 16) != 0) {
    const int err = errno;
    ::close(fd_);
    throw std::system_error(err, std::generic_category(), "bind " + address);
  }
  set_nonblocking(fd_);
  sockaddr_in bound{};
  socklen_t len = sizeof bound;
  ::getsockname(fd_, reinterpret_cast<sockaddr*>(&bound), &len);
  port_ = ntohs(bound.sin_port);
}

TcpAcceptor::~TcpAcceptor() {
  if (fd_ >= 0) ::close(fd_);
}

std::unique_ptr<Connection> TcpAcceptor::accept() {
  const int client = ::accept(fd_, nullptr, nullptr);
  if (client < 0) return nullptr;
  return std::make_unique<TcpConnection>(client);
}

std::unique_ptr<Connection> TcpConnector::connect() {
  sockaddr_in addr{};
  try {
    addr = resolve(parse_host_port(address_));
  } catch (const ConfigError&) {
    return nullptr;
  }
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) return nullptr;
  if (::connect(fd, reinterpret_cast<const sockaddr*>(&addr), sizeof addr) != 0) {
    ::close(fd);
    return nullptr;
  }
  return std::make_unique<TcpConnection>(fd);
}

}  // namespace edgepark

#pragma once

#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

namespace edgepark {

/// A reliable, ordered, line-framed byte stream. All calls are non-blocking.
class Connection {
 public:
  virtual ~Connection() = default;
  /// Queues one line (without its newline). False if the stream is closed.
  virtual bool send_line(std::string_view line) = 0;
  /// Next complete line, if one has arrived. Lines received before the peer
  /// closed remain readable afterwards.
  virtual std::optional<std::string> receive_line() = 0;
  /// False once either side has closed.
  virtual bool is_open() const = 0;
  virtual void close() = 0;
};

class Connector {
 public:
  virtual ~Connector() = default;
  /// nullptr when the peer cannot be reached.
  virtual std::unique_ptr<Connection> connect() = 0;
};

class Acceptor {
 public:
  virtual ~Acceptor() = default;
  /// A pending inbound connection, or nullptr.
  virtual std::unique_ptr<Connection> accept() = 0;
};

/// Zero-latency in-memory network for single-threaded simulation. Endpoints
/// are plain names. Not thread-safe.
class InProcessNetwork {
 public:
  enum class Direction { to_server, to_client };
  using Tap = std::function<void(const std::string& endpoint, Direction, std::string_view line)>;

  InProcessNetwork();
  ~InProcessNetwork();
  InProcessNetwork(const InProcessNetwork&) = delete;
  InProcessNetwork& operator=(const InProcessNetwork&) = delete;

  /// Starts accepting on `endpoint`; the acceptor lives as long as the network.
  Acceptor& listen(const std::string& endpoint);
  /// nullptr if nothing listens on `endpoint` or it is refusing.
  std::unique_ptr<Connection> connect(const std::string& endpoint);
  std::unique_ptr<Connector> connector(std::string endpoint);

  void set_refusing(const std::string& endpoint, bool refusing);
  /// Observes every line as it is sent.
  void set_tap(Tap tap) { tap_ = std::move(tap); }

 private:
  struct Pipe;
  class PipeEnd;
  class MemoryAcceptor;
  class MemoryConnector;

  std::map<std::string, std::unique_ptr<MemoryAcceptor>> listeners_;
  Tap tap_;
};

}  // namespace edgepark

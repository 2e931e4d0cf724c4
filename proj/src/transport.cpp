#include "edgepark/transport.hpp"

#include <utility>

namespace edgepark {

struct InProcessNetwork::Pipe {
  std::string endpoint;
  std::deque<std::string> to_server;
  std::deque<std::string> to_client;
  bool closed = false;
  const Tap* tap = nullptr;
};

class InProcessNetwork::PipeEnd final : public Connection {
 public:
  PipeEnd(std::shared_ptr<Pipe> pipe, bool server_side)
      : pipe_(std::move(pipe)), server_side_(server_side) {}
  ~PipeEnd() override { close(); }

  bool send_line(std::string_view line) override {
    if (pipe_->closed) return false;
    const auto dir = server_side_ ? Direction::to_client : Direction::to_server;
    if (pipe_->tap && *pipe_->tap) (*pipe_->tap)(pipe_->endpoint, dir, line);
    (server_side_ ? pipe_->to_client : pipe_->to_server).emplace_back(line);
    return true;
  }

  std::optional<std::string> receive_line() override {
    auto& inbox = server_side_ ? pipe_->to_server : pipe_->to_client;
    if (inbox.empty()) return std::nullopt;
    std::string line = std::move(inbox.front());
    inbox.pop_front();
    return line;
  }

  bool is_open() const override { return !pipe_->closed; }
  void close() override { pipe_->closed = true; }

 private:
  std::shared_ptr<Pipe> pipe_;
  bool server_side_;
};

class InProcessNetwork::MemoryAcceptor final : public Acceptor {
 public:
  std::unique_ptr<Connection> accept() override {
    if (pending.empty()) return nullptr;
    auto conn = std::move(pending.front());
    pending.pop_front();
    return conn;
  }

  std::deque<std::unique_ptr<Connection>> pending;
  bool refusing = false;
};

class InProcessNetwork::MemoryConnector final : public Connector {
 public:
  MemoryConnector(InProcessNetwork& net, std::string endpoint)
      : net_(net), endpoint_(std::move(endpoint)) {}
  std::unique_ptr<Connection> connect() override { return net_.connect(endpoint_); }

 private:
  InProcessNetwork& net_;
  std::string endpoint_;
};

InProcessNetwork::InProcessNetwork() = default;
InProcessNetwork::~InProcessNetwork() = default;

Acceptor& InProcessNetwork::listen(const std::string& endpoint) {
  auto& slot = listeners_[endpoint];
  if (!slot) slot = std::make_unique<MemoryAcceptor>();
  return *slot;
}

std::unique_ptr<Connection> InProcessNetwork::connect(const std::string& endpoint) {
  auto it = listeners_.find(endpoint);
  if (it == listeners_.end() || it->second->refusing) return nullptr;
  auto pipe = std::make_shared<Pipe>();
  pipe->endpoint = endpoint;
  pipe->tap = &tap_;
  it->second->pending.push_back(std::make_unique<PipeEnd>(pipe, /*server_side=*/true));
  return std::make_unique<PipeEnd>(pipe, /*server_side=*/false);
}

std::unique_ptr<Connector> InProcessNetwork::connector(std::string endpoint) {
  return std::make_unique<MemoryConnector>(*this, std::move(endpoint));
}

void InProcessNetwork::set_refusing(const std::string& endpoint, bool refusing) {
  listen(endpoint);
  listeners_[endpoint]->refusing = refusing;
}

}  // namespace edgepark

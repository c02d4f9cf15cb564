#include "kinesnap/server.hpp"

#include <sys/socket.h>

#include <atomic>
#include <list>
#include <mutex>
#include <thread>

#include <boost/asio/ip/tcp.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>
#include <spdlog/spdlog.h>

#include "kinesnap/protocol.hpp"

namespace kinesnap {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;

namespace {

struct Connection {
  std::thread worker;
  std::atomic<bool> finished{false};
  int fd = -1;
};

void serve_connection(tcp::socket socket, const ChainDefinitiond& chain, SyncPolicy policy) {
  beast::error_code ec;
  const auto endpoint = socket.remote_endpoint(ec);
  const std::string peer = ec ? "unknown peer" : endpoint.address().to_string() + ":" + std::to_string(endpoint.port());
  try {
    websocket::stream<tcp::socket> ws(std::move(socket));
    ws.accept();
    spdlog::info("connection from {}", peer);
    ProtocolSession session(chain, policy);
    beast::flat_buffer buffer;
    for (;;) {
      ws.read(buffer);
      const std::string request = beast::buffers_to_string(buffer.data());
      buffer.consume(buffer.size());
      spdlog::debug("{} <- {}", peer, request);
      const std::string response = session.handle(request);
      spdlog::debug("{} -> {}", peer, response);
      ws.text(true);
      ws.write(asio::buffer(response));
    }
  } catch (const beast::system_error& e) {
    if (e.code() != websocket::error::closed) spdlog::debug("{}: {}", peer, e.what());
  } catch (const std::exception& e) {
    spdlog::warn("{}: {}", peer, e.what());
  }
  spdlog::info("{} disconnected", peer);
}

}  // namespace

struct Server::Impl {
  ChainDefinitiond chain;
  SyncPolicy policy;
  asio::io_context ioc{1};
  tcp::acceptor acceptor{ioc};
  std::mutex mutex;
  std::list<Connection> connections;
  bool stopping = false;

  void accept_next() {
    acceptor.async_accept([this](beast::error_code ec, tcp::socket socket) {
      if (ec) return;  // acceptor closed by stop()
      std::lock_guard lock(mutex);
      reap();
      if (stopping) return;
      auto& conn = connections.emplace_back();
      conn.fd = socket.native_handle();
      conn.worker = std::thread([this, &conn, s = std::move(socket)]() mutable {
        serve_connection(std::move(s), chain, policy);
        conn.finished = true;
      });
      accept_next();
    });
  }

  /// Joins threads that have already returned. Caller holds `mutex`.
  void reap() {
    for (auto it = connections.begin(); it != connections.end();) {
      if (it->finished) {
        it->worker.join();
        it = connections.erase(it);
      } else {
        ++it;
      }
    }
  }
};

Server::Server(ChainDefinitiond chain, const std::string& address, unsigned short port, SyncPolicy policy)
    : impl_(std::make_unique<Impl>()) {
  impl_->chain = validate_chain(std::move(chain));
  impl_->policy = policy;
  const tcp::endpoint endpoint(asio::ip::make_address(address), port);
  impl_->acceptor.open(endpoint.protocol());
  impl_->acceptor.set_option(asio::socket_base::reuse_address(true));
  impl_->acceptor.bind(endpoint);
  impl_->acceptor.listen();
}

Server::~Server() {
  stop();
  std::lock_guard lock(impl_->mutex);
  for (auto& conn : impl_->connections)
    if (conn.worker.joinable()) conn.worker.join();
}

unsigned short Server::port() const { return impl_->acceptor.local_endpoint().port(); }

void Server::run() {
  spdlog::info("serving chain '{}' on port {}", impl_->chain.name, port());
  impl_->accept_next();
  impl_->ioc.run();
  std::list<Connection> remaining;
  {
    std::lock_guard lock(impl_->mutex);
    remaining.splice(remaining.end(), impl_->connections);
  }
  for (auto& conn : remaining) conn.worker.join();
}

void Server::stop() {
  {
    std::lock_guard lock(impl_->mutex);
    if (impl_->stopping) return;
    impl_->stopping = true;
    // Unblocks the synchronous reads in every connection thread.
    for (auto& conn : impl_->connections)
      if (!conn.finished) ::shutdown(conn.fd, SHUT_RDWR);
  }
  impl_->ioc.stop();
}

}  // namespace kinesnap

#pragma once

#include <memory>
#include <string>

#include "kinesnap/rig_session.hpp"

namespace kinesnap {

/// Websocket front end for ProtocolSession. Every accepted connection gets
/// its own thread and its own session built from `chain`; a slow solve on one
/// connection never holds up another. Sessions are dropped on disconnect.
class Server {
 public:
  /// Binds immediately; port 0 picks a free port (see port()). Bind
  /// failures throw std::system_error.
  Server(ChainDefinitiond chain, const std::string& address = "127.0.0.1", unsigned short port = 0,
         SyncPolicy policy = SyncPolicy::Integrated);
  ~Server();

  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  unsigned short port() const;

  /// Accepts connections until stop(). Returns after every connection thread
  /// has finished.
  void run();

  /// Thread-safe; may be called before, during or after run().
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace kinesnap

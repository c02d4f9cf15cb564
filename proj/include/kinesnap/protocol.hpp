#pragma once

#include <string>
#include <string_view>

#include "kinesnap/rig_session.hpp"

namespace kinesnap {

/// One connection's view of the wire protocol (docs/protocol.md). Owns its
/// RigSession; not thread-safe, the server gives each connection its own.
///
/// Every call to handle() returns exactly one JSON response. Malformed input
/// produces an `error` response and leaves the session untouched.
class ProtocolSession {
 public:
  explicit ProtocolSession(ChainDefinitiond chain, SyncPolicy policy = SyncPolicy::Integrated);

  std::string handle(std::string_view message);

  const RigSession& session() const { return session_; }

 private:
  RigSession session_;
};

}  // namespace kinesnap

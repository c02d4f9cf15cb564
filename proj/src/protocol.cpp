#include "kinesnap/protocol.hpp"

#include <optional>
#include <utility>

#include "json.hpp"
#include "kinesnap/scene_io.hpp"

namespace kinesnap {

namespace {

using nlohmann::json;

/// Protocol-level failure: bad envelope or payload shape. Library errors keep
/// their own codes.
struct RequestError {
  std::string code;
  std::string message;
};

json vec3(const Vector3<double>& v) { return json::array({v.x(), v.y(), v.z()}); }

const json& payload_of(const json& request) {
  static const json empty = json::object();
  if (!request.contains("payload")) return empty;
  const json& p = request["payload"];
  if (!p.is_object()) throw RequestError{"BadPayload", "payload must be an object"};
  return p;
}

void allow_keys(const json& payload, std::initializer_list<std::string_view> keys) {
  for (const auto& item : payload.items()) {
    bool known = false;
    for (auto k : keys) known = known || item.key() == k;
    if (!known) throw RequestError{"BadPayload", "unknown payload key '" + item.key() + "'"};
  }
}

const json& require(const json& payload, const char* key) {
  if (!payload.contains(key)) throw RequestError{"BadPayload", std::string("missing payload field '") + key + "'"};
  return payload[key];
}

Vector3<double> read_target(const json& node) {
  if (!node.is_array() || node.size() != 3 || !node[0].is_number() || !node[1].is_number() || !node[2].is_number())
    throw RequestError{"BadPayload", "target must be an array of 3 numbers"};
  return {node[0].get<double>(), node[1].get<double>(), node[2].get<double>()};
}

json solve_json(const SolveResultd& r) {
  json out = {{"status", to_string(r.status)}, {"iterations", r.iterations_used}, {"residual", r.residual}};
  if (r.trace) {
    json trace = json::array();
    for (const auto& entry : *r.trace) {
      json e = {{"residual", entry.residual}};
      e["strategy"] = entry.strategy ? json(to_string(*entry.strategy)) : json(nullptr);
      trace.push_back(std::move(e));
    }
    out["trace"] = std::move(trace);
  }
  return out;
}

json state_json(const RigSession& s) {
  const auto& chain = s.chain();
  const Posed pose = s.pose();
  json names = json::array(), angles = json::array(), positions = json::array();
  for (std::size_t i = 0; i < chain.joints.size(); ++i) {
    names.push_back(chain.joints[i].name);
    angles.push_back(radians_to_degrees(s.dofs()[static_cast<Index>(i)]));
    positions.push_back(vec3(pose.joint_positions[i]));
  }
  json state = {
      {"chain", chain.name},
      {"mode", to_string(s.mode())},
      {"policy", to_string(s.policy())},
      {"joints", std::move(names)},
      {"angles_deg", std::move(angles)},
      {"joint_positions", std::move(positions)},
      {"fk_tip", vec3(pose.tip)},
      {"tip", vec3(s.tip())},
      {"effector_goal", vec3(s.effector_goal())},
      {"tolerance", s.solver_config().tolerance},
      {"reach", chain_reach(chain)},
  };
  state["last_solve"] = s.last_solve() ? solve_json(*s.last_solve()) : json(nullptr);
  return state;
}

json event_json(const RigEvent& e) {
  json out = {{"kind", to_string(e.kind)},
              {"tip_before", vec3(e.tip_before)},
              {"tip_after", vec3(e.tip_after)},
              {"tip_displacement", e.tip_displacement()}};
  if (const auto* rot = std::get_if<RotatePayload>(&e.payload)) {
    out["joint"] = rot->joint;
    out["requested_deg"] = radians_to_degrees(rot->requested);
    out["applied_deg"] = radians_to_degrees(rot->applied);
    out["clamped"] = rot->clamped;
  }
  if (e.solve) out["solve"] = solve_json(*e.solve);
  if (e.legacy_tip) out["legacy_tip"] = vec3(*e.legacy_tip);
  return out;
}

Index resolve_joint(const RigSession& s, const json& node) {
  if (node.is_string()) {
    const auto index = s.chain().find_joint(node.get<std::string>());
    if (!index) throw Error(ErrorCode::UnknownJoint, "no joint named '" + node.get<std::string>() + "'");
    return *index;
  }
  if (node.is_number_integer()) {
    const auto value = node.get<std::int64_t>();
    if (value < 0 || value >= s.chain().dof())
      throw Error(ErrorCode::IndexOutOfRange, "joint index " + std::to_string(value) + " out of range");
    return static_cast<Index>(value);
  }
  throw RequestError{"BadPayload", "joint must be a name or an integer index"};
}

std::optional<SyncPolicy> policy_from(const std::string& text) {
  if (text == "integrated") return SyncPolicy::Integrated;
  if (text == "external-sim") return SyncPolicy::ExternalSolverSim;
  return std::nullopt;
}

/// Invalid UTF-8 echoed back from a request is replaced rather than thrown.
std::string wire(const json& j) { return j.dump(-1, ' ', false, json::error_handler_t::replace); }

json error_response(const json& id, std::string_view code, std::string_view message) {
  return {{"kind", "error"}, {"id", id}, {"payload", {{"code", code}, {"message", message}}}};
}

}  // namespace

ProtocolSession::ProtocolSession(ChainDefinitiond chain, SyncPolicy policy)
    : session_(std::move(chain), std::nullopt, policy) {}

std::string ProtocolSession::handle(std::string_view message) {
  json id = nullptr;
  try {
    json request;
    try {
      request = json::parse(message.begin(), message.end());
    } catch (const json::exception& e) {  // parse_error, or out_of_range for 1e999
      throw RequestError{"Malformed", e.what()};
    }
    if (!request.is_object()) throw RequestError{"Malformed", "request must be a JSON object"};
    if (request.contains("id")) {
      if (!request["id"].is_number_integer()) throw RequestError{"Malformed", "id must be an integer"};
      id = request["id"];
    } else {
      throw RequestError{"Malformed", "missing integer id"};
    }
    if (!request.contains("kind") || !request["kind"].is_string())
      throw RequestError{"Malformed", "missing string kind"};
    for (const auto& item : request.items())
      if (item.key() != "kind" && item.key() != "id" && item.key() != "payload")
        throw RequestError{"Malformed", "unknown field '" + item.key() + "'"};

    const std::string kind = request["kind"].get<std::string>();
    const json& payload = payload_of(request);
    std::optional<json> event;
    const std::size_t events_before = session_.history().size();

    if (kind == "get_state") {
      allow_keys(payload, {});
    } else if (kind == "set_mode") {
      allow_keys(payload, {"mode"});
      const json& mode = require(payload, "mode");
      if (mode == "ik") {
        if (session_.mode() == Mode::FK) session_.switch_to_ik();
      } else if (mode == "fk") {
        if (session_.mode() == Mode::IK) session_.switch_to_fk();
      } else {
        throw RequestError{"BadPayload", "mode must be \"fk\" or \"ik\""};
      }
    } else if (kind == "rot") {
      allow_keys(payload, {"joint", "deg"});
      const Index joint = resolve_joint(session_, require(payload, "joint"));
      const json& deg = require(payload, "deg");
      if (!deg.is_number()) throw RequestError{"BadPayload", "deg must be a number"};
      session_.rotate_joint(joint, degrees_to_radians(deg.get<double>()));
    } else if (kind == "move_effector") {
      allow_keys(payload, {"target", "trace"});
      const Vector3<double> target = read_target(require(payload, "target"));
      bool trace = false;
      if (payload.contains("trace")) {
        if (!payload["trace"].is_boolean()) throw RequestError{"BadPayload", "trace must be a boolean"};
        trace = payload["trace"].get<bool>();
      }
      session_.move_effector(target, trace);
    } else if (kind == "set_policy") {
      allow_keys(payload, {"policy"});
      const json& p = require(payload, "policy");
      const auto policy = p.is_string() ? policy_from(p.get<std::string>()) : std::nullopt;
      if (!policy) throw RequestError{"BadPayload", "policy must be \"integrated\" or \"external-sim\""};
      session_.set_policy(*policy);
    } else if (kind == "reset") {
      allow_keys(payload, {});
      session_.reset();
    } else if (kind == "load_chain") {
      allow_keys(payload, {"chain"});
      const json& doc = require(payload, "chain");
      if (!doc.is_object()) throw RequestError{"BadPayload", "chain must be a chain document object"};
      auto chain = parse_chain_file(doc.dump());
      session_ = RigSession(std::move(chain), std::nullopt, session_.policy());
    } else {
      throw RequestError{"UnknownKind", "unknown request kind '" + kind + "'"};
    }

    if (session_.history().size() > events_before && kind != "load_chain") event = event_json(session_.history().back());
    json state = state_json(session_);
    if (event) state["event"] = std::move(*event);
    return wire(json{{"kind", "state"}, {"id", id}, {"payload", std::move(state)}});
  } catch (const RequestError& e) {
    return wire(error_response(id, e.code, e.message));
  } catch (const Error& e) {
    return wire(error_response(id, to_string(e.code()), e.what()));
  } catch (const json::exception& e) {
    return wire(error_response(id, "BadPayload", e.what()));
  }
}

}  // namespace kinesnap

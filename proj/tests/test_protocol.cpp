#include "doctest.h"
#include "json.hpp"
#include "kinesnap/protocol.hpp"
#include "support.hpp"

using namespace kinesnap;
using nlohmann::json;
using kinesnap::testing::arm2;

namespace {

json ask_json(ProtocolSession& p, const json& request) { return json::parse(p.handle(request.dump())); }

json ask(ProtocolSession& p, std::string_view raw) { return json::parse(p.handle(raw)); }

Vector3<double> vec(const json& j) { return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()}; }

}  // namespace

TEST_CASE("get_state echoes the initial state") {
  ProtocolSession p(arm2());
  const auto r = ask(p, R"({"kind":"get_state","id":1})");
  CHECK(r["kind"] == "state");
  CHECK(r["id"] == 1);
  const auto& s = r["payload"];
  CHECK(s["mode"] == "fk");
  CHECK(s["policy"] == "integrated");
  CHECK(s["joints"] == json::array({"j1", "j2"}));
  CHECK(s["angles_deg"] == json::array({0.0, 0.0}));
  CHECK(vec(s["joint_positions"][1]) == Vector3<double>(1, 0, 0));
  CHECK(vec(s["tip"]) == Vector3<double>(2, 0, 0));
  CHECK(vec(s["effector_goal"]) == Vector3<double>(2, 0, 0));
  CHECK(s["last_solve"].is_null());
  CHECK(s["reach"] == 2.0);
  CHECK_FALSE(s.contains("event"));
}

TEST_CASE("set_mode ik puts the goal on the previous tip") {
  ProtocolSession p(arm2());
  ask_json(p, json{{"kind", "rot"}, {"id", 1}, {"payload", {{"joint", "j2"}, {"deg", 90}}}});
  const auto before = vec(ask(p, R"({"kind":"get_state","id":2})")["payload"]["tip"]);
  const auto r = ask(p, R"({"kind":"set_mode","id":3,"payload":{"mode":"ik"}})");
  CHECK(r["id"] == 3);
  CHECK(r["payload"]["mode"] == "ik");
  CHECK(vec(r["payload"]["effector_goal"]) == before);
  CHECK(r["payload"]["event"]["kind"] == "switch_to_ik");
  CHECK(r["payload"]["event"]["tip_displacement"] == 0.0);

  // Asking for the mode already active changes nothing and logs nothing.
  const auto again = ask(p, R"({"kind":"set_mode","id":4,"payload":{"mode":"ik"}})");
  CHECK(again["kind"] == "state");
  CHECK_FALSE(again["payload"].contains("event"));
}

TEST_CASE("rot by name or index, with clamping echoed") {
  auto c = arm2();
  c.joints[0].limits = JointLimits<double>{-0.5, 0.5};
  ProtocolSession p(c);
  auto r = ask(p, R"({"kind":"rot","id":1,"payload":{"joint":1,"deg":90}})");
  CHECK((vec(r["payload"]["tip"]) - Vector3<double>(1, 1, 0)).norm() < 1e-12);
  r = ask(p, R"({"kind":"rot","id":2,"payload":{"joint":"j1","deg":90}})");
  CHECK(r["payload"]["event"]["clamped"] == true);
  CHECK(r["payload"]["event"]["applied_deg"].get<double>() == doctest::Approx(radians_to_degrees(0.5)));
  CHECK(r["payload"]["angles_deg"][0].get<double>() == doctest::Approx(radians_to_degrees(0.5)));
}

TEST_CASE("move_effector solves and can return its trace") {
  ProtocolSession p(arm2());
  ask(p, R"({"kind":"set_mode","id":1,"payload":{"mode":"ik"}})");
  auto r = ask(p, R"({"kind":"move_effector","id":2,"payload":{"target":[1,1,0]}})");
  CHECK(r["payload"]["last_solve"]["status"] == "converged");
  CHECK((vec(r["payload"]["tip"]) - Vector3<double>(1, 1, 0)).norm() <= 1e-4);
  CHECK_FALSE(r["payload"]["last_solve"].contains("trace"));

  r = ask(p, R"({"kind":"move_effector","id":3,"payload":{"target":[0,1.5,0],"trace":true}})");
  const auto& trace = r["payload"]["last_solve"]["trace"];
  REQUIRE(trace.is_array());
  CHECK(trace.size() == r["payload"]["last_solve"]["iterations"].get<std::size_t>() + 1);
  CHECK(trace.back()["strategy"].is_null());

  r = ask(p, R"({"kind":"move_effector","id":4,"payload":{"target":[5,0,0]}})");
  CHECK(r["kind"] == "state");
  CHECK(r["payload"]["last_solve"]["status"] != "converged");
}

TEST_CASE("mode errors come back as structured errors with the id") {
  ProtocolSession p(arm2());
  auto r = ask(p, R"({"kind":"move_effector","id":7,"payload":{"target":[1,1,0]}})");
  CHECK(r["kind"] == "error");
  CHECK(r["id"] == 7);
  CHECK(r["payload"]["code"] == "WrongMode");

  ask(p, R"({"kind":"set_mode","id":8,"payload":{"mode":"ik"}})");
  r = ask(p, R"({"kind":"rot","id":9,"payload":{"joint":"j1","deg":10}})");
  CHECK(r["payload"]["code"] == "WrongMode");
  r = ask(p, R"({"kind":"set_policy","id":10,"payload":{"policy":"external-sim"}})");
  CHECK(r["payload"]["code"] == "WrongMode");
}

TEST_CASE("set_policy, reset and load_chain") {
  ProtocolSession p(arm2());
  auto r = ask(p, R"({"kind":"set_policy","id":1,"payload":{"policy":"external-sim"}})");
  CHECK(r["payload"]["policy"] == "external-sim");

  ask(p, R"({"kind":"set_mode","id":2,"payload":{"mode":"ik"}})");
  r = ask(p, R"({"kind":"move_effector","id":3,"payload":{"target":[1,1,0]}})");
  CHECK(vec(r["payload"]["tip"]) == Vector3<double>(1, 1, 0));
  CHECK(r["payload"]["angles_deg"] == json::array({0.0, 0.0}));
  r = ask(p, R"({"kind":"set_mode","id":4,"payload":{"mode":"fk"}})");
  CHECK(r["payload"]["event"]["tip_displacement"].get<double>() <= 1e-4);
  CHECK(r["payload"]["event"].contains("legacy_tip"));

  r = ask(p, R"({"kind":"reset","id":5})");
  CHECK(r["payload"]["angles_deg"] == json::array({0.0, 0.0}));
  CHECK(r["payload"]["event"]["kind"] == "reset");

  r = ask_json(p, json{{"kind", "load_chain"},
                  {"id", 6},
                  {"payload",
                   {{"chain",
                     {{"name", "one"},
                      {"joints", {{{"name", "a"}, {"offset", {0, 0, 0}}, {"axis", {0, 0, 1}}}}},
                      {"tip_offset", {3, 0, 0}}}}}}});
  CHECK(r["payload"]["chain"] == "one");
  CHECK(r["payload"]["policy"] == "external-sim");
  CHECK(vec(r["payload"]["tip"]) == Vector3<double>(3, 0, 0));

  r = ask(p, R"({"kind":"load_chain","id":7,"payload":{"chain":{"name":"bad","joints":[]}}})");
  CHECK(r["payload"]["code"] == "ValidationError");
  CHECK(ask(p, R"({"kind":"get_state","id":8})")["payload"]["chain"] == "one");
}

TEST_CASE("malformed envelopes and payloads") {
  ProtocolSession p(arm2());
  const std::vector<std::pair<std::string, std::string>> cases = {
      {"", "Malformed"},
      {"{", "Malformed"},
      {"[1,2]", "Malformed"},
      {R"({"kind":"get_state"})", "Malformed"},
      {R"({"kind":"get_state","id":"1"})", "Malformed"},
      {R"({"kind":"get_state","id":1.5})", "Malformed"},
      {R"({"id":1})", "Malformed"},
      {R"({"kind":"get_state","id":1,"extra":0})", "Malformed"},
      {R"({"kind":"dance","id":1})", "UnknownKind"},
      {R"({"kind":"get_state","id":1,"payload":[]})", "BadPayload"},
      {R"({"kind":"set_mode","id":1,"payload":{}})", "BadPayload"},
      {R"({"kind":"set_mode","id":1,"payload":{"mode":3}})", "BadPayload"},
      {R"({"kind":"rot","id":1,"payload":{"joint":"j9","deg":1}})", "UnknownJoint"},
      {R"({"kind":"rot","id":1,"payload":{"joint":5,"deg":1}})", "IndexOutOfRange"},
      {R"({"kind":"rot","id":1,"payload":{"joint":true,"deg":1}})", "BadPayload"},
      {R"({"kind":"rot","id":1,"payload":{"joint":0,"deg":"x"}})", "BadPayload"},
      {R"({"kind":"rot","id":1,"payload":{"joint":0,"deg":1e999}})", "Malformed"},
      {R"({"kind":"move_effector","id":1,"payload":{"target":[1,1]}})", "BadPayload"},
      {R"({"kind":"set_policy","id":1,"payload":{"policy":"other"}})", "BadPayload"},
      {R"({"kind":"load_chain","id":1,"payload":{"chain":"arm2.json"}})", "BadPayload"},
      {R"({"kind":"reset","id":1,"payload":{"hard":true}})", "BadPayload"},
  };
  for (const auto& [raw, code] : cases) {
    CAPTURE(raw);
    const auto r = ask(p, raw);
    CHECK(r["kind"] == "error");
    CHECK(r["payload"]["code"] == code);
  }
  CHECK(ask(p, "\xff\xfe")["kind"] == "error");
  CHECK(ask(p, R"({"kind":"get_state","id":1})")["payload"]["angles_deg"] == json::array({0.0, 0.0}));
}

TEST_CASE("fuzzed requests always get one well-formed response and leave the session usable") {
  ProtocolSession p(arm2());
  SeededUniform rng(77);
  const std::vector<std::string> seeds = {
      R"({"kind":"get_state","id":1})",
      R"({"kind":"set_mode","id":2,"payload":{"mode":"ik"}})",
      R"({"kind":"set_mode","id":3,"payload":{"mode":"fk"}})",
      R"({"kind":"rot","id":4,"payload":{"joint":"j2","deg":45}})",
      R"({"kind":"move_effector","id":5,"payload":{"target":[1,1,0],"trace":true}})",
      R"({"kind":"set_policy","id":6,"payload":{"policy":"external-sim"}})",
      R"({"kind":"reset","id":7})",
      R"({"kind":"load_chain","id":8,"payload":{"chain":{"name":"c","joints":[{"name":"a","offset":[0,0,0],"axis":[0,0,1]}]}}})",
  };
  const std::string alphabet = "{}[]\":,0123456789.-eE truefalsnkidpyoa\\\x01\xc3";
  int errors = 0;
  for (int t = 0; t < 3000; ++t) {
    std::string msg = seeds[static_cast<std::size_t>(rng(0, 1) * seeds.size())];
    const int edits = 1 + static_cast<int>(rng(0, 4));
    for (int k = 0; k < edits && !msg.empty(); ++k) {
      const auto pos = static_cast<std::size_t>(rng(0, 1) * msg.size());
      const char ch = alphabet[static_cast<std::size_t>(rng(0, 1) * alphabet.size())];
      switch (static_cast<int>(rng(0, 3))) {
        case 0: msg[pos] = ch; break;
        case 1: msg.insert(msg.begin() + static_cast<std::ptrdiff_t>(pos), ch); break;
        default: msg.erase(pos, 1); break;
      }
    }
    const std::string raw = p.handle(msg);
    json r;
    REQUIRE_NOTHROW(r = json::parse(raw));
    REQUIRE(r.is_object());
    const bool ok = r["kind"] == "state" || r["kind"] == "error";
    REQUIRE(ok);
    if (r["kind"] == "error") {
      ++errors;
      CHECK(r["payload"]["code"].is_string());
      CHECK(r["payload"]["message"].is_string());
    }
    REQUIRE(ask(p, R"({"kind":"get_state","id":0})")["kind"] == "state");
  }
  CHECK(errors > 1000);
}

TEST_CASE("a request log replayed on a fresh session reproduces the end state") {
  const std::vector<std::string> log = {
      R"({"kind":"rot","id":1,"payload":{"joint":"j1","deg":30}})",
      R"({"kind":"set_mode","id":2,"payload":{"mode":"ik"}})",
      R"({"kind":"move_effector","id":3,"payload":{"target":[0.2,1.4,0]}})",
      R"({"kind":"set_mode","id":4,"payload":{"mode":"fk"}})",
      R"({"kind":"rot","id":5,"payload":{"joint":1,"deg":-20}})",
      R"({"kind":"get_state","id":6})",
  };
  ProtocolSession a(arm2()), b(arm2());
  std::string last_a, last_b;
  for (const auto& m : log) last_a = a.handle(m);
  for (const auto& m : log) last_b = b.handle(m);
  CHECK(last_a == last_b);
}

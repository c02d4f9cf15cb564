#include <numbers>

#include "doctest.h"
#include "kinesnap/rig_session.hpp"
#include "support.hpp"

using namespace kinesnap;
using kinesnap::testing::arm2;

namespace {

constexpr double pi = std::numbers::pi;

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::ValidationError;
}

bool is_switch(EventKind k) { return k == EventKind::SwitchToIK || k == EventKind::SwitchToFK; }

}  // namespace

TEST_CASE("a new session rests in FK mode with the goal on the tip") {
  RigSession s(arm2());
  CHECK(s.mode() == Mode::FK);
  CHECK(s.policy() == SyncPolicy::Integrated);
  CHECK(s.dofs() == DofVectord::Zero(2));
  CHECK(s.effector_goal() == Vector3<double>(2, 0, 0));
  CHECK(s.history().empty());
}

TEST_CASE("rotating the elbow moves the tip") {
  RigSession s(arm2());
  s.rotate_joint(1, pi / 2);
  const auto& e = s.history().back();
  CHECK(e.kind == EventKind::Rotate);
  CHECK(e.tip_before == Vector3<double>(2, 0, 0));
  CHECK((e.tip_after - Vector3<double>(1, 1, 0)).norm() < 1e-12);
  CHECK_FALSE(std::get<RotatePayload>(e.payload).clamped);
}

TEST_CASE("rotation is clamped to joint limits") {
  auto c = arm2();
  c.joints[1].limits = JointLimits<double>{-pi / 4, pi / 4};
  RigSession s(c);
  s.rotate_joint(1, pi / 2);
  CHECK(s.dofs()[1] == pi / 4);
  const auto& p = std::get<RotatePayload>(s.history().back().payload);
  CHECK(p.clamped);
  CHECK(p.requested == pi / 2);
  CHECK(p.applied == pi / 4);
}

TEST_CASE("mode-gated operations fail without touching the session") {
  RigSession s(arm2());
  s.rotate_joint(0, 0.3);
  const auto dofs = s.dofs();
  const auto events = s.history().size();

  CHECK(code_of([&] { s.move_effector({1, 1, 0}); }) == ErrorCode::WrongMode);
  CHECK(code_of([&] { s.switch_to_fk(); }) == ErrorCode::WrongMode);
  s.switch_to_ik();
  CHECK(code_of([&] { s.rotate_joint(0, 1.0); }) == ErrorCode::WrongMode);
  CHECK(code_of([&] { s.switch_to_ik(); }) == ErrorCode::WrongMode);
  CHECK(code_of([&] { s.set_policy(SyncPolicy::ExternalSolverSim); }) == ErrorCode::WrongMode);
  CHECK(s.dofs() == dofs);
  CHECK(s.history().size() == events + 1);
  CHECK(s.policy() == SyncPolicy::Integrated);
}

TEST_CASE("argument checks") {
  RigSession s(arm2());
  CHECK(code_of([&] { s.rotate_joint(2, 0.1); }) == ErrorCode::IndexOutOfRange);
  CHECK(code_of([&] { s.rotate_joint(-1, 0.1); }) == ErrorCode::IndexOutOfRange);
  CHECK(code_of([&] { s.rotate_joint(0, std::nan("")); }) == ErrorCode::NonFiniteInput);
  s.switch_to_ik();
  CHECK(code_of([&] { s.move_effector({INFINITY, 0, 0}); }) == ErrorCode::NonFiniteInput);
  CHECK(s.history().size() == 1);
}

TEST_CASE("switching to IK puts the handle on the current tip") {
  RigSession s(arm2());
  s.switch_to_ik();
  CHECK(s.effector_goal() == Vector3<double>(2, 0, 0));
  s.switch_to_fk();

  s.rotate_joint(1, pi / 2);
  const auto tip = s.tip();
  s.switch_to_ik();
  CHECK(s.mode() == Mode::IK);
  CHECK(s.effector_goal() == tip);
  CHECK((s.effector_goal() - Vector3<double>(1, 1, 0)).norm() < 1e-12);
  CHECK(s.history().back().tip_displacement() == 0.0);
}

TEST_CASE("integrated effector moves solve immediately and switch back exactly") {
  RigSession s(arm2());
  s.switch_to_ik();
  s.move_effector({1, 1, 0});
  REQUIRE(s.last_solve().has_value());
  CHECK(s.last_solve()->converged());
  CHECK((s.tip() - Vector3<double>(1, 1, 0)).norm() <= 1e-4);

  const auto tip = s.tip();
  s.switch_to_fk();
  CHECK(s.tip() == tip);
  CHECK(s.history().back().tip_displacement() == 0.0);
}

TEST_CASE("a goal on the current tip leaves the angles alone") {
  RigSession s(arm2());
  s.rotate_joint(0, 0.4);
  s.rotate_joint(1, -1.2);
  s.switch_to_ik();
  const auto dofs = s.dofs();
  s.move_effector(s.tip());
  CHECK(s.last_solve()->converged());
  CHECK(s.last_solve()->iterations_used <= 1);
  CHECK((s.dofs() - dofs).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("external-solver policy defers the solve to the switch back") {
  RigSession s(arm2(), std::nullopt, SyncPolicy::ExternalSolverSim);
  s.switch_to_ik();
  s.move_effector({1, 1, 0});
  CHECK(s.dofs() == DofVectord::Zero(2));
  CHECK(s.effector_goal() == Vector3<double>(1, 1, 0));
  CHECK(s.tip() == Vector3<double>(1, 1, 0));
  CHECK_FALSE(s.history().back().solve.has_value());

  s.switch_to_fk();
  const auto& e = s.history().back();
  REQUIRE(e.solve.has_value());
  REQUIRE(e.legacy_tip.has_value());
  CHECK((fk_tip(s.chain(), s.dofs()) - Vector3<double>(1, 1, 0)).norm() <= 1e-4);
  CHECK(e.tip_displacement() <= 1e-4);
  // What the old rig would have shown: the stale rest pose.
  CHECK((*e.legacy_tip - e.tip_before).norm() > 0.1);
  CHECK(s.stale_fk_dofs() == s.dofs());
}

TEST_CASE("reset keeps the mode and returns to rest") {
  RigSession s(arm2());
  s.switch_to_ik();
  s.move_effector({0.5, 1.0, 0});
  s.reset();
  CHECK(s.mode() == Mode::IK);
  CHECK(s.dofs() == DofVectord::Zero(2));
  CHECK(s.effector_goal() == Vector3<double>(2, 0, 0));
  CHECK_FALSE(s.last_solve().has_value());
}

TEST_CASE("policy changes only in FK mode; same policy is a no-op") {
  RigSession s(arm2());
  s.set_policy(SyncPolicy::ExternalSolverSim);
  CHECK(s.policy() == SyncPolicy::ExternalSolverSim);
  s.switch_to_ik();
  CHECK_NOTHROW(s.set_policy(SyncPolicy::ExternalSolverSim));
  CHECK(code_of([&] { s.set_policy(SyncPolicy::Integrated); }) == ErrorCode::WrongMode);
}

TEST_CASE("walkthrough on arm2 produces seven events with pop-free switches") {
  const auto events = run_switch_walkthrough(arm2());
  REQUIRE(events.size() == 7);
  CHECK(events[0].kind == EventKind::Reset);
  CHECK(events[1].kind == EventKind::SwitchToIK);
  CHECK(events[2].kind == EventKind::MoveEffector);
  CHECK(events[3].kind == EventKind::SwitchToFK);
  CHECK(events[4].kind == EventKind::Rotate);
  CHECK(events[5].kind == EventKind::Rotate);
  CHECK(events[6].kind == EventKind::SwitchToIK);
  for (const auto& e : events)
    if (is_switch(e.kind)) CHECK(e.tip_displacement() == 0.0);
  CHECK(events[2].solve->converged());
}

TEST_CASE("walkthrough on a five-joint chain keeps the same guarantees") {
  SeededUniform rng(55);
  const auto c = kinesnap::testing::random_chain(rng, 5, 5);
  const auto events = run_switch_walkthrough(c);
  REQUIRE(events.size() == 7);
  for (const auto& e : events)
    if (is_switch(e.kind)) CHECK(e.tip_displacement() == 0.0);
}

TEST_CASE("walkthrough with an unreachable move still completes") {
  const auto events = run_switch_walkthrough(arm2(), Vector3<double>(5, 0, 0));
  REQUIRE(events.size() == 7);
  REQUIRE(events[2].solve.has_value());
  CHECK_FALSE(events[2].solve->converged());
  for (const auto& e : events)
    if (is_switch(e.kind)) CHECK(e.tip_displacement() == 0.0);
}

TEST_CASE("fuzzed integrated sessions never pop and replay bit-for-bit") {
  SeededUniform rng(2024);
  for (int session = 0; session < 60; ++session) {
    const auto c = session % 2 ? arm2() : kinesnap::testing::random_chain(rng, 1, 6);
    RigSession s(c);
    for (int step = 0; step < 25; ++step) {
      const double roll = rng(0, 1);
      if (roll < 0.25) {
        s.toggle_ik();
      } else if (roll < 0.3) {
        s.reset();
      } else if (s.mode() == Mode::FK) {
        s.rotate_joint(static_cast<Index>(rng(0, 1) * static_cast<double>(c.dof())) % c.dof(), rng(-4, 4));
      } else {
        const double r = chain_reach(c);
        s.move_effector({rng(-r, r), rng(-r, r), rng(-r, r)});
      }
    }
    for (const auto& e : s.history())
      if (is_switch(e.kind)) CHECK(e.tip_displacement() == 0.0);

    const auto replayed = replay_history(c, s.solver_config(), s.history());
    CHECK(replayed.dofs() == s.dofs());
    CHECK(replayed.mode() == s.mode());
    CHECK(replayed.effector_goal() == s.effector_goal());
  }
}

#include "kinesnap/rig_session.hpp"

#include <string>
#include <utility>

namespace kinesnap {

RigSession::RigSession(ChainDefinitiond chain, std::optional<SolverConfigd> solver_cfg, SyncPolicy policy)
    : chain_(validate_chain(std::move(chain))),
      solver_cfg_(solver_cfg ? *solver_cfg : SolverConfigd::for_chain(chain_)),
      policy_(policy),
      dofs_(zero_pose_dofs(chain_)),
      stale_fk_dofs_(dofs_) {
  solver_cfg_.validate();
  effector_goal_ = fk_tip(chain_, dofs_);
}

Vector3<double> RigSession::tip() const {
  if (mode_ == Mode::IK && policy_ == SyncPolicy::ExternalSolverSim) return effector_goal_;
  return fk_tip(chain_, dofs_);
}

Posed RigSession::pose() const { return fk_pose(chain_, dofs_); }

void RigSession::require_mode(Mode expected, std::string_view operation) const {
  if (mode_ != expected)
    throw Error(ErrorCode::WrongMode, std::string(operation) + " requires " +
                                          std::string(to_string(expected)) + " mode");
}

void RigSession::record(RigEvent event) { history_.push_back(std::move(event)); }

void RigSession::rotate_joint(Index joint_index, double angle) {
  require_mode(Mode::FK, "rotate_joint");
  if (joint_index < 0 || joint_index >= chain_.dof())
    throw Error(ErrorCode::IndexOutOfRange, "joint index " + std::to_string(joint_index) + " out of range");
  if (!std::isfinite(angle)) throw Error(ErrorCode::NonFiniteInput, "joint angle is not finite");

  RotatePayload payload{joint_index, angle, angle, false};
  const auto& limits = chain_.joints[static_cast<std::size_t>(joint_index)].limits;
  if (limits) {
    payload.applied = limits->clamp(angle);
    payload.clamped = payload.applied != angle;
  }

  RigEvent event{EventKind::Rotate, payload, tip(), {}, std::nullopt, std::nullopt};
  dofs_[joint_index] = payload.applied;
  event.tip_after = tip();
  record(std::move(event));
}

void RigSession::move_effector(const Vector3<double>& goal, bool traced) {
  require_mode(Mode::IK, "move_effector");
  if (!goal.allFinite()) throw Error(ErrorCode::NonFiniteInput, "effector goal is not finite");

  RigEvent event{EventKind::MoveEffector, EffectorPayload{goal}, tip(), {}, std::nullopt, std::nullopt};
  effector_goal_ = goal;
  if (policy_ == SyncPolicy::Integrated) {
    auto result = traced ? solve_ik_traced(chain_, dofs_, goal, solver_cfg_)
                         : solve_ik(chain_, dofs_, goal, solver_cfg_);
    dofs_ = result.final_dofs;
    last_solve_ = result;
    event.solve = std::move(result);
  }
  event.tip_after = tip();
  record(std::move(event));
}

void RigSession::switch_to_ik() {
  require_mode(Mode::FK, "switch_to_ik");
  RigEvent event{EventKind::SwitchToIK, {}, tip(), {}, std::nullopt, std::nullopt};
  // The handle lands exactly on the current tip; the angles stay put.
  effector_goal_ = event.tip_before;
  stale_fk_dofs_ = dofs_;
  mode_ = Mode::IK;
  event.tip_after = tip();
  record(std::move(event));
}

void RigSession::switch_to_fk() {
  require_mode(Mode::IK, "switch_to_fk");
  RigEvent event{EventKind::SwitchToFK, {}, tip(), {}, std::nullopt, std::nullopt};
  if (policy_ == SyncPolicy::ExternalSolverSim) {
    // Recovery: solve from the stale channels toward the effector and bake
    // the answer, instead of snapping back to them. Unreachable goals still
    // switch; the residual stays on the event.
    event.legacy_tip = fk_tip(chain_, stale_fk_dofs_);
    auto result = solve_ik(chain_, stale_fk_dofs_, effector_goal_, solver_cfg_);
    dofs_ = result.final_dofs;
    stale_fk_dofs_ = dofs_;
    last_solve_ = result;
    event.solve = std::move(result);
  }
  mode_ = Mode::FK;
  event.tip_after = tip();
  record(std::move(event));
}

void RigSession::toggle_ik() {
  if (mode_ == Mode::FK)
    switch_to_ik();
  else
    switch_to_fk();
}

void RigSession::reset() {
  RigEvent event{EventKind::Reset, {}, tip(), {}, std::nullopt, std::nullopt};
  dofs_ = zero_pose_dofs(chain_);
  stale_fk_dofs_ = dofs_;
  effector_goal_ = fk_tip(chain_, dofs_);
  last_solve_.reset();
  event.tip_after = tip();
  record(std::move(event));
}

void RigSession::set_policy(SyncPolicy policy) {
  if (policy == policy_) return;
  require_mode(Mode::FK, "set_policy");
  policy_ = policy;
  stale_fk_dofs_ = dofs_;
}

RigSession replay_history(const ChainDefinitiond& chain, const SolverConfigd& cfg,
                          const std::vector<RigEvent>& history) {
  RigSession session(chain, cfg, SyncPolicy::Integrated);
  for (const auto& event : history) {
    switch (event.kind) {
      case EventKind::Rotate: {
        const auto& p = std::get<RotatePayload>(event.payload);
        session.rotate_joint(p.joint, p.requested);
        break;
      }
      case EventKind::MoveEffector:
        session.move_effector(std::get<EffectorPayload>(event.payload).goal);
        break;
      case EventKind::SwitchToIK: session.switch_to_ik(); break;
      case EventKind::SwitchToFK: session.switch_to_fk(); break;
      case EventKind::Reset: session.reset(); break;
    }
  }
  return session;
}

std::vector<RigEvent> run_switch_walkthrough(const ChainDefinitiond& chain,
                                             std::optional<Vector3<double>> ik_goal,
                                             std::optional<SolverConfigd> solver_cfg) {
  RigSession session(chain, solver_cfg);
  constexpr double kThirtyDegrees = 0.52359877559829887;
  const Vector3<double> goal =
      ik_goal ? *ik_goal : fk_tip(session.chain(), DofVectord(DofVectord::Constant(session.chain().dof(), kThirtyDegrees)));

  session.reset();          // A: rest pose
  session.switch_to_ik();   // B: IK on ...
  session.move_effector(goal);  // ... and pose with the effector
  session.switch_to_fk();   // C: IK off, pose kept
  const Index last = session.chain().dof() - 1;
  session.rotate_joint(0, session.dofs()[0] + degrees_to_radians(20.0));          // D
  session.rotate_joint(last, session.dofs()[last] - degrees_to_radians(30.0));    // E
  session.switch_to_ik();   // F/G: IK on again, pose kept
  return session.history();
}

}  // namespace kinesnap

#pragma once

#include <optional>
#include <string_view>
#include <variant>
#include <vector>

#include "kinesnap/chain.hpp"
#include "kinesnap/kinematics.hpp"
#include "kinesnap/solver.hpp"

namespace kinesnap {

enum class Mode { FK, IK };

/// Who owns the pose while IK is enabled.
///
/// Integrated: this engine runs the solver, so the joint angles are always
/// live and both switches are exact copies.
///
/// ExternalSolverSim: an opaque host solver drives the bound chain in IK mode
/// and the FK channels go stale. Switching back to FK runs a recovery solve
/// from the stale channels toward the effector and bakes the result.
enum class SyncPolicy { Integrated, ExternalSolverSim };

enum class EventKind { Rotate, MoveEffector, SwitchToIK, SwitchToFK, Reset };

constexpr std::string_view to_string(Mode m) noexcept { return m == Mode::FK ? "fk" : "ik"; }

constexpr std::string_view to_string(SyncPolicy p) noexcept {
  return p == SyncPolicy::Integrated ? "integrated" : "external-sim";
}

constexpr std::string_view to_string(EventKind k) noexcept {
  switch (k) {
    case EventKind::Rotate: return "rotate";
    case EventKind::MoveEffector: return "move_effector";
    case EventKind::SwitchToIK: return "switch_to_ik";
    case EventKind::SwitchToFK: return "switch_to_fk";
    case EventKind::Reset: return "reset";
  }
  return "unknown";
}

struct RotatePayload {
  Index joint = 0;
  double requested = 0.0;  ///< radians, as asked for
  double applied = 0.0;    ///< radians, after clamping to the joint limits
  bool clamped = false;
};

struct EffectorPayload {
  Vector3<double> goal = Vector3<double>::Zero();
};

using EventPayload = std::variant<std::monostate, RotatePayload, EffectorPayload>;

struct RigEvent {
  EventKind kind = EventKind::Reset;
  EventPayload payload;
  Vector3<double> tip_before = Vector3<double>::Zero();
  Vector3<double> tip_after = Vector3<double>::Zero();
  /// Solve run by this event, if any (IK moves, recovery on switch-to-FK).
  std::optional<SolveResultd> solve;
  /// ExternalSolverSim switch-to-FK only: where a three-chain rig would have
  /// snapped the tip, i.e. the stale FK channels.
  std::optional<Vector3<double>> legacy_tip;

  double tip_displacement() const { return (tip_after - tip_before).norm(); }
};

/// Single joint chain driven by FK or IK through one 'Enable IK' switch.
///
/// Operations validate before mutating, so a throwing call leaves the
/// session unchanged. Not thread-safe; one writer at a time.
class RigSession {
 public:
  explicit RigSession(ChainDefinitiond chain, std::optional<SolverConfigd> solver_cfg = std::nullopt,
                      SyncPolicy policy = SyncPolicy::Integrated);

  const ChainDefinitiond& chain() const { return chain_; }
  Mode mode() const { return mode_; }
  SyncPolicy policy() const { return policy_; }
  const SolverConfigd& solver_config() const { return solver_cfg_; }
  const DofVectord& dofs() const { return dofs_; }
  const DofVectord& stale_fk_dofs() const { return stale_fk_dofs_; }
  const Vector3<double>& effector_goal() const { return effector_goal_; }
  const std::optional<SolveResultd>& last_solve() const { return last_solve_; }
  const std::vector<RigEvent>& history() const { return history_; }

  /// Tip of the bound chain as the animator sees it. Under ExternalSolverSim
  /// in IK mode the host solver pins it to the effector goal.
  Vector3<double> tip() const;

  /// World pose of the FK channels (the live pose under Integrated).
  Posed pose() const;

  void rotate_joint(Index joint_index, double angle);
  void move_effector(const Vector3<double>& goal, bool traced = false);
  void switch_to_ik();
  void switch_to_fk();
  /// Flips the 'Enable IK' attribute.
  void toggle_ik();
  /// Back to the rest pose; the mode is kept.
  void reset();
  /// Only allowed in FK mode, where both policies agree on the pose.
  void set_policy(SyncPolicy policy);

 private:
  void require_mode(Mode expected, std::string_view operation) const;
  void record(RigEvent event);

  ChainDefinitiond chain_;
  SolverConfigd solver_cfg_;
  SyncPolicy policy_;
  Mode mode_ = Mode::FK;
  DofVectord dofs_;
  DofVectord stale_fk_dofs_;
  Vector3<double> effector_goal_ = Vector3<double>::Zero();
  std::optional<SolveResultd> last_solve_;
  std::vector<RigEvent> history_;
};

/// Re-applies `history` to a fresh Integrated session on `chain`.
RigSession replay_history(const ChainDefinitiond& chain, const SolverConfigd& cfg,
                          const std::vector<RigEvent>& history);

/// The switching walkthrough on one chain: rest pose, IK on, IK move, IK off,
/// two FK rotations, IK on again. Returns the session's event log.
///
/// `ik_goal` defaults to a reachable point (the tip with every joint at 30
/// degrees).
std::vector<RigEvent> run_switch_walkthrough(const ChainDefinitiond& chain,
                                             std::optional<Vector3<double>> ik_goal = std::nullopt,
                                             std::optional<SolverConfigd> solver_cfg = std::nullopt);

}  // namespace kinesnap

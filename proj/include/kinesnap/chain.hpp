#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "kinesnap/error.hpp"

namespace kinesnap {

using Index = Eigen::Index;

template <typename Scalar>
using Vector3 = Eigen::Matrix<Scalar, 3, 1>;

template <typename Scalar>
using Matrix3 = Eigen::Matrix<Scalar, 3, 3>;

/// One angle per joint, radians, index-aligned with ChainDefinition::joints.
template <typename Scalar>
using DofVector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
struct JointLimits {
  Scalar min_angle;
  Scalar max_angle;

  Scalar clamp(Scalar angle) const {
    return angle < min_angle ? min_angle : (angle > max_angle ? max_angle : angle);
  }

  bool operator==(const JointLimits&) const = default;
};

/// A 1-DOF revolute joint. `offset` is the translation from the parent joint,
/// expressed in the parent's rotated frame; for the root it is measured from
/// the world origin. `axis` is fixed in the joint's local frame.
template <typename Scalar>
struct JointSpec {
  std::string name;
  Vector3<Scalar> offset = Vector3<Scalar>::Zero();
  Vector3<Scalar> axis = Vector3<Scalar>::UnitZ();
  std::optional<JointLimits<Scalar>> limits;

  bool operator==(const JointSpec& other) const {
    return name == other.name && offset == other.offset && axis == other.axis &&
           limits == other.limits;
  }
};

/// Serial chain, root first. The end-effector sits at `tip_offset` in the
/// last joint's rotated frame.
template <typename Scalar>
struct ChainDefinition {
  std::string name;
  std::vector<JointSpec<Scalar>> joints;
  Vector3<Scalar> tip_offset = Vector3<Scalar>::Zero();

  Index dof() const { return static_cast<Index>(joints.size()); }

  /// Index of the joint called `joint_name`, or nullopt.
  std::optional<Index> find_joint(const std::string& joint_name) const {
    for (std::size_t i = 0; i < joints.size(); ++i)
      if (joints[i].name == joint_name) return static_cast<Index>(i);
    return std::nullopt;
  }

  bool operator==(const ChainDefinition& other) const {
    return name == other.name && joints == other.joints && tip_offset == other.tip_offset;
  }
};

/// World-space snapshot of a posed chain. `tip` is the end-effector e.
template <typename Scalar>
struct Pose {
  std::vector<Vector3<Scalar>> joint_positions;
  std::vector<Matrix3<Scalar>> joint_frames;
  Vector3<Scalar> tip = Vector3<Scalar>::Zero();
};

namespace detail {

template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& m) {
  return m.allFinite();
}

template <typename Scalar>
bool is_finite(Scalar value) {
  return std::isfinite(value);
}

}  // namespace detail

/// Returns the canonical form of `def`: every axis scaled to unit length.
/// Already-unit axes are left bit-for-bit untouched, which makes the
/// operation idempotent.
template <typename Scalar>
ChainDefinition<Scalar> validate_chain(ChainDefinition<Scalar> def) {
  if (def.joints.empty()) throw Error(ErrorCode::EmptyChain, "chain '" + def.name + "' has no joints");
  if (!detail::all_finite(def.tip_offset))
    throw Error(ErrorCode::NonFinite, "chain '" + def.name + "': tip_offset is not finite");

  constexpr Scalar kZeroAxis = Scalar(1e-9);
  const Scalar unit_slack = Scalar(64) * std::numeric_limits<Scalar>::epsilon();

  for (auto& joint : def.joints) {
    if (!detail::all_finite(joint.offset) || !detail::all_finite(joint.axis))
      throw Error(ErrorCode::NonFinite, "joint '" + joint.name + "': offset or axis is not finite");
    if (joint.limits) {
      const auto& lim = *joint.limits;
      if (!detail::is_finite(lim.min_angle) || !detail::is_finite(lim.max_angle))
        throw Error(ErrorCode::NonFinite, "joint '" + joint.name + "': limits are not finite");
      if (lim.min_angle > lim.max_angle)
        throw Error(ErrorCode::BadBounds, "joint '" + joint.name + "': min_angle > max_angle");
    }
    const Scalar norm = joint.axis.norm();
    if (norm < kZeroAxis) throw Error(ErrorCode::ZeroAxis, "joint '" + joint.name + "': zero-length axis");
    if (std::abs(norm - Scalar(1)) > unit_slack) joint.axis /= norm;
  }
  return def;
}

/// Maximum root-to-tip distance swept by the links: sum of every non-root
/// offset length plus the tip offset length.
template <typename Scalar>
Scalar chain_reach(const ChainDefinition<Scalar>& def) {
  Scalar reach = def.tip_offset.norm();
  for (std::size_t i = 1; i < def.joints.size(); ++i) reach += def.joints[i].offset.norm();
  return reach;
}

/// Rest pose: every joint at zero.
template <typename Scalar>
DofVector<Scalar> zero_pose_dofs(const ChainDefinition<Scalar>& def) {
  return DofVector<Scalar>::Zero(def.dof());
}

template <typename Scalar>
void check_dofs(const ChainDefinition<Scalar>& def, const DofVector<Scalar>& dofs) {
  if (dofs.size() != def.dof())
    throw Error(ErrorCode::DofLengthMismatch, "expected " + std::to_string(def.dof()) +
                                                  " joint angles, got " + std::to_string(dofs.size()));
}

/// Maps an angle onto (-pi, pi].
template <typename Scalar>
Scalar wrap_angle(Scalar angle) {
  constexpr Scalar kPi = Scalar(3.14159265358979323846264338327950288);
  Scalar wrapped = std::remainder(angle, Scalar(2) * kPi);
  if (wrapped <= -kPi) wrapped += Scalar(2) * kPi;
  return wrapped;
}

template <typename Scalar>
constexpr Scalar degrees_to_radians(Scalar degrees) {
  return degrees * Scalar(3.14159265358979323846264338327950288) / Scalar(180);
}

template <typename Scalar>
constexpr Scalar radians_to_degrees(Scalar radians) {
  return radians * Scalar(180) / Scalar(3.14159265358979323846264338327950288);
}

using ChainDefinitiond = ChainDefinition<double>;
using JointSpecd = JointSpec<double>;
using DofVectord = DofVector<double>;
using Posed = Pose<double>;

}  // namespace kinesnap

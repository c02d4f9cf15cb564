#pragma once

#include <cmath>
#include <numbers>
#include <optional>
#include <vector>

#include "kinesnap/bench.hpp"
#include "kinesnap/chain.hpp"

namespace kinesnap::testing {

inline ChainDefinitiond arm2() {
  ChainDefinitiond c;
  c.name = "arm2";
  c.joints = {{"j1", {0, 0, 0}, {0, 0, 1}, std::nullopt}, {"j2", {1, 0, 0}, {0, 0, 1}, std::nullopt}};
  c.tip_offset = {1, 0, 0};
  return c;
}

/// M uniform in [min_dof, max_dof]; root at the origin, other offsets, tip
/// offset and axes uniform in the unit cube (axes normalized).
inline ChainDefinitiond random_chain(SeededUniform& rng, int min_dof = 1, int max_dof = 7) {
  const int dof = min_dof + static_cast<int>(rng(0.0, 1.0) * (max_dof - min_dof + 1));
  ChainDefinitiond c;
  c.name = "random";
  for (int i = 0; i < std::min(dof, max_dof); ++i) {
    JointSpecd j;
    j.name = "q" + std::to_string(i);
    if (i > 0) j.offset = {rng(-1, 1), rng(-1, 1), rng(-1, 1)};
    Vector3<double> axis;
    do axis = {rng(-1, 1), rng(-1, 1), rng(-1, 1)};
    while (axis.norm() < 0.1);
    j.axis = axis.normalized();
    c.joints.push_back(j);
  }
  c.tip_offset = {rng(-1, 1), rng(-1, 1), rng(-1, 1)};
  return validate_chain(c);
}

inline DofVectord random_angles(SeededUniform& rng, Index dof, double lo = -std::numbers::pi,
                                double hi = std::numbers::pi) {
  DofVectord q(dof);
  for (Index i = 0; i < dof; ++i) q[i] = rng(lo, hi);
  return q;
}

/// Closed-form planar two-link IK (links along x, axes along z):
/// cos t2 = (d^2 - l1^2 - l2^2) / (2 l1 l2). Empty when out of reach.
inline std::vector<DofVectord> two_link_solutions(double l1, double l2, const Vector3<double>& goal) {
  const double d2 = goal.x() * goal.x() + goal.y() * goal.y();
  const double c2 = (d2 - l1 * l1 - l2 * l2) / (2 * l1 * l2);
  if (std::abs(goal.z()) > 1e-12 || c2 < -1 - 1e-12 || c2 > 1 + 1e-12) return {};
  std::vector<DofVectord> out;
  const double t2 = std::acos(std::clamp(c2, -1.0, 1.0));
  for (double sign : {1.0, -1.0}) {
    const double q2 = sign * t2;
    const double q1 = std::atan2(goal.y(), goal.x()) - std::atan2(l2 * std::sin(q2), l1 + l2 * std::cos(q2));
    DofVectord q(2);
    q << q1, q2;
    out.push_back(q);
  }
  return out;
}

/// Planar two-link tip from the same closed form, independent of fk_tip.
inline Vector3<double> two_link_tip(double l1, double l2, const DofVectord& q) {
  return {l1 * std::cos(q[0]) + l2 * std::cos(q[0] + q[1]), l1 * std::sin(q[0]) + l2 * std::sin(q[0] + q[1]), 0.0};
}

}  // namespace kinesnap::testing

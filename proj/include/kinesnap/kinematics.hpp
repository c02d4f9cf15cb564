#pragma once

#include <algorithm>
#include <string>
#include <utility>

#include <Eigen/Core>
#include <Eigen/Eigenvalues>
#include <Eigen/Geometry>
#include <Eigen/LU>

#include "kinesnap/chain.hpp"
#include "kinesnap/error.hpp"

namespace kinesnap {

enum class JacobianMethod { NumericForward, NumericCentral, Analytic };
enum class DifferenceScheme { Forward, Central };
enum class InversionStrategy { PseudoInverse, DampedLeastSquares, Transpose };

constexpr std::string_view to_string(InversionStrategy s) noexcept {
  switch (s) {
    case InversionStrategy::PseudoInverse: return "pseudoinverse";
    case InversionStrategy::DampedLeastSquares: return "damped";
    case InversionStrategy::Transpose: return "transpose";
  }
  return "unknown";
}

template <typename Scalar>
using JacobianEntries = Eigen::Matrix<Scalar, 3, Eigen::Dynamic>;

template <typename Scalar>
using InverseJacobian = Eigen::Matrix<Scalar, Eigen::Dynamic, 3>;

/// Joint-angle update produced by one inversion step, radians.
template <typename Scalar>
using DeltaTheta = DofVector<Scalar>;

/// d(tip)/d(theta): rows are x, y, z; one column per joint.
template <typename Scalar>
struct JacobianMatrix {
  JacobianEntries<Scalar> entries;
  JacobianMethod method = JacobianMethod::Analytic;
  DofVector<Scalar> at_dofs;

  Index cols() const { return entries.cols(); }
};

template <typename Scalar>
struct InversionReport {
  InversionStrategy strategy_used = InversionStrategy::PseudoInverse;
  Scalar gram_determinant = Scalar(0);
  Scalar damping_lambda = Scalar(0);
};

template <typename Scalar>
struct InversionResult {
  InverseJacobian<Scalar> inverse;
  InversionReport<Scalar> report;
};

/// Accumulates transforms root to tip. Joint i's world frame is its parent's
/// frame, translated by offset_i, then rotated by theta_i about axis_i.
template <typename Scalar>
Pose<Scalar> fk_pose(const ChainDefinition<Scalar>& def, const DofVector<Scalar>& dofs) {
  check_dofs(def, dofs);
  const auto count = def.joints.size();

  Pose<Scalar> pose;
  pose.joint_positions.reserve(count);
  pose.joint_frames.reserve(count);

  Vector3<Scalar> position = def.joints.front().offset;
  Matrix3<Scalar> frame = Matrix3<Scalar>::Identity();
  for (std::size_t i = 0; i < count; ++i) {
    const auto& joint = def.joints[i];
    if (i > 0) position += frame * joint.offset;
    frame = frame * Eigen::AngleAxis<Scalar>(dofs[static_cast<Index>(i)], joint.axis).toRotationMatrix();
    pose.joint_positions.push_back(position);
    pose.joint_frames.push_back(frame);
  }
  pose.tip = position + frame * def.tip_offset;
  return pose;
}

/// End-effector position e = f(theta).
template <typename Scalar>
Vector3<Scalar> fk_tip(const ChainDefinition<Scalar>& def, const DofVector<Scalar>& dofs) {
  check_dofs(def, dofs);
  Vector3<Scalar> position = def.joints.front().offset;
  Matrix3<Scalar> frame = Matrix3<Scalar>::Identity();
  for (std::size_t i = 0; i < def.joints.size(); ++i) {
    const auto& joint = def.joints[i];
    if (i > 0) position += frame * joint.offset;
    frame = frame * Eigen::AngleAxis<Scalar>(dofs[static_cast<Index>(i)], joint.axis).toRotationMatrix();
  }
  return position + frame * def.tip_offset;
}

/// Finite-difference Jacobian: perturb one angle at a time by `delta` and
/// watch the tip move.
template <typename Scalar>
JacobianMatrix<Scalar> jacobian_numeric(const ChainDefinition<Scalar>& def, const DofVector<Scalar>& dofs,
                                        Scalar delta = Scalar(1e-5),
                                        DifferenceScheme scheme = DifferenceScheme::Forward) {
  check_dofs(def, dofs);
  if (!(delta > Scalar(0)))
    throw Error(ErrorCode::NonPositiveDelta, "finite-difference delta must be positive");

  const Index m = def.dof();
  JacobianMatrix<Scalar> jac;
  jac.entries.resize(3, m);
  jac.at_dofs = dofs;

  DofVector<Scalar> probe = dofs;
  if (scheme == DifferenceScheme::Forward) {
    jac.method = JacobianMethod::NumericForward;
    const Vector3<Scalar> base = fk_tip(def, dofs);
    for (Index i = 0; i < m; ++i) {
      probe[i] = dofs[i] + delta;
      jac.entries.col(i) = (fk_tip(def, probe) - base) / delta;
      probe[i] = dofs[i];
    }
  } else {
    jac.method = JacobianMethod::NumericCentral;
    for (Index i = 0; i < m; ++i) {
      probe[i] = dofs[i] + delta;
      const Vector3<Scalar> ahead = fk_tip(def, probe);
      probe[i] = dofs[i] - delta;
      const Vector3<Scalar> behind = fk_tip(def, probe);
      probe[i] = dofs[i];
      jac.entries.col(i) = (ahead - behind) / (Scalar(2) * delta);
    }
  }
  return jac;
}

/// Closed form for revolute joints: column i = w_i x (e - p_i), with w_i the
/// joint axis in world space and p_i the joint position.
template <typename Scalar>
JacobianMatrix<Scalar> jacobian_analytic(const ChainDefinition<Scalar>& def, const DofVector<Scalar>& dofs) {
  const Pose<Scalar> pose = fk_pose(def, dofs);
  const Index m = def.dof();

  JacobianMatrix<Scalar> jac;
  jac.method = JacobianMethod::Analytic;
  jac.at_dofs = dofs;
  jac.entries.resize(3, m);
  for (Index i = 0; i < m; ++i) {
    const auto k = static_cast<std::size_t>(i);
    const Vector3<Scalar> world_axis = pose.joint_frames[k] * def.joints[k].axis;
    jac.entries.col(i) = world_axis.cross(pose.tip - pose.joint_positions[k]);
  }
  return jac;
}

/// Singularity test for the Gram matrix J^T J: determinant below
/// 1e-10 * max(max diagonal, 1) counts as singular.
template <typename Scalar>
Scalar gram_singularity_threshold(const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& gram) {
  const Scalar max_diag = gram.size() == 0 ? Scalar(0) : gram.diagonal().maxCoeff();
  return Scalar(1e-10) * std::max(max_diag, Scalar(1));
}

/// Left pseudoinverse (J^T J)^-1 J^T when J^T J is invertible, otherwise the
/// damped least-squares inverse J^T (J J^T + lambda^2 I)^-1.
///
/// J^T J counts as singular when its determinant is below
/// gram_singularity_threshold(). With more than three joints it has rank at
/// most 3 and is always singular, so such chains go straight to the damped
/// form; the determinant is still reported.
///
/// `min_gram_rcond` optionally widens the fallback to ill-conditioned Gram
/// matrices (smallest over largest eigenvalue below the floor). Zero keeps
/// the plain determinant rule.
template <typename Scalar, typename Derived>
InversionResult<Scalar> pseudoinverse(const Eigen::MatrixBase<Derived>& jacobian, Scalar lambda_fallback,
                                      Scalar min_gram_rcond = Scalar(0)) {
  if (!jacobian.allFinite()) throw Error(ErrorCode::NonFiniteInput, "jacobian has non-finite entries");
  if (!std::isfinite(lambda_fallback) || !std::isfinite(min_gram_rcond))
    throw Error(ErrorCode::NonFiniteInput, "inversion parameters are not finite");
  if (!(lambda_fallback > Scalar(0))) throw Error(ErrorCode::InvalidConfig, "damping lambda must be positive");

  using Dense = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  const JacobianEntries<Scalar> J = jacobian;
  const Dense gram = J.transpose() * J;

  InversionResult<Scalar> result;
  if (gram.rows() == 0) {
    result.inverse.resize(0, 3);
    result.report.gram_determinant = Scalar(1);
    return result;
  }

  const Eigen::PartialPivLU<Dense> lu(gram);
  result.report.gram_determinant = lu.determinant();

  bool invertible = gram.rows() <= 3 && result.report.gram_determinant >= gram_singularity_threshold(gram);
  if (invertible && min_gram_rcond > Scalar(0)) {
    const Eigen::SelfAdjointEigenSolver<Dense> eig(gram, Eigen::EigenvaluesOnly);
    const auto& ev = eig.eigenvalues();  // ascending
    invertible = ev(0) >= min_gram_rcond * ev(ev.size() - 1);
  }

  if (invertible) {
    result.report.strategy_used = InversionStrategy::PseudoInverse;
    result.inverse = lu.solve(Dense(J.transpose()));
    return result;
  }

  const Matrix3<Scalar> damped =
      J * J.transpose() + (lambda_fallback * lambda_fallback) * Matrix3<Scalar>::Identity();
  // damped is symmetric, so J^T damped^-1 == (damped^-1 J)^T.
  result.inverse = Eigen::PartialPivLU<Matrix3<Scalar>>(damped).solve(J).transpose();
  result.report.strategy_used = InversionStrategy::DampedLeastSquares;
  result.report.damping_lambda = lambda_fallback;
  return result;
}

template <typename Scalar>
InversionResult<Scalar> pseudoinverse(const JacobianMatrix<Scalar>& jacobian, Scalar lambda_fallback,
                                      Scalar min_gram_rcond = Scalar(0)) {
  return pseudoinverse(jacobian.entries, lambda_fallback, min_gram_rcond);
}

/// Jacobian-transpose step J^T de. Unscaled; the caller applies the step size.
template <typename Scalar, typename Derived>
DeltaTheta<Scalar> transpose_step(const Eigen::MatrixBase<Derived>& jacobian, const Vector3<Scalar>& de) {
  if (!jacobian.allFinite() || !de.allFinite())
    throw Error(ErrorCode::NonFiniteInput, "transpose step given non-finite input");
  return jacobian.transpose() * de;
}

template <typename Scalar>
DeltaTheta<Scalar> transpose_step(const JacobianMatrix<Scalar>& jacobian, const Vector3<Scalar>& de) {
  return transpose_step(jacobian.entries, de);
}

}  // namespace kinesnap

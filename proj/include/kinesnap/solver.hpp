#pragma once

#include <optional>
#include <string>
#include <vector>

#include "kinesnap/chain.hpp"
#include "kinesnap/kinematics.hpp"

namespace kinesnap {

enum class SolveMethod { PseudoInverse, Transpose };
enum class SolveStatus { Converged, MaxIterations, Stalled };

constexpr std::string_view to_string(SolveStatus s) noexcept {
  switch (s) {
    case SolveStatus::Converged: return "converged";
    case SolveStatus::MaxIterations: return "max_iterations";
    case SolveStatus::Stalled: return "stalled";
  }
  return "unknown";
}

constexpr std::string_view to_string(SolveMethod m) noexcept {
  return m == SolveMethod::PseudoInverse ? "pseudoinverse" : "transpose";
}

template <typename Scalar>
struct SolverConfig {
  Scalar tolerance = Scalar(1e-4);
  int max_iterations = 200;
  Scalar alpha = Scalar(0.5);
  Scalar step_cap = Scalar(0.1);
  SolveMethod method = SolveMethod::PseudoInverse;
  JacobianMethod jacobian = JacobianMethod::NumericForward;
  Scalar damping_lambda = Scalar(0.1);
  Scalar fd_delta = Scalar(1e-5);
  int stall_window = 10;
  Scalar stall_epsilon = Scalar(1e-7);
  /// Pseudoinverse steps fall back to damping when J^T J's eigenvalue ratio
  /// drops below this (J condition number above 100).
  Scalar min_gram_rcond = Scalar(1e-4);

  /// Defaults scaled to `def`: the per-iteration tip displacement is capped at
  /// 5% of the chain's reach, and the transpose method gets a larger budget.
  static SolverConfig for_chain(const ChainDefinition<Scalar>& def,
                                SolveMethod method = SolveMethod::PseudoInverse) {
    SolverConfig cfg;
    cfg.method = method;
    cfg.max_iterations = method == SolveMethod::PseudoInverse ? 200 : 5000;
    const Scalar reach = chain_reach(def);
    cfg.step_cap = Scalar(0.05) * (reach > Scalar(0) ? reach : Scalar(1));
    return cfg;
  }

  void validate() const {
    auto fail = [](const std::string& what) { throw Error(ErrorCode::InvalidConfig, what); };
    if (!(tolerance > Scalar(0)) || !std::isfinite(tolerance)) fail("tolerance must be positive");
    if (max_iterations < 1) fail("max_iterations must be at least 1");
    if (!(alpha > Scalar(0) && alpha <= Scalar(1))) fail("alpha must lie in (0, 1]");
    if (!(step_cap > Scalar(0)) || !std::isfinite(step_cap)) fail("step_cap must be positive");
    if (!(damping_lambda > Scalar(0)) || !std::isfinite(damping_lambda)) fail("damping_lambda must be positive");
    if (!(fd_delta > Scalar(0)) || !std::isfinite(fd_delta)) fail("fd_delta must be positive");
    if (stall_window < 1) fail("stall_window must be at least 1");
    if (!(min_gram_rcond >= Scalar(0) && min_gram_rcond < Scalar(1))) fail("min_gram_rcond must lie in [0, 1)");
    if (!(stall_epsilon >= Scalar(0)) || !std::isfinite(stall_epsilon)) fail("stall_epsilon must be non-negative");
  }
};

template <typename Scalar>
struct TraceEntry {
  Scalar residual;
  /// Inversion used for the step taken after this check; empty on the exit check.
  std::optional<InversionStrategy> strategy;

  bool operator==(const TraceEntry&) const = default;
};

template <typename Scalar>
struct SolveResult {
  DofVector<Scalar> final_dofs;
  SolveStatus status = SolveStatus::MaxIterations;
  int iterations_used = 0;
  Scalar residual = Scalar(0);
  std::optional<std::vector<TraceEntry<Scalar>>> trace;

  bool converged() const { return status == SolveStatus::Converged; }
};

namespace detail {

template <typename Scalar>
JacobianMatrix<Scalar> solver_jacobian(const ChainDefinition<Scalar>& def, const DofVector<Scalar>& dofs,
                                       const SolverConfig<Scalar>& cfg) {
  switch (cfg.jacobian) {
    case JacobianMethod::Analytic: return jacobian_analytic(def, dofs);
    case JacobianMethod::NumericCentral:
      return jacobian_numeric(def, dofs, cfg.fd_delta, DifferenceScheme::Central);
    case JacobianMethod::NumericForward: break;
  }
  return jacobian_numeric(def, dofs, cfg.fd_delta, DifferenceScheme::Forward);
}

template <typename Scalar>
bool stalled(const std::vector<Scalar>& residuals, int window, Scalar epsilon) {
  const auto n = residuals.size();
  const auto w = static_cast<std::size_t>(window);
  if (n <= w) return false;
  for (std::size_t k = n - w; k < n; ++k)
    if (residuals[k - 1] - residuals[k] >= epsilon) return false;
  return true;
}

template <typename Scalar>
SolveResult<Scalar> solve_ik_impl(const ChainDefinition<Scalar>& def, const DofVector<Scalar>& start,
                                  const Vector3<Scalar>& goal, const SolverConfig<Scalar>& cfg, bool traced) {
  check_dofs(def, start);
  cfg.validate();
  if (!start.allFinite()) throw Error(ErrorCode::NonFiniteInput, "start angles are not finite");
  if (!goal.allFinite()) throw Error(ErrorCode::NonFiniteInput, "goal is not finite");

  SolveResult<Scalar> result;
  if (traced) result.trace.emplace();

  DofVector<Scalar> theta = start;
  std::vector<Scalar> residuals;
  for (int iteration = 0;; ++iteration) {
    const Vector3<Scalar> error = goal - fk_tip(def, theta);
    const Scalar residual = error.norm();
    residuals.push_back(residual);

    std::optional<SolveStatus> exit;
    if (residual <= cfg.tolerance)
      exit = SolveStatus::Converged;
    else if (stalled(residuals, cfg.stall_window, cfg.stall_epsilon))
      exit = SolveStatus::Stalled;
    else if (iteration == cfg.max_iterations)
      exit = SolveStatus::MaxIterations;

    if (exit) {
      if (traced) result.trace->push_back({residual, std::nullopt});
      result.final_dofs = std::move(theta);
      result.status = *exit;
      result.iterations_used = iteration;
      result.residual = residual;
      return result;
    }

    Vector3<Scalar> de = error;
    if (residual > cfg.step_cap) de *= cfg.step_cap / residual;

    const JacobianMatrix<Scalar> jac = solver_jacobian(def, theta, cfg);
    DeltaTheta<Scalar> dtheta;
    InversionStrategy strategy = InversionStrategy::Transpose;
    if (cfg.method == SolveMethod::PseudoInverse) {
      const auto inv = pseudoinverse(jac, cfg.damping_lambda, cfg.min_gram_rcond);
      dtheta = inv.inverse * de;
      strategy = inv.report.strategy_used;
    } else {
      dtheta = transpose_step(jac, de);
    }
    if (traced) result.trace->push_back({residual, strategy});

    theta += cfg.alpha * dtheta;
    for (Index i = 0; i < theta.size(); ++i) theta[i] = wrap_angle(theta[i]);
  }
}

}  // namespace detail

/// Incremental Jacobian solve: repeatedly linearize at the current angles,
/// step a fraction alpha toward the goal, stop when the tip is within
/// tolerance, progress stalls, or the iteration budget runs out.
///
/// Each update wraps angles to (-pi, pi]. A start that already satisfies the
/// tolerance is returned untouched.
template <typename Scalar>
SolveResult<Scalar> solve_ik(const ChainDefinition<Scalar>& def, const DofVector<Scalar>& start,
                             const Vector3<Scalar>& goal, const SolverConfig<Scalar>& cfg) {
  return detail::solve_ik_impl(def, start, goal, cfg, false);
}

/// solve_ik with the per-iteration residual and inversion strategy recorded.
template <typename Scalar>
SolveResult<Scalar> solve_ik_traced(const ChainDefinition<Scalar>& def, const DofVector<Scalar>& start,
                                    const Vector3<Scalar>& goal, const SolverConfig<Scalar>& cfg) {
  return detail::solve_ik_impl(def, start, goal, cfg, true);
}

using SolverConfigd = SolverConfig<double>;
using SolveResultd = SolveResult<double>;

}  // namespace kinesnap

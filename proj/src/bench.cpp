#include "kinesnap/bench.hpp"

#include <cstdio>
#include <numbers>

namespace kinesnap {

namespace {

DofVectord random_angles(const ChainDefinitiond& chain, SeededUniform& rng) {
  DofVectord angles(chain.dof());
  for (Index i = 0; i < chain.dof(); ++i) {
    const auto& limits = chain.joints[static_cast<std::size_t>(i)].limits;
    angles[i] = limits ? rng(limits->min_angle, limits->max_angle) : rng(-std::numbers::pi, std::numbers::pi);
  }
  return angles;
}

}  // namespace

BenchTable run_bench(const ChainDefinitiond& chain, int trials, std::uint64_t seed) {
  if (trials < 0) throw Error(ErrorCode::InvalidConfig, "trials must be non-negative");
  const ChainDefinitiond def = validate_chain(chain);
  BenchTable table{def.name, trials, seed, {}};
  if (trials == 0) return table;

  struct Case {
    DofVectord start;
    Vector3<double> goal;
  };
  std::vector<Case> cases;
  SeededUniform rng(seed);
  for (int t = 0; t < trials; ++t) {
    const Vector3<double> goal = fk_tip(def, random_angles(def, rng));
    cases.push_back({random_angles(def, rng), goal});
  }

  for (const SolveMethod method : {SolveMethod::PseudoInverse, SolveMethod::Transpose}) {
    const auto cfg = SolverConfigd::for_chain(def, method);
    BenchRow row{method, trials, 0, 0.0, 0.0};
    for (const auto& c : cases) {
      const auto result = solve_ik(def, c.start, c.goal, cfg);
      row.converged += result.converged() ? 1 : 0;
      row.mean_iterations += result.iterations_used;
      row.mean_residual += result.residual;
    }
    row.mean_iterations /= trials;
    row.mean_residual /= trials;
    table.rows.push_back(row);
  }
  return table;
}

std::string format_bench_table(const BenchTable& table) {
  char line[160];
  std::string out;
  std::snprintf(line, sizeof line, "chain %s  trials %d  seed %llu\n", table.chain.c_str(), table.trials,
                static_cast<unsigned long long>(table.seed));
  out += line;
  std::snprintf(line, sizeof line, "%-14s %9s %9s %10s %16s %14s\n", "method", "trials", "converged", "rate",
                "mean_iterations", "mean_residual");
  out += line;
  for (const auto& row : table.rows) {
    std::snprintf(line, sizeof line, "%-14s %9d %9d %10.4f %16.3f %14.6e\n", std::string(to_string(row.method)).c_str(),
                  row.trials, row.converged, row.convergence_rate(), row.mean_iterations, row.mean_residual);
    out += line;
  }
  return out;
}

}  // namespace kinesnap

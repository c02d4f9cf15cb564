#pragma once

#include <cstdint>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

#include "kinesnap/solver.hpp"

namespace kinesnap {

/// Uniform doubles from mt19937_64 using the top 53 bits, so a seed gives the
/// same stream on every platform (std::uniform_real_distribution does not).
class SeededUniform {
 public:
  explicit SeededUniform(std::uint64_t seed) : engine_(seed) {}

  double operator()(double lo, double hi) {
    return lo + (hi - lo) * static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

struct BenchRow {
  SolveMethod method = SolveMethod::PseudoInverse;
  int trials = 0;
  int converged = 0;
  double mean_iterations = 0.0;
  double mean_residual = 0.0;

  double convergence_rate() const { return trials > 0 ? static_cast<double>(converged) / trials : 0.0; }
};

struct BenchTable {
  std::string chain;
  int trials = 0;
  std::uint64_t seed = 0;
  std::vector<BenchRow> rows;  ///< empty when trials == 0
};

/// Solves the same seeded goal set with each method using the per-chain
/// defaults. Goals are fk_tip of random angles (reachable by construction),
/// starts are random angles; both drawn within joint limits where present.
BenchTable run_bench(const ChainDefinitiond& chain, int trials, std::uint64_t seed);

/// Fixed-width text table. Identical inputs give identical bytes.
std::string format_bench_table(const BenchTable& table);

}  // namespace kinesnap

// kinesnap command line: solve, run, serve, bench.

#include <pthread.h>

#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <thread>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "kinesnap/bench.hpp"
#include "kinesnap/scene_io.hpp"
#include "kinesnap/server.hpp"

using namespace kinesnap;

namespace {

constexpr int kOk = 0;
constexpr int kInputError = 1;
constexpr int kNotConverged = 2;
constexpr int kAssertionFailed = 3;

void configure_logging() {
  auto logger = spdlog::stderr_color_mt("kinesnap");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::warn);
  if (const char* env = std::getenv("KINESNAP_LOG")) {
    const auto level = spdlog::level::from_str(env);
    // from_str maps anything unrecognised to "off"; only honour that when asked.
    if (level == spdlog::level::off && std::string_view(env) != "off")
      spdlog::warn("KINESNAP_LOG='{}' is not a level, keeping 'warn'", env);
    else
      spdlog::set_level(level);
  }
}

std::string join(const DofVectord& values, bool degrees) {
  std::string out;
  for (Index i = 0; i < values.size(); ++i) {
    if (i) out += ' ';
    out += format_number(degrees ? radians_to_degrees(values[i]) : values[i]);
  }
  return out;
}

std::string join(const Vector3<double>& v) {
  return format_number(v.x()) + " " + format_number(v.y()) + " " + format_number(v.z());
}

std::optional<SyncPolicy> parse_policy(const std::string& text) {
  if (text == "integrated") return SyncPolicy::Integrated;
  if (text == "external-sim") return SyncPolicy::ExternalSolverSim;
  return std::nullopt;
}

struct SolveOptions {
  std::string chain;
  std::vector<double> target;
  std::string method = "pseudoinverse";
  std::optional<double> tol;
  std::optional<int> max_iter;
  std::optional<double> alpha;
  std::vector<double> start_deg;
};

int cmd_solve(const SolveOptions& o) {
  const auto chain = load_chain_file(o.chain);
  const auto method = o.method == "transpose" ? SolveMethod::Transpose : SolveMethod::PseudoInverse;
  auto cfg = SolverConfigd::for_chain(chain, method);
  if (o.tol) cfg.tolerance = *o.tol;
  if (o.max_iter) cfg.max_iterations = *o.max_iter;
  if (o.alpha) cfg.alpha = *o.alpha;

  DofVectord start = zero_pose_dofs(chain);
  if (!o.start_deg.empty()) {
    if (static_cast<Index>(o.start_deg.size()) != chain.dof())
      throw Error(ErrorCode::DofLengthMismatch, "--start needs " + std::to_string(chain.dof()) + " angles");
    for (Index i = 0; i < chain.dof(); ++i) start[i] = degrees_to_radians(o.start_deg[static_cast<std::size_t>(i)]);
  }
  const Vector3<double> goal(o.target[0], o.target[1], o.target[2]);
  spdlog::debug("solving {} toward ({}) with {}", chain.name, join(goal), o.method);

  const auto result = solve_ik(chain, start, goal, cfg);
  std::cout << "status " << to_string(result.status) << '\n'
            << "iterations " << result.iterations_used << '\n'
            << "residual " << format_number(result.residual) << '\n'
            << "angles_deg " << join(result.final_dofs, true) << '\n'
            << "tip " << join(fk_tip(chain, result.final_dofs)) << '\n';
  return result.converged() ? kOk : kNotConverged;
}

int cmd_run(const std::string& chain_path, const std::string& script_path, const std::string& out_path,
            SyncPolicy policy) {
  const auto chain = load_chain_file(chain_path);
  const auto script = load_script_file(script_path);
  const auto outcome = run_script(chain, script, SolverConfigd::for_chain(chain), policy);

  for (const auto& row : outcome.rows) {
    if (row.event != "dump") continue;
    std::cout << "step " << row.step << ": mode " << to_string(row.mode) << "  tip " << join(row.tip)
              << "  angles_deg";
    for (double a : row.angles_deg) std::cout << ' ' << format_number(a);
    std::cout << '\n';
  }

  if (out_path.empty() || out_path == "-") {
    write_trajectory_csv(std::cout, chain, outcome.rows);
  } else {
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw Error(ErrorCode::SyntaxError, "cannot write '" + out_path + "'");
    write_trajectory_csv(out, chain, outcome.rows);
  }

  if (outcome.abort) {
    const auto& a = *outcome.abort;
    std::cerr << script_path << ":" << a.line << ": step " << a.step << " aborted: " << to_string(a.code) << ": "
              << a.message << '\n';
    return kInputError;
  }
  for (const auto& f : outcome.failures)
    std::cerr << script_path << ":" << f.line << ": step " << f.step << " assert_tip failed: expected ("
              << join(f.expected) << "), tip (" << join(f.actual) << "), distance " << format_number(f.distance)
              << " > " << format_number(f.tolerance) << '\n';
  return outcome.failures.empty() ? kOk : kAssertionFailed;
}

int cmd_serve(const std::string& chain_path, const std::string& host, int port, SyncPolicy policy) {
  auto chain = load_chain_file(chain_path);
  // SIGINT/SIGTERM are taken synchronously by a watcher thread so stop()
  // never runs inside a signal handler. Blocked before any thread starts.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  Server server(std::move(chain), host, static_cast<unsigned short>(port), policy);
  std::cout << "listening on ws://" << host << ":" << server.port() << std::endl;
  std::thread([&server, signals] {
    int received = 0;
    sigwait(&signals, &received);
    spdlog::info("signal {}, shutting down", received);
    server.stop();
  }).detach();
  server.run();
  return kOk;
}

int cmd_bench(const std::string& chain_path, int trials, std::uint64_t seed) {
  const auto chain = load_chain_file(chain_path);
  std::cout << format_bench_table(run_bench(chain, trials, seed));
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  configure_logging();

  CLI::App app{"Kinematics engine for serial revolute chains"};
  app.require_subcommand(1);

  SolveOptions solve;
  auto* solve_cmd = app.add_subcommand("solve", "Solve IK for one target and print the result");
  solve_cmd->add_option("--chain", solve.chain, "Chain file (JSON)")->required();
  solve_cmd->add_option("--target", solve.target, "Goal as x,y,z")->required()->delimiter(',')->expected(3);
  solve_cmd->add_option("--method", solve.method, "pseudoinverse or transpose")
      ->check(CLI::IsMember({"pseudoinverse", "transpose"}));
  solve_cmd->add_option("--tol", solve.tol, "Residual tolerance");
  solve_cmd->add_option("--max-iter", solve.max_iter, "Iteration budget");
  solve_cmd->add_option("--alpha", solve.alpha, "Step scale in (0, 1]");
  solve_cmd->add_option("--start", solve.start_deg, "Start angles in degrees, comma separated")->delimiter(',');

  std::string chain_path, script_path, out_path, policy_name = "integrated", host = "127.0.0.1";
  auto* run_cmd = app.add_subcommand("run", "Execute a pose script and write the trajectory CSV");
  run_cmd->add_option("--chain", chain_path, "Chain file (JSON)")->required();
  run_cmd->add_option("--script", script_path, "Pose script")->required();
  run_cmd->add_option("--out", out_path, "CSV output path ('-' or omitted: stdout)");
  run_cmd->add_option("--policy", policy_name, "integrated or external-sim")
      ->check(CLI::IsMember({"integrated", "external-sim"}));

  int port = 8765;
  auto* serve_cmd = app.add_subcommand("serve", "Serve the websocket protocol");
  serve_cmd->add_option("--chain", chain_path, "Chain file (JSON)")->required();
  serve_cmd->add_option("--port", port, "TCP port (0 picks a free one)")->check(CLI::Range(0, 65535));
  serve_cmd->add_option("--host", host, "Bind address");
  serve_cmd->add_option("--policy", policy_name, "integrated or external-sim")
      ->check(CLI::IsMember({"integrated", "external-sim"}));

  int trials = 100;
  std::uint64_t seed = 7;
  auto* bench_cmd = app.add_subcommand("bench", "Compare solver methods on a seeded goal set");
  bench_cmd->add_option("--chain", chain_path, "Chain file (JSON)")->required();
  bench_cmd->add_option("--trials", trials, "Number of goals")->check(CLI::NonNegativeNumber);
  bench_cmd->add_option("--seed", seed, "RNG seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kInputError;
  }

  try {
    if (*solve_cmd) return cmd_solve(solve);
    const SyncPolicy policy = *parse_policy(policy_name);
    if (*run_cmd) return cmd_run(chain_path, script_path, out_path, policy);
    if (*serve_cmd) return cmd_serve(chain_path, host, port, policy);
    if (*bench_cmd) return cmd_bench(chain_path, trials, seed);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInputError;
  }
  return kInputError;
}

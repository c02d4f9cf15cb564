#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "kinesnap/chain.hpp"
#include "kinesnap/rig_session.hpp"
#include "kinesnap/solver.hpp"

namespace kinesnap {

// ---- chain files -----------------------------------------------------------

/// Parses a JSON chain document and validates it. Joint limits are given in
/// degrees (`limits_deg`) and stored in radians.
///
/// Throws ParseError with code SyntaxError for malformed or incomplete
/// documents and ValidationError when the chain itself is invalid.
ChainDefinitiond parse_chain_file(std::string_view text);

/// Reads and parses `path`. I/O failures surface as ParseError(SyntaxError).
ChainDefinitiond load_chain_file(const std::filesystem::path& path);

/// Writes the canonical JSON form, numbers in shortest round-trip notation.
/// For any chain obtained from parse_chain_file, reparsing the output gives
/// an identical chain. Limits set directly in radians are written as the
/// nearest degree value, since not every radian double is reachable from a
/// degree double.
std::string serialize_chain(const ChainDefinitiond& chain);

// ---- pose scripts ----------------------------------------------------------

namespace script {

struct SetMode { Mode mode; };
struct Switch {};
struct Rotate {
  std::string joint;
  double radians;
};
struct Effector { Vector3<double> goal; };
struct Policy { SyncPolicy policy; };
struct AssertTip {
  Vector3<double> expected;
  double tolerance;
};
struct Reset {};
struct Dump {};

using Action = std::variant<SetMode, Switch, Rotate, Effector, Policy, AssertTip, Reset, Dump>;

}  // namespace script

struct ScriptCommand {
  int line = 0;
  script::Action action;
};

struct PoseScript {
  std::vector<ScriptCommand> commands;
};

/// Line grammar, one command per line, '#' starts a comment:
///
///     mode fk|ik
///     switch
///     rot <joint-name> <degrees>
///     effector <x> <y> <z>
///     policy integrated|external-sim
///     assert_tip <x> <y> <z> <tol>
///     reset
///     dump
///
/// Unknown verbs and malformed numbers raise SyntaxError, wrong operand
/// counts ArityError, both carrying the 1-based line.
PoseScript parse_script(std::string_view text);
PoseScript load_script_file(const std::filesystem::path& path);

// ---- execution and trajectory output ---------------------------------------

struct TrajectoryRow {
  int step = 0;
  std::string event;
  Mode mode = Mode::FK;
  Vector3<double> tip = Vector3<double>::Zero();
  std::string status;
  std::optional<double> residual;
  std::vector<double> angles_deg;
};

struct AssertionFailure {
  int step = 0;
  int line = 0;
  Vector3<double> expected = Vector3<double>::Zero();
  Vector3<double> actual = Vector3<double>::Zero();
  double distance = 0.0;
  double tolerance = 0.0;
};

struct ScriptAbort {
  int step = 0;
  int line = 0;
  ErrorCode code = ErrorCode::ValidationError;
  std::string message;
};

struct ScriptOutcome {
  std::vector<TrajectoryRow> rows;
  std::vector<AssertionFailure> failures;
  std::optional<ScriptAbort> abort;

  bool passed() const { return failures.empty() && !abort; }
};

/// Drives a fresh RigSession command by command, one row per command. A
/// failing assert_tip is recorded and execution continues; a session error
/// stops the run and is reported in `abort` with the rows produced so far.
ScriptOutcome run_script(const ChainDefinitiond& chain, const PoseScript& script, const SolverConfigd& cfg,
                         SyncPolicy policy = SyncPolicy::Integrated);

/// printf("%.9g"), with negative zero written as 0.
std::string format_number(double value);

/// Header `step,event,mode,tip_x,tip_y,tip_z,status,residual,<joint>_deg...`,
/// LF line endings.
void write_trajectory_csv(std::ostream& out, const ChainDefinitiond& chain, const std::vector<TrajectoryRow>& rows);
std::string trajectory_csv(const ChainDefinitiond& chain, const std::vector<TrajectoryRow>& rows);

}  // namespace kinesnap

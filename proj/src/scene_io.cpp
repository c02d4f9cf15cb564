#include "kinesnap/scene_io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace kinesnap {

namespace {

using nlohmann::json;

[[noreturn]] void syntax(int line, const std::string& message) {
  throw ParseError(ErrorCode::SyntaxError, line, message);
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) syntax(0, "cannot open '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

int line_of_offset(std::string_view text, std::size_t offset) {
  offset = std::min(offset, text.size());
  int line = 1;
  for (std::size_t i = 0; i < offset; ++i)
    if (text[i] == '\n') ++line;
  return line;
}

// ---- chain JSON -----------------------------------------------------------

Vector3<double> read_vec3(const json& node, const std::string& path) {
  if (!node.is_array() || node.size() != 3) syntax(0, path + ": expected an array of 3 numbers");
  Vector3<double> v;
  for (int i = 0; i < 3; ++i) {
    if (!node[static_cast<std::size_t>(i)].is_number()) syntax(0, path + ": expected an array of 3 numbers");
    v[i] = node[static_cast<std::size_t>(i)].get<double>();
  }
  return v;
}

void reject_unknown_keys(const json& node, std::initializer_list<std::string_view> known, const std::string& path) {
  for (const auto& item : node.items()) {
    bool ok = false;
    for (auto k : known) ok = ok || item.key() == k;
    if (!ok) syntax(0, path + ": unknown key '" + item.key() + "'");
  }
}

JointSpecd read_joint(const json& node, const std::string& path) {
  if (!node.is_object()) syntax(0, path + ": expected an object");
  reject_unknown_keys(node, {"name", "offset", "axis", "limits_deg"}, path);
  for (const char* key : {"name", "offset", "axis"})
    if (!node.contains(key)) syntax(0, path + ": missing \"" + key + "\"");
  if (!node["name"].is_string()) syntax(0, path + ".name: expected a string");

  JointSpecd joint;
  joint.name = node["name"].get<std::string>();
  joint.offset = read_vec3(node["offset"], path + ".offset");
  joint.axis = read_vec3(node["axis"], path + ".axis");
  if (node.contains("limits_deg")) {
    const auto& lim = node["limits_deg"];
    if (!lim.is_array() || lim.size() != 2 || !lim[0].is_number() || !lim[1].is_number())
      syntax(0, path + ".limits_deg: expected [min, max]");
    joint.limits = JointLimits<double>{degrees_to_radians(lim[0].get<double>()),
                                       degrees_to_radians(lim[1].get<double>())};
  }
  return joint;
}

/// The degree value whose conversion lands closest to `radians`, exact
/// whenever one exists nearby. Limits read from a file always have one.
double degrees_for(double radians) {
  const double guess = radians_to_degrees(radians);
  double best = guess;
  double best_error = std::abs(degrees_to_radians(guess) - radians);
  double down = guess, up = guess;
  for (int i = 0; i < 64 && best_error > 0.0; ++i) {
    down = std::nextafter(down, -HUGE_VAL);
    up = std::nextafter(up, HUGE_VAL);
    for (double candidate : {down, up}) {
      const double error = std::abs(degrees_to_radians(candidate) - radians);
      if (error < best_error) {
        best = candidate;
        best_error = error;
      }
    }
  }
  return best;
}

std::string number_json(double v) { return json(v).dump(); }

std::string vec3_json(const Vector3<double>& v) {
  return "[" + number_json(v.x()) + ", " + number_json(v.y()) + ", " + number_json(v.z()) + "]";
}

// ---- script lexing ---------------------------------------------------------

std::vector<std::string_view> split_words(std::string_view line) {
  std::vector<std::string_view> words;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
    if (i > start) words.push_back(line.substr(start, i - start));
  }
  return words;
}

double parse_number(std::string_view word, int line) {
  double value = 0.0;
  const char* first = word.data();
  const char* last = word.data() + word.size();
  if (!word.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || !std::isfinite(value))
    syntax(line, "'" + std::string(word) + "' is not a finite number");
  return value;
}

void expect_arity(const std::vector<std::string_view>& words, std::size_t operands, int line) {
  if (words.size() != operands + 1)
    throw ParseError(ErrorCode::ArityError, line,
                     "'" + std::string(words[0]) + "' takes " + std::to_string(operands) + " operand(s), got " +
                         std::to_string(words.size() - 1));
}

script::Action parse_command(const std::vector<std::string_view>& w, int line) {
  const std::string_view verb = w[0];
  if (verb == "mode") {
    expect_arity(w, 1, line);
    if (w[1] == "fk") return script::SetMode{Mode::FK};
    if (w[1] == "ik") return script::SetMode{Mode::IK};
    syntax(line, "mode must be 'fk' or 'ik'");
  }
  if (verb == "switch") {
    expect_arity(w, 0, line);
    return script::Switch{};
  }
  if (verb == "rot") {
    expect_arity(w, 2, line);
    return script::Rotate{std::string(w[1]), degrees_to_radians(parse_number(w[2], line))};
  }
  if (verb == "effector") {
    expect_arity(w, 3, line);
    return script::Effector{{parse_number(w[1], line), parse_number(w[2], line), parse_number(w[3], line)}};
  }
  if (verb == "policy") {
    expect_arity(w, 1, line);
    if (w[1] == "integrated") return script::Policy{SyncPolicy::Integrated};
    if (w[1] == "external-sim") return script::Policy{SyncPolicy::ExternalSolverSim};
    syntax(line, "policy must be 'integrated' or 'external-sim'");
  }
  if (verb == "assert_tip") {
    expect_arity(w, 4, line);
    const double tol = parse_number(w[4], line);
    if (tol < 0.0) syntax(line, "assert_tip tolerance must be non-negative");
    return script::AssertTip{{parse_number(w[1], line), parse_number(w[2], line), parse_number(w[3], line)}, tol};
  }
  if (verb == "reset") {
    expect_arity(w, 0, line);
    return script::Reset{};
  }
  if (verb == "dump") {
    expect_arity(w, 0, line);
    return script::Dump{};
  }
  syntax(line, "unknown command '" + std::string(verb) + "'");
}

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

}  // namespace

// ---- chain files -------------------------------------------------------------

ChainDefinitiond parse_chain_file(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    syntax(line_of_offset(text, e.byte > 0 ? e.byte - 1 : 0), e.what());
  } catch (const json::exception& e) {  // numbers too large for a double
    syntax(0, e.what());
  }

  if (!doc.is_object()) syntax(1, "chain document must be a JSON object");
  reject_unknown_keys(doc, {"name", "joints", "tip_offset"}, "chain");
  if (!doc.contains("name") || !doc["name"].is_string()) syntax(0, "chain: missing string \"name\"");
  if (!doc.contains("joints") || !doc["joints"].is_array()) syntax(0, "chain: missing array \"joints\"");

  ChainDefinitiond chain;
  chain.name = doc["name"].get<std::string>();
  const auto& joints = doc["joints"];
  for (std::size_t i = 0; i < joints.size(); ++i)
    chain.joints.push_back(read_joint(joints[i], "joints[" + std::to_string(i) + "]"));
  if (doc.contains("tip_offset")) chain.tip_offset = read_vec3(doc["tip_offset"], "tip_offset");

  for (std::size_t i = 0; i < chain.joints.size(); ++i) {
    if (chain.joints[i].name.empty()) syntax(0, "joints[" + std::to_string(i) + "]: empty name");
    for (std::size_t k = 0; k < i; ++k)
      if (chain.joints[k].name == chain.joints[i].name)
        syntax(0, "joints[" + std::to_string(i) + "]: duplicate name '" + chain.joints[i].name + "'");
  }

  try {
    return validate_chain(std::move(chain));
  } catch (const Error& e) {
    throw ParseError(ErrorCode::ValidationError, 0, std::string(to_string(e.code())) + ": " + e.what());
  }
}

ChainDefinitiond load_chain_file(const std::filesystem::path& path) { return parse_chain_file(read_text(path)); }

std::string serialize_chain(const ChainDefinitiond& chain) {
  std::string out = "{\n  \"name\": " + json(chain.name).dump() + ",\n  \"joints\": [\n";
  for (std::size_t i = 0; i < chain.joints.size(); ++i) {
    const auto& joint = chain.joints[i];
    out += "    {\"name\": " + json(joint.name).dump() + ", \"offset\": " + vec3_json(joint.offset) +
           ", \"axis\": " + vec3_json(joint.axis);
    if (joint.limits)
      out += ", \"limits_deg\": [" + number_json(degrees_for(joint.limits->min_angle)) + ", " +
             number_json(degrees_for(joint.limits->max_angle)) + "]";
    out += i + 1 < chain.joints.size() ? "},\n" : "}\n";
  }
  out += "  ],\n  \"tip_offset\": " + vec3_json(chain.tip_offset) + "\n}\n";
  return out;
}

// ---- pose scripts ------------------------------------------------------------

PoseScript parse_script(std::string_view text) {
  PoseScript script;
  int line_number = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t end = std::min(text.find('\n', pos), text.size());
    std::string_view line = text.substr(pos, end - pos);
    ++line_number;
    pos = end + 1;

    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    const auto words = split_words(line);
    if (words.empty()) continue;
    script.commands.push_back({line_number, parse_command(words, line_number)});
  }
  return script;
}

PoseScript load_script_file(const std::filesystem::path& path) { return parse_script(read_text(path)); }

// ---- execution -----------------------------------------------------------------

ScriptOutcome run_script(const ChainDefinitiond& chain, const PoseScript& script, const SolverConfigd& cfg,
                         SyncPolicy policy) {
  ScriptOutcome outcome;
  RigSession session(chain, cfg, policy);

  int step = 0;
  for (const auto& command : script.commands) {
    ++step;
    TrajectoryRow row;
    row.step = step;
    row.status = "-";

    auto take_solve = [&](const RigEvent& event) {
      if (!event.solve) return;
      row.status = std::string(to_string(event.solve->status));
      row.residual = event.solve->residual;
    };

    try {
      std::visit(overloaded{
                     [&](const script::SetMode& c) {
                       if (session.mode() == c.mode) {
                         row.event = "mode";
                         return;
                       }
                       session.toggle_ik();
                       row.event = std::string(to_string(session.history().back().kind));
                       take_solve(session.history().back());
                     },
                     [&](const script::Switch&) {
                       session.toggle_ik();
                       row.event = std::string(to_string(session.history().back().kind));
                       take_solve(session.history().back());
                     },
                     [&](const script::Rotate& c) {
                       const auto index = session.chain().find_joint(c.joint);
                       if (!index) throw Error(ErrorCode::UnknownJoint, "no joint named '" + c.joint + "'");
                       session.rotate_joint(*index, c.radians);
                       row.event = "rotate";
                       if (std::get<RotatePayload>(session.history().back().payload).clamped) row.status = "clamped";
                     },
                     [&](const script::Effector& c) {
                       session.move_effector(c.goal);
                       row.event = "move_effector";
                       take_solve(session.history().back());
                     },
                     [&](const script::Policy& c) {
                       session.set_policy(c.policy);
                       row.event = "policy";
                       row.status = std::string(to_string(c.policy));
                     },
                     [&](const script::AssertTip& c) {
                       row.event = "assert_tip";
                       const Vector3<double> actual = session.tip();
                       const double distance = (actual - c.expected).norm();
                       row.residual = distance;
                       const bool ok = distance <= c.tolerance;
                       row.status = ok ? "pass" : "fail";
                       if (!ok) outcome.failures.push_back({step, command.line, c.expected, actual, distance, c.tolerance});
                     },
                     [&](const script::Reset&) {
                       session.reset();
                       row.event = "reset";
                     },
                     [&](const script::Dump&) { row.event = "dump"; },
                 },
                 command.action);
    } catch (const Error& e) {
      outcome.abort = ScriptAbort{step, command.line, e.code(), e.what()};
      return outcome;
    }

    row.mode = session.mode();
    row.tip = session.tip();
    row.angles_deg.reserve(static_cast<std::size_t>(session.dofs().size()));
    for (Index i = 0; i < session.dofs().size(); ++i) row.angles_deg.push_back(radians_to_degrees(session.dofs()[i]));
    outcome.rows.push_back(std::move(row));
  }
  return outcome;
}

std::string format_number(double value) {
  if (value == 0.0) return "0";
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, "%.9g", value);
  return buffer;
}

void write_trajectory_csv(std::ostream& out, const ChainDefinitiond& chain, const std::vector<TrajectoryRow>& rows) {
  out << "step,event,mode,tip_x,tip_y,tip_z,status,residual";
  for (const auto& joint : chain.joints) out << ',' << joint.name << "_deg";
  out << '\n';
  for (const auto& row : rows) {
    out << row.step << ',' << row.event << ',' << to_string(row.mode) << ',' << format_number(row.tip.x()) << ','
        << format_number(row.tip.y()) << ',' << format_number(row.tip.z()) << ',' << row.status << ',';
    if (row.residual) out << format_number(*row.residual);
    for (double angle : row.angles_deg) out << ',' << format_number(angle);
    out << '\n';
  }
}

std::string trajectory_csv(const ChainDefinitiond& chain, const std::vector<TrajectoryRow>& rows) {
  std::ostringstream out;
  write_trajectory_csv(out, chain, rows);
  return out.str();
}

}  // namespace kinesnap

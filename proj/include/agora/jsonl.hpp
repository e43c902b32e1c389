#pragma once

// JSONL ingestion and serialization of trajectories.
//
// eval_log:   {"task_id", "env", "backbone", "method", "blocks": [{"role", "text"}],
//              "step_rewards", "final_reward", "token_in": [int], "token_out": [int]}
// raw_prompt: {"task_id", "prompt": "<role-marked text>"}
//
// Fields not listed above land in Trajectory::extras and are written back
// unchanged.

#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "agora/error.hpp"
#include "agora/parser.hpp"
#include "agora/trajectory.hpp"

namespace agora {

namespace detail {

inline const std::set<std::string>& known_fields(RecordSchema schema) {
  static const std::set<std::string> eval{"task_id",      "env",          "backbone",
                                          "method",       "blocks",       "step_rewards",
                                          "final_reward", "token_in",     "token_out"};
  static const std::set<std::string> raw{"task_id", "env", "backbone", "method", "prompt",
                                         "step_rewards", "final_reward", "token_in", "token_out"};
  return schema == RecordSchema::EvalLog ? eval : raw;
}

template <typename T>
T get_field(const nlohmann::json& j, const char* key, std::size_t line) {
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(line, key, e.what());
  }
}

template <typename T>
std::optional<T> get_optional(const nlohmann::json& j, const char* key, std::size_t line) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  try {
    return it->get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(line, key, e.what());
  }
}

inline void require(const nlohmann::json& j, const char* key, std::size_t line) {
  if (!j.contains(key)) throw SchemaError(line, key, "missing required field");
}

}  // namespace detail

inline Trajectory trajectory_from_json(const nlohmann::json& j, RecordSchema schema,
                                       std::size_t line = 0) {
  using namespace detail;
  if (!j.is_object()) throw SchemaError(line, "<record>", "expected a JSON object");
  Trajectory t;
  t.schema = schema;
  require(j, "task_id", line);
  t.task_id = get_field<std::string>(j, "task_id", line);
  t.env = get_optional<std::string>(j, "env", line);
  t.backbone = get_optional<std::string>(j, "backbone", line);
  t.method = get_optional<std::string>(j, "method", line);

  if (schema == RecordSchema::EvalLog) {
    require(j, "blocks", line);
    const auto& blocks = j.at("blocks");
    if (!blocks.is_array()) throw SchemaError(line, "blocks", "expected an array");
    for (const auto& b : blocks) {
      if (!b.is_object() || !b.contains("role") || !b.contains("text")) {
        throw SchemaError(line, "blocks", "each block needs 'role' and 'text'");
      }
      auto role = parse_role(get_field<std::string>(b, "role", line));
      if (!role) throw SchemaError(line, "blocks", "unknown role '" + b.at("role").dump() + "'");
      RoleBlock rb{*role, get_field<std::string>(b, "text", line), true};
      if (auto m = get_optional<bool>(b, "marked", line)) rb.marked = *m;
      t.blocks.push_back(std::move(rb));
    }
  } else {
    require(j, "prompt", line);
    t.blocks = segment_blocks(get_field<std::string>(j, "prompt", line));
  }
  if (t.blocks.empty()) throw SchemaError(line, "blocks", "must be non-empty");

  t.step_rewards = get_optional<std::vector<double>>(j, "step_rewards", line);
  t.final_reward = get_optional<double>(j, "final_reward", line);
  if (t.step_rewards && !t.final_reward) {
    throw SchemaError(line, "final_reward", "required when step_rewards is present");
  }
  t.token_in = get_optional<std::vector<std::int64_t>>(j, "token_in", line);
  t.token_out = get_optional<std::vector<std::int64_t>>(j, "token_out", line);
  auto check_counts = [line](const std::optional<std::vector<std::int64_t>>& v, const char* key) {
    if (!v) return;
    for (auto n : *v) {
      if (n < 0) throw SchemaError(line, key, "token counts must be nonnegative");
    }
  };
  check_counts(t.token_in, "token_in");
  check_counts(t.token_out, "token_out");

  const auto& known = known_fields(schema);
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!known.count(it.key())) t.extras[it.key()] = it.value();
  }
  return t;
}

inline nlohmann::json trajectory_to_json(const Trajectory& t) {
  nlohmann::json j = nlohmann::json::object();
  j["task_id"] = t.task_id;
  if (t.env) j["env"] = *t.env;
  if (t.backbone) j["backbone"] = *t.backbone;
  if (t.method) j["method"] = *t.method;
  if (t.schema == RecordSchema::EvalLog) {
    auto blocks = nlohmann::json::array();
    for (const auto& b : t.blocks) {
      nlohmann::json jb{{"role", std::string(role_name(b.role))}, {"text", b.text}};
      if (!b.marked) jb["marked"] = false;
      blocks.push_back(std::move(jb));
    }
    j["blocks"] = std::move(blocks);
  } else {
    j["prompt"] = reassemble(t.blocks);
  }
  if (t.step_rewards) j["step_rewards"] = *t.step_rewards;
  if (t.final_reward) j["final_reward"] = *t.final_reward;
  if (t.token_in) j["token_in"] = *t.token_in;
  if (t.token_out) j["token_out"] = *t.token_out;
  for (auto it = t.extras.begin(); it != t.extras.end(); ++it) j[it.key()] = it.value();
  return j;
}

// Reads one trajectory per non-blank line.
inline std::vector<Trajectory> read_trajectories(std::istream& in, RecordSchema schema) {
  std::vector<Trajectory> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(lineno, e.what());
    }
    out.push_back(trajectory_from_json(j, schema, lineno));
  }
  return out;
}

inline std::vector<Trajectory> read_trajectories(const std::string& path, RecordSchema schema) {
  std::ifstream in(path);
  if (!in) throw IoError(path, "cannot open for reading");
  return read_trajectories(in, schema);
}

inline void write_trajectories(const std::vector<Trajectory>& trajs, std::ostream& out) {
  for (const auto& t : trajs) out << trajectory_to_json(t).dump() << '\n';
}

inline void write_trajectories(const std::vector<Trajectory>& trajs, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError(path, "cannot open for writing");
  write_trajectories(trajs, out);
  out.flush();
  if (!out) throw IoError(path, "write failed");
}

// Generic JSONL helpers for the other record kinds.
inline std::vector<nlohmann::json> read_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path, "cannot open for reading");
  std::vector<nlohmann::json> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(nlohmann::json::parse(line));
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(lineno, e.what());
    }
  }
  return out;
}

}  // namespace agora

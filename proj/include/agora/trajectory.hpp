#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "agora/utf8.hpp"

namespace agora {

enum class Role { System, User, Assistant };

// Literal role markers, e.g. "[SYSTEM]".
inline std::string_view role_marker(Role r) noexcept {
  switch (r) {
    case Role::System: return "[SYSTEM]";
    case Role::User: return "[USER]";
    case Role::Assistant: return "[ASSISTANT]";
  }
  return "[USER]";
}

inline std::string_view role_name(Role r) noexcept {
  switch (r) {
    case Role::System: return "system";
    case Role::User: return "user";
    case Role::Assistant: return "assistant";
  }
  return "user";
}

inline std::optional<Role> parse_role(std::string_view name) noexcept {
  std::string lower;
  for (char c : name) lower.push_back(static_cast<char>(c >= 'A' && c <= 'Z' ? c - 'A' + 'a' : c));
  if (lower == "system") return Role::System;
  if (lower == "user") return Role::User;
  if (lower == "assistant") return Role::Assistant;
  return std::nullopt;
}

// One role-typed span of a prompt. `text` never contains the marker itself.
// `marked` is false only for leading text that had no marker (a preamble),
// which lets reassembly reproduce the source byte-for-byte.
struct RoleBlock {
  Role role = Role::System;
  std::string text;
  bool marked = true;

  std::size_t char_len() const noexcept { return utf8::length(text); }

  // Characters this block occupies in a reassembled prompt (marker included).
  std::size_t rendered_len() const noexcept {
    return char_len() + (marked ? role_marker(role).size() : 0);
  }

  friend bool operator==(const RoleBlock&, const RoleBlock&) = default;
};

// Normalized single-line form of a step, as seen by the scorer.
struct StepAtom {
  std::string action_norm;
  std::string obs_norm;

  friend bool operator==(const StepAtom&, const StepAtom&) = default;
};

// Characters the role markers framing one past step add to a prompt:
// "[ASSISTANT]" before the action and "[USER]" before the observation.
inline constexpr std::size_t kStepMarkerOverhead = 11 + 6;

// One (action, observation) pair. `index` is the 1-based ordinal.
struct Step {
  std::size_t index = 0;
  std::string action_text;
  std::string obs_text;
  StepAtom atom;
  std::size_t char_len = 0;

  friend bool operator==(const Step&, const Step&) = default;
};

inline std::size_t step_char_len(std::string_view action, std::string_view obs) noexcept {
  return utf8::length(action) + utf8::length(obs) + kStepMarkerOverhead;
}

// Which on-disk shape a trajectory was read from; writing uses the same one.
enum class RecordSchema { EvalLog, RawPrompt };

struct Trajectory {
  std::string task_id;
  std::optional<std::string> env;
  std::optional<std::string> backbone;
  std::optional<std::string> method;
  std::vector<RoleBlock> blocks;
  std::optional<std::vector<double>> step_rewards;
  std::optional<double> final_reward;
  std::optional<std::vector<std::int64_t>> token_in;
  std::optional<std::vector<std::int64_t>> token_out;
  // Unknown fields, preserved verbatim for lossless round-trips.
  nlohmann::json extras = nlohmann::json::object();
  RecordSchema schema = RecordSchema::EvalLog;

  friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

// Per-task log substrate for cost accounting and audits.
struct TaskLogRecord {
  std::string task_id;
  std::string env;
  std::string backbone;
  std::string method;
  std::vector<std::int64_t> token_in;
  std::vector<std::int64_t> token_out;
  std::optional<double> final_reward;
  std::vector<double> step_rewards;
  std::string system_prompt;
  std::vector<std::string> observations;
  std::vector<std::string> actions;

  std::int64_t total_in() const noexcept {
    std::int64_t s = 0;
    for (auto t : token_in) s += t;
    return s;
  }
  std::int64_t total_out() const noexcept {
    std::int64_t s = 0;
    for (auto t : token_out) s += t;
    return s;
  }
};

// Splits a trajectory's blocks into the log view used by the auditors:
// System blocks form the system prompt, Assistant blocks are actions and
// User blocks are observations (the task instruction included).
inline TaskLogRecord to_log_record(const Trajectory& t) {
  TaskLogRecord r;
  r.task_id = t.task_id;
  r.env = t.env.value_or("");
  r.backbone = t.backbone.value_or("");
  r.method = t.method.value_or("");
  r.token_in = t.token_in.value_or(std::vector<std::int64_t>{});
  r.token_out = t.token_out.value_or(std::vector<std::int64_t>{});
  r.final_reward = t.final_reward;
  r.step_rewards = t.step_rewards.value_or(std::vector<double>{});
  for (const auto& b : t.blocks) {
    switch (b.role) {
      case Role::System: r.system_prompt += b.text; break;
      case Role::User: r.observations.push_back(b.text); break;
      case Role::Assistant: r.actions.push_back(b.text); break;
    }
  }
  return r;
}

}  // namespace agora

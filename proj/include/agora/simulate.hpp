#pragma once

// Synthetic "planted-critical" environment for offline comparison of
// compressors. Each task hides a safe code in one early observation; the
// episode ends at the safe, where a rule policy reads the (compressed)
// context and enters the first code it can find. Reward is 1 for the right
// code, 0 otherwise. The rules are synthetic and stand in for no real
// benchmark.

#include <cstdint>
#include <random>
#include <regex>
#include <string>
#include <vector>

#include "agora/jsonl.hpp"
#include "agora/methods.hpp"
#include "agora/parser.hpp"

namespace agora {

struct SimEnvSpec {
  std::string name = "planted-critical";
  std::size_t min_steps = 6;
  std::size_t max_steps = 12;
};

struct SimTask {
  std::string task_id;
  std::string code;
  std::size_t critical_step = 0;
  std::vector<RoleBlock> blocks;  // full episode up to the decision point
};

inline constexpr std::string_view kSimSystem =
    "You are an agent in a text world. Reply with exactly one action per turn.";
inline constexpr std::string_view kSimTask = "Your task: find the safe code and open the safe.";

inline SimTask make_sim_task(const SimEnvSpec& spec, std::uint64_t seed, std::size_t k) {
  if (spec.min_steps < 4 || spec.max_steps < spec.min_steps) {
    throw ConfigError("simulate: need 4 <= min_steps <= max_steps");
  }
  std::mt19937_64 rng(detail::splitmix64(seed) ^ detail::splitmix64(k + 1));
  SimTask t;
  t.task_id = spec.name + "-" + std::to_string(seed) + "-" + std::to_string(k);
  std::size_t n = spec.min_steps + rng() % (spec.max_steps - spec.min_steps + 1);
  t.critical_step = 1 + rng() % (n - 3);
  t.code = std::to_string(1000 + rng() % 9000);

  static const char* rooms[] = {"kitchen", "hallway", "study", "cellar", "attic", "garden", "library", "pantry"};
  static const char* things[] = {"a chair", "a lamp", "a dusty shelf", "an old rug", "a clock", "a vase"};

  t.blocks.push_back({Role::System, std::string(kSimSystem), true});
  t.blocks.push_back({Role::User, std::string(kSimTask), true});
  for (std::size_t i = 1; i <= n; ++i) {
    std::string action;
    std::string obs;
    if (i == t.critical_step) {
      action = "read note";
      obs = "The note says the safe code is " + t.code + ".";
    } else if (i == n) {
      action = "go to safe";
      obs = "You stand in front of the safe. It asks for a 4-digit code.";
    } else {
      std::string room = rooms[rng() % 8];
      action = "go to " + room;
      obs = "You are in the " + room + ". You see " + things[rng() % 6] + " and " + things[rng() % 6] + ".";
    }
    t.blocks.push_back({Role::Assistant, action, true});
    t.blocks.push_back({Role::User, obs, true});
  }
  return t;
}

// Rule policy at the safe: enter the first code visible in the context.
inline std::string sim_policy(std::string_view context) {
  static const std::regex code_re(R"(safe code is (\d{4}))");
  std::match_results<std::string_view::const_iterator> m;
  if (std::regex_search(context.begin(), context.end(), m, code_re)) return "enter code " + m[1].str();
  return "enter code 0000";
}

inline std::int64_t whitespace_tokens(std::string_view s) {
  std::int64_t n = 0;
  bool in = false;
  for (char c : s) {
    bool ws = c == ' ' || c == '\n' || c == '\t' || c == '\r';
    if (!ws && !in) ++n;
    in = !ws;
  }
  return n;
}

// Runs one episode. Every agent call sees the compressed prefix; scripted
// exploration actions are fixed, only the final action depends on context.
inline Trajectory simulate_task(const SimTask& task, const Method& method, const Scorer& scorer,
                                const CompressionConfig& cfg, const std::string& env_name) {
  Trajectory out;
  out.task_id = task.task_id;
  out.env = env_name;
  out.backbone = "rule-policy";
  out.method = method_name(method);
  out.schema = RecordSchema::EvalLog;
  out.blocks = task.blocks;
  std::vector<std::int64_t> tin;
  std::vector<std::int64_t> tout;
  std::vector<double> rewards;

  // Calls happen after the task block and after each observation.
  for (std::size_t end = 2; end <= task.blocks.size(); end += 2) {
    std::vector<RoleBlock> prefix(task.blocks.begin(), task.blocks.begin() + static_cast<std::ptrdiff_t>(end));
    auto ctx = group_context(prefix);
    auto cc = apply_method(ctx, method, scorer, cfg, RenderStyle::Prompt, task.task_id);
    tin.push_back(whitespace_tokens(cc.rendered));
    if (end < task.blocks.size()) {
      tout.push_back(whitespace_tokens(task.blocks[end].text));
      rewards.push_back(0.0);
    } else {
      auto action = sim_policy(cc.rendered);
      tout.push_back(whitespace_tokens(action));
      double r = action == "enter code " + task.code ? 1.0 : 0.0;
      rewards.push_back(r);
      out.final_reward = r;
      out.blocks.push_back({Role::Assistant, action, true});
    }
  }
  out.step_rewards = rewards;
  out.token_in = tin;
  out.token_out = tout;
  out.extras["critical_step"] = task.critical_step;
  return out;
}

inline std::vector<Trajectory> simulate(const SimEnvSpec& spec, std::size_t n_tasks, const Method& method,
                                        const Scorer& scorer, const CompressionConfig& cfg, std::uint64_t seed) {
  std::vector<Trajectory> out;
  for (std::size_t k = 0; k < n_tasks; ++k) {
    out.push_back(simulate_task(make_sim_task(spec, seed, k), method, scorer, cfg, spec.name));
  }
  return out;
}

}  // namespace agora

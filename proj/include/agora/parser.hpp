#pragma once

// Structural prompt parser: role-marker segmentation and grouping into
// (system, task, past steps, current observation, pending assistant).

#include <cstddef>
#include <optional>
#include <regex>
#include <string>
#include <string_view>
#include <vector>

#include "agora/atom.hpp"
#include "agora/error.hpp"
#include "agora/trajectory.hpp"

namespace agora {

// Grouped view of one prompt.
//
// The final User block is the current observation. When it follows an
// Assistant block, that pair is also the latest past step, so `c_now` and
// `past_steps.back().obs_text` are the same source block; its characters are
// counted once. With no past steps `c_now` is the task block itself.
struct ParsedContext {
  RoleBlock c_sys;
  RoleBlock c_task;
  std::vector<Step> past_steps;
  RoleBlock c_now;
  std::optional<RoleBlock> c_pend;
  std::size_t total_char_len = 0;

  std::size_t num_steps() const noexcept { return past_steps.size(); }
  const Step& step(std::size_t ordinal) const { return past_steps.at(ordinal - 1); }

  // Characters charged for always-present components. The current
  // observation is charged on its own ("[USER]" + text) only when it is the
  // observation of step N; with N = 0 it is the task block, already charged.
  std::size_t sys_cost() const noexcept { return c_sys.rendered_len(); }
  std::size_t task_cost() const noexcept { return c_task.rendered_len(); }
  std::size_t now_cost() const noexcept {
    return past_steps.empty() ? 0 : c_now.rendered_len();
  }
  std::size_t pend_cost() const noexcept { return c_pend ? c_pend->rendered_len() : 0; }
  std::size_t format_cost() const noexcept {
    return sys_cost() + task_cost() + now_cost() + pend_cost();
  }

  // Marginal characters of keeping step `ordinal` on top of the format
  // components. Equal to Step::char_len except for step N, whose observation
  // is already paid for by c_now.
  std::size_t step_cost(std::size_t ordinal) const {
    const Step& s = step(ordinal);
    if (ordinal == past_steps.size()) return s.char_len - c_now.rendered_len();
    return s.char_len;
  }

  friend bool operator==(const ParsedContext&, const ParsedContext&) = default;
};

// Splits a prompt at every literal role marker. Text before the first marker
// (or the whole input when there is none) becomes an unmarked System block.
inline std::vector<RoleBlock> segment_blocks(std::string_view prompt) {
  static const std::regex marker(R"(\[(SYSTEM|USER|ASSISTANT)\])");
  std::vector<RoleBlock> blocks;
  auto begin = std::cregex_iterator(prompt.data(), prompt.data() + prompt.size(), marker);
  auto end = std::cregex_iterator();

  std::size_t cursor = 0;
  std::optional<Role> current;
  for (auto it = begin; it != end; ++it) {
    auto pos = static_cast<std::size_t>(it->position(0));
    std::string_view body = prompt.substr(cursor, pos - cursor);
    if (current) {
      blocks.push_back({*current, std::string(body), true});
    } else if (!body.empty()) {
      blocks.push_back({Role::System, std::string(body), false});
    }
    auto name = (*it)[1].str();
    current = name == "SYSTEM" ? Role::System : name == "USER" ? Role::User : Role::Assistant;
    cursor = pos + static_cast<std::size_t>(it->length(0));
  }
  if (current) {
    blocks.push_back({*current, std::string(prompt.substr(cursor)), true});
  } else {
    blocks.push_back({Role::System, std::string(prompt), false});
  }
  return blocks;
}

// Accepted block grammar:  System? User (Assistant User)* Assistant?
inline ParsedContext group_context(const std::vector<RoleBlock>& blocks, const AtomRuleSet& rules) {
  ParsedContext ctx;
  std::size_t i = 0;
  if (i < blocks.size() && blocks[i].role == Role::System) {
    ctx.c_sys = blocks[i++];
  } else {
    ctx.c_sys = RoleBlock{Role::System, "", false};
  }
  if (i >= blocks.size() || blocks[i].role != Role::User) {
    for (std::size_t k = i; k < blocks.size(); ++k) {
      if (blocks[k].role == Role::User) {
        throw StructureError("block " + std::to_string(i) + ": expected the task [USER] block, found " +
                             std::string(role_marker(blocks[i].role)));
      }
    }
    throw StructureError("no current observation: prompt has no [USER] block");
  }
  ctx.c_task = blocks[i++];
  ctx.c_now = ctx.c_task;

  while (i < blocks.size()) {
    const RoleBlock& b = blocks[i];
    if (b.role != Role::Assistant) {
      throw StructureError("block " + std::to_string(i) + ": expected [ASSISTANT], found " +
                           std::string(role_marker(b.role)));
    }
    if (i + 1 == blocks.size()) {
      ctx.c_pend = b;
      ++i;
      break;
    }
    const RoleBlock& obs = blocks[i + 1];
    if (obs.role != Role::User) {
      throw StructureError("block " + std::to_string(i + 1) + ": expected [USER], found " +
                           std::string(role_marker(obs.role)));
    }
    Step s;
    s.index = ctx.past_steps.size() + 1;
    s.action_text = b.text;
    s.obs_text = obs.text;
    s.atom = normalize_atom(s.action_text, s.obs_text, rules);
    s.char_len = step_char_len(s.action_text, s.obs_text);
    ctx.past_steps.push_back(std::move(s));
    ctx.c_now = obs;
    i += 2;
  }

  ctx.total_char_len = ctx.c_sys.rendered_len() + ctx.c_task.rendered_len() + ctx.pend_cost();
  for (const auto& s : ctx.past_steps) ctx.total_char_len += s.char_len;
  return ctx;
}

inline ParsedContext group_context(const std::vector<RoleBlock>& blocks) {
  return group_context(blocks, atom_rules::default_rules());
}

inline ParsedContext parse_prompt(std::string_view prompt, const AtomRuleSet& rules) {
  return group_context(segment_blocks(prompt), rules);
}

inline ParsedContext parse_prompt(std::string_view prompt) {
  return parse_prompt(prompt, atom_rules::default_rules());
}

inline void append_block(std::string& out, const RoleBlock& b) {
  if (b.marked) out += role_marker(b.role);
  out += b.text;
}

inline void append_step(std::string& out, const Step& s) {
  out += role_marker(Role::Assistant);
  out += s.action_text;
  out += role_marker(Role::User);
  out += s.obs_text;
}

// Joins blocks back into a role-marked prompt.
inline std::string reassemble(const std::vector<RoleBlock>& blocks) {
  std::string out;
  for (const auto& b : blocks) append_block(out, b);
  return out;
}

// Inverse of parse_prompt: byte-identical to the source prompt.
inline std::string reassemble(const ParsedContext& ctx) {
  std::string out;
  append_block(out, ctx.c_sys);
  append_block(out, ctx.c_task);
  for (const auto& s : ctx.past_steps) append_step(out, s);
  if (ctx.c_pend) append_block(out, *ctx.c_pend);
  return out;
}

}  // namespace agora

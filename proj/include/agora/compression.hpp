#pragma once

// Step-level compression: always-keep floor, greedy char-budget fill over
// scored past steps, and rendering with merged elision markers.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "agora/error.hpp"
#include "agora/parser.hpp"
#include "agora/scoring.hpp"
#include "agora/utf8.hpp"

namespace agora {

struct CompressionConfig {
  double rho = 0.25;
  std::size_t k_recent = 2;
  double theta_hi = 0.9;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(rho > 0.0 && rho <= 1.0)) throw ConfigError("rho must lie in (0, 1]");
    if (!(theta_hi >= 0.0 && theta_hi <= 1.0)) throw ConfigError("theta_hi must lie in [0, 1]");
  }
};

enum class RenderStyle {
  Prompt,      // role-marked reassembly, dropped runs replaced by a marker line
  Transcript,  // "[Step i] Action: ... / Obs: ..." listing
};

enum class Component { System, Task, Now, Pending };

// The always-keep set: format components plus forced past steps.
struct FloorSet {
  std::vector<Component> components;
  std::set<std::size_t> steps;
};

// Inclusive range of dropped step ordinals.
struct ElisionSpan {
  std::size_t first = 0;
  std::size_t last = 0;
  std::size_t count() const noexcept { return last - first + 1; }
  friend bool operator==(const ElisionSpan&, const ElisionSpan&) = default;
};

struct CompressionPlan {
  std::set<std::size_t> floor_indices;
  std::set<std::size_t> kept_indices;
  // Kept steps whose observation was replaced by a mask (ObsMask only).
  std::set<std::size_t> masked_indices;
  std::vector<StepScore> scores;
  std::size_t budget_B = 0;
  std::size_t budget_used = 0;
  std::vector<ElisionSpan> elision_spans;
};

struct CompressedContext {
  std::string rendered;
  CompressionPlan plan;
  double realized_ratio = 1.0;
};

inline constexpr std::string_view kObservationMask = "[observation masked]";

// Steps kept with their observation intact.
inline std::set<std::size_t> retained_indices(const CompressionPlan& plan) {
  std::set<std::size_t> out;
  for (auto i : plan.kept_indices) {
    if (!plan.masked_indices.count(i)) out.insert(i);
  }
  return out;
}

// Maximal runs of ordinals in 1..n that are not in `kept`.
inline std::vector<ElisionSpan> elision_spans(const std::set<std::size_t>& kept, std::size_t n) {
  std::vector<ElisionSpan> spans;
  for (std::size_t i = 1; i <= n; ++i) {
    if (kept.count(i)) continue;
    if (!spans.empty() && spans.back().last + 1 == i) {
      spans.back().last = i;
    } else {
      spans.push_back({i, i});
    }
  }
  return spans;
}

// "[Step 3] (elided)" or "[Steps 3–4] (2 step(s) elided)".
inline std::string elision_marker(const ElisionSpan& span) {
  if (span.first == span.last) return "[Step " + std::to_string(span.first) + "] (elided)";
  return "[Steps " + std::to_string(span.first) + "–" + std::to_string(span.last) + "] (" +
         std::to_string(span.count()) + " step(s) elided)";
}

inline std::size_t budget_for(const ParsedContext& ctx, double rho) {
  return static_cast<std::size_t>(std::floor(rho * static_cast<double>(ctx.total_char_len)));
}

inline FloorSet compute_floor(const ParsedContext& ctx, const std::vector<StepScore>& scores,
                              const CompressionConfig& cfg) {
  const std::size_t n = ctx.num_steps();
  if (scores.size() != n) {
    throw ConfigError("compute_floor: " + std::to_string(scores.size()) + " scores for " +
                      std::to_string(n) + " steps");
  }
  FloorSet floor;
  floor.components = {Component::System, Component::Task, Component::Now};
  if (ctx.c_pend) floor.components.push_back(Component::Pending);
  for (std::size_t i = n > cfg.k_recent ? n - cfg.k_recent + 1 : 1; i <= n; ++i) {
    floor.steps.insert(i);
  }
  for (const auto& s : scores) {
    if (s.step_index < 1 || s.step_index > n) {
      throw ConfigError("compute_floor: score for unknown step " + std::to_string(s.step_index));
    }
    if (s.p > cfg.theta_hi) floor.steps.insert(s.step_index);
  }
  return floor;
}

// Admits steps from `order` while they fit in `budget`, on top of the format
// components and `forced` steps which are always kept. Shared by the scored
// fill and the random-order baseline.
inline CompressionPlan fill_budget(const ParsedContext& ctx, const std::set<std::size_t>& forced,
                                   const std::vector<std::size_t>& order, std::size_t budget) {
  CompressionPlan plan;
  plan.floor_indices = forced;
  plan.kept_indices = forced;
  plan.budget_B = budget;
  plan.budget_used = ctx.format_cost();
  for (auto i : forced) plan.budget_used += ctx.step_cost(i);
  for (auto i : order) {
    if (forced.count(i)) continue;
    auto cost = ctx.step_cost(i);
    if (plan.budget_used + cost <= budget) {
      plan.kept_indices.insert(i);
      plan.budget_used += cost;
    }
  }
  plan.elision_spans = elision_spans(plan.kept_indices, ctx.num_steps());
  return plan;
}

// Non-floor steps by descending score; equal scores prefer the later step.
inline CompressionPlan greedy_fill(const ParsedContext& ctx, const std::vector<StepScore>& scores,
                                   const FloorSet& floor, const CompressionConfig& cfg) {
  cfg.validate();
  std::vector<StepScore> rest;
  for (const auto& s : scores) {
    if (!floor.steps.count(s.step_index)) rest.push_back(s);
  }
  std::sort(rest.begin(), rest.end(), [](const StepScore& a, const StepScore& b) {
    if (a.p != b.p) return a.p > b.p;
    return a.step_index > b.step_index;
  });
  std::vector<std::size_t> order;
  order.reserve(rest.size());
  for (const auto& s : rest) order.push_back(s.step_index);

  auto plan = fill_budget(ctx, floor.steps, order, budget_for(ctx, cfg.rho));
  plan.scores = scores;
  return plan;
}

namespace detail {

inline std::string transcript_steps(const ParsedContext& ctx, const CompressionPlan& plan) {
  std::string out;
  auto newline = [&out] {
    if (!out.empty()) out += '\n';
  };
  std::size_t span = 0;
  for (std::size_t i = 1; i <= ctx.num_steps(); ++i) {
    if (!plan.kept_indices.count(i)) {
      const auto& s = plan.elision_spans.at(span);
      if (s.first == i) {
        newline();
        out += elision_marker(s);
      }
      if (s.last == i) ++span;
      continue;
    }
    const Step& st = ctx.step(i);
    std::string head = "[Step " + std::to_string(i) + "] ";
    newline();
    out += head + "Action: " + st.action_text + "\n";
    out += std::string(head.size(), ' ') + "Obs: ";
    out += plan.masked_indices.count(i) ? std::string(kObservationMask) : st.obs_text;
  }
  return out;
}

inline std::string render_prompt(const ParsedContext& ctx, const CompressionPlan& plan) {
  std::string out;
  append_block(out, ctx.c_sys);
  append_block(out, ctx.c_task);
  const std::size_t n = ctx.num_steps();
  std::size_t span = 0;
  for (std::size_t i = 1; i <= n; ++i) {
    if (!plan.kept_indices.count(i)) {
      const auto& s = plan.elision_spans.at(span);
      if (s.first == i) {
        out += elision_marker(s);
        out += '\n';
      }
      if (s.last == i) ++span;
      // The current observation survives even when its step is dropped.
      if (i == n) append_block(out, ctx.c_now);
      continue;
    }
    const Step& st = ctx.step(i);
    out += role_marker(Role::Assistant);
    out += st.action_text;
    out += role_marker(Role::User);
    out += plan.masked_indices.count(i) ? std::string(kObservationMask) : st.obs_text;
  }
  if (ctx.c_pend) append_block(out, *ctx.c_pend);
  return out;
}

inline std::string render_transcript(const ParsedContext& ctx, const CompressionPlan& plan) {
  std::vector<std::string> parts;
  if (!ctx.c_sys.text.empty()) parts.push_back(ctx.c_sys.text);
  parts.push_back(ctx.c_task.text);
  auto steps = transcript_steps(ctx, plan);
  if (!steps.empty()) parts.push_back(std::move(steps));
  const std::size_t n = ctx.num_steps();
  if (n > 0 && (!plan.kept_indices.count(n) || plan.masked_indices.count(n))) {
    parts.push_back(ctx.c_now.text);
  }
  if (ctx.c_pend) parts.push_back(ctx.c_pend->text);
  std::string out;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    if (k) out += '\n';
    out += parts[k];
  }
  return out;
}

}  // namespace detail

// Just the past-step section of a transcript rendering.
inline std::string render_step_section(const ParsedContext& ctx, const CompressionPlan& plan) {
  return detail::transcript_steps(ctx, plan);
}

inline double realized_ratio(std::size_t original_chars, std::string_view rendered) {
  auto out = utf8::length(rendered);
  if (out == 0) return original_chars == 0 ? 1.0 : static_cast<double>(original_chars);
  return static_cast<double>(original_chars) / static_cast<double>(out);
}

inline CompressedContext render(const ParsedContext& ctx, const CompressionPlan& plan,
                                RenderStyle style = RenderStyle::Prompt) {
  CompressedContext out;
  out.plan = plan;
  if (out.plan.elision_spans.empty() && out.plan.kept_indices.size() != ctx.num_steps()) {
    out.plan.elision_spans = elision_spans(out.plan.kept_indices, ctx.num_steps());
  }
  out.rendered = style == RenderStyle::Prompt ? detail::render_prompt(ctx, out.plan)
                                              : detail::render_transcript(ctx, out.plan);
  out.realized_ratio = realized_ratio(ctx.total_char_len, out.rendered);
  return out;
}

// score -> floor -> fill -> render.
inline CompressedContext compress(const ParsedContext& ctx, const Scorer& scorer,
                                  const CompressionConfig& cfg,
                                  RenderStyle style = RenderStyle::Prompt) {
  cfg.validate();
  auto scores = score_steps(scorer, ctx.c_now.text, ctx.past_steps);
  auto floor = compute_floor(ctx, scores, cfg);
  auto plan = greedy_fill(ctx, scores, floor, cfg);
  return render(ctx, plan, style);
}

}  // namespace agora

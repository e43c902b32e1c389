#pragma once

// Inference-free comparison methods sharing the engine's plan and renderer.

#include <cstddef>
#include <cstdint>
#include <random>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "agora/compression.hpp"
#include "agora/error.hpp"

namespace agora {

struct NoComp {};
// Keep only the last `n_tokens` whitespace tokens of the reassembled prompt.
struct TruncateN {
  std::size_t n_tokens = 2048;
};
// Format blocks plus the last k steps.
struct FloorK {
  std::size_t k = 2;
};
// All actions kept; observations outside the last k steps masked.
struct ObsMask {
  std::size_t k = 2;
};
// Floor of the last cfg.k_recent steps, then uniformly random steps up to budget.
struct RandomStep {
  double rho = 0.25;
  std::uint64_t seed = 0;
};

using BaselineMethod = std::variant<NoComp, TruncateN, FloorK, ObsMask, RandomStep>;

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a(std::string_view s) noexcept {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ull;
  }
  return h;
}

// Independent stream per (seed, task, agent step) so that concurrent or
// reordered calls see the same randomness.
inline std::uint64_t stream_seed(std::uint64_t seed, std::string_view task_id, std::size_t step) {
  return splitmix64(splitmix64(seed) ^ fnv1a(task_id) ^ splitmix64(step));
}

inline std::set<std::size_t> last_k(std::size_t n, std::size_t k) {
  std::set<std::size_t> out;
  for (std::size_t i = n > k ? n - k + 1 : 1; i <= n; ++i) out.insert(i);
  return out;
}

inline CompressionPlan plan_keep(const ParsedContext& ctx, std::set<std::size_t> kept) {
  CompressionPlan plan;
  plan.floor_indices = kept;
  plan.budget_used = ctx.format_cost();
  for (auto i : kept) plan.budget_used += ctx.step_cost(i);
  plan.kept_indices = std::move(kept);
  plan.elision_spans = elision_spans(plan.kept_indices, ctx.num_steps());
  return plan;
}

inline bool is_space(char c) noexcept {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

// Byte offset where the last `n` whitespace-separated tokens begin.
inline std::size_t suffix_token_start(std::string_view text, std::size_t n) {
  if (n == 0) return text.size();
  std::size_t pos = text.size();
  std::size_t seen = 0;
  while (pos > 0) {
    while (pos > 0 && is_space(text[pos - 1])) --pos;
    if (pos == 0) break;
    while (pos > 0 && !is_space(text[pos - 1])) --pos;
    if (++seen == n) return pos;
  }
  return 0;
}

}  // namespace detail

inline CompressedContext baseline_compress(const ParsedContext& ctx, const BaselineMethod& method,
                                           const CompressionConfig& cfg,
                                           RenderStyle style = RenderStyle::Prompt,
                                           std::string_view task_id = {}) {
  cfg.validate();
  const std::size_t n = ctx.num_steps();

  if (std::holds_alternative<NoComp>(method)) {
    std::set<std::size_t> all;
    for (std::size_t i = 1; i <= n; ++i) all.insert(i);
    auto plan = detail::plan_keep(ctx, std::move(all));
    plan.floor_indices.clear();
    plan.budget_B = ctx.total_char_len;
    return render(ctx, plan, style);
  }

  if (auto* f = std::get_if<FloorK>(&method)) {
    return render(ctx, detail::plan_keep(ctx, detail::last_k(n, f->k)), style);
  }

  if (auto* m = std::get_if<ObsMask>(&method)) {
    std::set<std::size_t> all;
    for (std::size_t i = 1; i <= n; ++i) all.insert(i);
    auto plan = detail::plan_keep(ctx, all);
    plan.floor_indices = detail::last_k(n, m->k);
    plan.budget_used = ctx.format_cost();
    // Step N's observation is the current observation and is never masked.
    const std::size_t mask_len = utf8::length(kObservationMask);
    for (std::size_t i = 1; i <= n; ++i) {
      if (plan.floor_indices.count(i) || i == n) {
        plan.budget_used += ctx.step_cost(i);
      } else {
        plan.masked_indices.insert(i);
        const Step& s = ctx.step(i);
        plan.budget_used += kStepMarkerOverhead + utf8::length(s.action_text) + mask_len;
      }
    }
    return render(ctx, plan, style);
  }

  if (auto* r = std::get_if<RandomStep>(&method)) {
    if (!(r->rho > 0.0 && r->rho <= 1.0)) throw ConfigError("random-step: rho must lie in (0, 1]");
    auto forced = detail::last_k(n, cfg.k_recent);
    std::vector<std::size_t> order;
    for (std::size_t i = 1; i <= n; ++i) {
      if (!forced.count(i)) order.push_back(i);
    }
    std::mt19937_64 rng(detail::stream_seed(r->seed, task_id, n + 1));
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[rng() % i]);
    }
    return render(ctx, fill_budget(ctx, forced, order, budget_for(ctx, r->rho)), style);
  }

  const auto& t = std::get<TruncateN>(method);
  std::string full = reassemble(ctx);
  std::size_t cut = detail::suffix_token_start(full, t.n_tokens);

  // Steps whose text starts at or after the cut survive intact.
  std::set<std::size_t> kept;
  std::size_t offset = 0;
  {
    std::string head;
    append_block(head, ctx.c_sys);
    append_block(head, ctx.c_task);
    offset = head.size();
  }
  for (const auto& s : ctx.past_steps) {
    if (offset >= cut) kept.insert(s.index);
    offset += role_marker(Role::Assistant).size() + s.action_text.size() +
              role_marker(Role::User).size() + s.obs_text.size();
  }
  CompressedContext out;
  out.plan.kept_indices = std::move(kept);
  out.plan.elision_spans = elision_spans(out.plan.kept_indices, n);
  out.rendered = full.substr(cut);
  out.plan.budget_used = utf8::length(out.rendered);
  out.realized_ratio = realized_ratio(ctx.total_char_len, out.rendered);
  return out;
}

}  // namespace agora

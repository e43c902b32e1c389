#pragma once

// Named compression methods and scorer specs, as used on the command line.

#include <memory>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "agora/baselines.hpp"
#include "agora/compression.hpp"
#include "agora/portable_scorer.hpp"
#include "agora/scoring.hpp"

namespace agora {

struct Agora {};

using Method = std::variant<Agora, NoComp, TruncateN, FloorK, ObsMask, RandomStep>;

namespace detail {

inline std::size_t parse_count(std::string_view s, std::string_view what) {
  try {
    std::size_t used = 0;
    auto v = std::stoull(std::string(s), &used);
    if (used != s.size()) throw std::invalid_argument("trailing");
    return static_cast<std::size_t>(v);
  } catch (const std::exception&) {
    throw ConfigError("bad " + std::string(what) + " '" + std::string(s) + "'");
  }
}

inline double parse_real(std::string_view s, std::string_view what) {
  try {
    std::size_t used = 0;
    auto v = std::stod(std::string(s), &used);
    if (used != s.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("bad " + std::string(what) + " '" + std::string(s) + "'");
  }
}

}  // namespace detail

// Accepted spellings:
//   agora | nocomp | floor-k<K> | obsmask[:K] | random-step[:RHO] | truncate-<N>
// RandomStep takes its seed from `seed`; a missing rho falls back to `rho`.
inline Method parse_method(std::string_view spec, double rho = 0.25, std::uint64_t seed = 0) {
  auto after = [&](std::string_view prefix) { return spec.substr(prefix.size()); };
  auto starts = [&](std::string_view prefix) { return spec.substr(0, prefix.size()) == prefix; };
  if (spec == "agora") return Agora{};
  if (spec == "nocomp" || spec == "no-comp") return NoComp{};
  if (starts("floor-k")) return FloorK{detail::parse_count(after("floor-k"), "floor-k window")};
  if (spec == "obsmask") return ObsMask{2};
  if (starts("obsmask:")) return ObsMask{detail::parse_count(after("obsmask:"), "obsmask window")};
  if (spec == "random-step") return RandomStep{rho, seed};
  if (starts("random-step:")) return RandomStep{detail::parse_real(after("random-step:"), "random-step rho"), seed};
  if (starts("truncate-")) return TruncateN{detail::parse_count(after("truncate-"), "truncate length")};
  throw ConfigError("unknown method '" + std::string(spec) + "'");
}

inline std::string method_name(const Method& m) {
  struct {
    std::string operator()(const Agora&) const { return "agora"; }
    std::string operator()(const NoComp&) const { return "nocomp"; }
    std::string operator()(const FloorK& f) const { return "floor-k" + std::to_string(f.k); }
    std::string operator()(const ObsMask& o) const { return "obsmask:" + std::to_string(o.k); }
    std::string operator()(const RandomStep&) const { return "random-step"; }
    std::string operator()(const TruncateN& t) const { return "truncate-" + std::to_string(t.n_tokens); }
  } visitor;
  return std::visit(visitor, m);
}

inline CompressedContext apply_method(const ParsedContext& ctx, const Method& method, const Scorer& scorer,
                                      const CompressionConfig& cfg, RenderStyle style = RenderStyle::Prompt,
                                      std::string_view task_id = {}) {
  if (std::holds_alternative<Agora>(method)) return compress(ctx, scorer, cfg, style);
  BaselineMethod b = std::visit(
      [](const auto& m) -> BaselineMethod {
        if constexpr (std::is_same_v<std::decay_t<decltype(m)>, Agora>) {
          return NoComp{};
        } else {
          return m;
        }
      },
      method);
  return baseline_compress(ctx, b, cfg, style, task_id);
}

// "lexical" | "keyword:w1,w2" | "portable:<dir>"
inline std::unique_ptr<Scorer> make_scorer(std::string_view spec) {
  if (spec.empty() || spec == "lexical") return std::make_unique<LexicalScorer>();
  if (spec.substr(0, 8) == "keyword:") {
    std::vector<std::string> words;
    std::string cur;
    for (char c : spec.substr(8)) {
      if (c == ',') {
        words.push_back(cur);
        cur.clear();
      } else {
        cur.push_back(c);
      }
    }
    words.push_back(cur);
    return std::make_unique<KeywordScorer>(std::move(words));
  }
  if (spec.substr(0, 9) == "portable:") return load_portable_scorer(std::string(spec.substr(9)));
  throw ConfigError("unknown scorer '" + std::string(spec) + "'");
}

}  // namespace agora

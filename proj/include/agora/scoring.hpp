#pragma once

// Step-relevance scoring: p_i = P(critical | current observation, step atom).

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "agora/atom.hpp"
#include "agora/error.hpp"
#include "agora/trajectory.hpp"
#include "agora/utf8.hpp"

namespace agora {

inline constexpr std::size_t kSideCharLimit = 1500;

struct ScoreRequest {
  std::string anchor;
  std::string candidate;
  std::size_t step_index = 0;
};

struct StepScore {
  std::size_t step_index = 0;
  double p = 0.0;

  friend bool operator==(const StepScore&, const StepScore&) = default;
};

// Keeps the first `limit` Unicode scalars.
inline std::string truncate_side(std::string_view text, std::size_t limit = kSideCharLimit) {
  if (limit == 0) throw ConfigError("truncate_side: limit must be positive");
  return std::string(utf8::prefix(text, limit));
}

// A relevance model over (anchor, candidate) pairs. Implementations must be
// deterministic and safe to call concurrently through a const reference.
class Scorer {
 public:
  virtual ~Scorer() = default;
  virtual double score(std::string_view anchor, std::string_view candidate) const = 0;
  virtual std::string name() const = 0;
};

namespace detail {

inline std::set<std::string> token_set(std::string_view text) {
  std::set<std::string> out;
  std::string cur;
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!cur.empty()) out.insert(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
  }
  if (!cur.empty()) out.insert(std::move(cur));
  return out;
}

}  // namespace detail

// Reference scorer: Jaccard similarity of the lowercased whitespace token
// sets. Two empty token sets score 1.
class LexicalScorer final : public Scorer {
 public:
  double score(std::string_view anchor, std::string_view candidate) const override {
    auto a = detail::token_set(anchor);
    auto b = detail::token_set(candidate);
    if (a.empty() && b.empty()) return 1.0;
    std::size_t inter = 0;
    for (const auto& t : a) inter += b.count(t);
    std::size_t uni = a.size() + b.size() - inter;
    return static_cast<double>(inter) / static_cast<double>(uni);
  }
  std::string name() const override { return "lexical"; }
};

// Rule scorer: `hit` when the candidate contains any keyword (case-insensitive),
// `miss` otherwise. Used to plant known-critical steps in synthetic runs.
class KeywordScorer final : public Scorer {
 public:
  explicit KeywordScorer(std::vector<std::string> keywords, double hit = 0.95, double miss = 0.05)
      : hit_(hit), miss_(miss) {
    if (hit < 0 || hit > 1 || miss < 0 || miss > 1) {
      throw ConfigError("keyword scorer: probabilities must lie in [0,1]");
    }
    for (auto& k : keywords) keywords_.push_back(lower(k));
  }

  double score(std::string_view, std::string_view candidate) const override {
    auto c = lower(candidate);
    for (const auto& k : keywords_) {
      if (!k.empty() && c.find(k) != std::string::npos) return hit_;
    }
    return miss_;
  }
  std::string name() const override { return "keyword"; }

 private:
  static std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
  }

  std::vector<std::string> keywords_;
  double hit_;
  double miss_;
};

inline ScoreRequest make_request(std::string_view anchor, const Step& step) {
  return {truncate_side(anchor), truncate_side(render_atom(step.atom)), step.index};
}

// One score per step, in input order. Both sides are truncated before the
// scorer sees them.
inline std::vector<StepScore> score_steps(const Scorer& scorer, std::string_view anchor,
                                          const std::vector<Step>& steps) {
  std::vector<StepScore> out;
  out.reserve(steps.size());
  for (const auto& s : steps) {
    auto req = make_request(anchor, s);
    double p = 0.0;
    try {
      p = scorer.score(req.anchor, req.candidate);
    } catch (const ScoringError&) {
      throw;
    } catch (const std::exception& e) {
      throw ScoringError(s.index, e.what());
    }
    if (!(p >= 0.0 && p <= 1.0)) {
      throw ScoringError(s.index, scorer.name() + " returned out-of-range probability " +
                                      std::to_string(p));
    }
    out.push_back({s.index, p});
  }
  return out;
}

}  // namespace agora

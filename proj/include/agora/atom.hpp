#pragma once

// Step-atom normalization. An atom is the single-line (action, observation)
// form a scorer sees: chain-of-thought removed, the action reduced to its
// command line, the observation flattened. Environment-specific clean-up is
// table driven so new environments need a rule file, not code.

#include <fstream>
#include <regex>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "agora/error.hpp"
#include "agora/trajectory.hpp"

namespace agora {

struct RegexRule {
  std::string pattern;
  std::string replacement;
  std::regex re;

  RegexRule(std::string pat, std::string rep)
      : pattern(std::move(pat)), replacement(std::move(rep)), re(pattern, std::regex::ECMAScript) {}
};

struct AtomRuleSet {
  std::string name = "default";
  // Lines matching any of these are removed before anything else.
  std::vector<RegexRule> drop_lines;
  // Applied in order to the flattened action / observation.
  std::vector<RegexRule> action_rules;
  std::vector<RegexRule> obs_rules;
};

namespace detail {

inline std::string_view trim(std::string_view s) noexcept {
  const char* ws = " \t\r\n\f\v";
  auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

inline std::string collapse_whitespace(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool pending_space = false;
  for (char c : s) {
    if (c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\f' || c == '\v') {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(c);
  }
  return out;
}

inline std::vector<std::string_view> split_lines(std::string_view s) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= s.size()) {
    auto nl = s.find('\n', start);
    if (nl == std::string_view::npos) {
      lines.push_back(s.substr(start));
      break;
    }
    lines.push_back(s.substr(start, nl - start));
    start = nl + 1;
  }
  return lines;
}

inline bool starts_with(std::string_view s, std::string_view p) noexcept {
  return s.substr(0, p.size()) == p;
}

// Removes any stack of the given prefixes ("Action: Thought: x" -> "x").
inline std::string_view strip_prefixes(std::string_view s,
                                       std::initializer_list<std::string_view> prefixes) {
  s = trim(s);
  for (bool changed = true; changed;) {
    changed = false;
    for (auto p : prefixes) {
      if (starts_with(s, p)) {
        s = trim(s.substr(p.size()));
        changed = true;
      }
    }
  }
  return s;
}

inline bool dropped(std::string_view line, const AtomRuleSet& rules) {
  std::string l(line);
  for (const auto& r : rules.drop_lines) {
    if (std::regex_search(l, r.re)) return true;
  }
  return false;
}

inline std::string apply_rules(std::string s, const std::vector<RegexRule>& rules) {
  for (const auto& r : rules) s = std::regex_replace(s, r.re, r.replacement);
  return s;
}

template <typename Fn>
std::string fixpoint(std::string s, Fn&& step) {
  for (int round = 0; round < 16; ++round) {
    auto next = step(s);
    if (next == s) break;
    s = std::move(next);
  }
  return s;
}

}  // namespace detail

inline StepAtom normalize_atom(std::string_view raw_action, std::string_view raw_obs,
                               const AtomRuleSet& rules) {
  using namespace detail;
  StepAtom atom;

  std::string_view command;
  bool found = false;
  for (auto line : split_lines(raw_action)) {
    if (dropped(line, rules)) continue;
    if (starts_with(trim(line), "Action:")) {
      command = line;
      found = true;
      break;
    }
  }
  if (!found) {
    for (auto line : split_lines(raw_action)) {
      if (dropped(line, rules) || trim(line).empty()) continue;
      command = line;
      break;
    }
  }
  // Rules are re-applied until the text stops changing, so normalizing an
  // atom's own fields reproduces it.
  atom.action_norm = fixpoint(std::string(command), [&](const std::string& a) {
    if (dropped(a, rules)) return std::string();
    auto out = apply_rules(collapse_whitespace(strip_prefixes(a, {"Action:", "Thought:"})), rules.action_rules);
    return collapse_whitespace(strip_prefixes(out, {"Action:", "Thought:"}));
  });

  std::string joined;
  for (auto line : split_lines(raw_obs)) {
    if (dropped(line, rules)) continue;
    joined += strip_prefixes(line, {"Observation:"});
    joined += ' ';
  }
  atom.obs_norm = fixpoint(collapse_whitespace(joined), [&](const std::string& o) {
    if (dropped(o, rules)) return std::string();
    auto out = apply_rules(collapse_whitespace(strip_prefixes(o, {"Observation:"})), rules.obs_rules);
    return collapse_whitespace(strip_prefixes(out, {"Observation:"}));
  });
  return atom;
}

// Candidate text handed to a scorer: "action; obs".
inline std::string render_atom(const StepAtom& atom) {
  return atom.action_norm + "; " + atom.obs_norm;
}

namespace atom_rules {

inline AtomRuleSet base(std::string name) {
  AtomRuleSet r;
  r.name = std::move(name);
  r.drop_lines.emplace_back(R"(^\s*Thought:)", "");
  return r;
}

inline AtomRuleSet default_rules() { return base("default"); }

inline AtomRuleSet alfworld() {
  auto r = base("alfworld");
  r.obs_rules.emplace_back(R"(^On the ([^,]+), you see )", "$1: ");
  r.obs_rules.emplace_back(R"(, and )", ", ");
  r.obs_rules.emplace_back(R"((: |, )an? )", "$1");
  r.obs_rules.emplace_back(R"(\.$)", "");
  return r;
}

inline AtomRuleSet webshop() {
  auto r = base("webshop");
  r.obs_rules.emplace_back(R"(\s*\[SEP\]\s*)", "; ");
  r.obs_rules.emplace_back(R"(\basin; )", "asin=");
  r.obs_rules.emplace_back(R"((; )+)", "; ");
  return r;
}

inline AtomRuleSet scienceworld() {
  auto r = base("scienceworld");
  r.action_rules.emplace_back(R"( in inventory\b)", "");
  return r;
}

}  // namespace atom_rules

// Built-in rule set by name ("default", "alfworld", "webshop", "scienceworld").
inline AtomRuleSet builtin_atom_rules(std::string_view name) {
  if (name == "default") return atom_rules::default_rules();
  if (name == "alfworld") return atom_rules::alfworld();
  if (name == "webshop") return atom_rules::webshop();
  if (name == "scienceworld") return atom_rules::scienceworld();
  throw ConfigError("unknown atom rule set '" + std::string(name) + "'");
}

// Rule file format:
//   {"name": "...", "drop_lines": ["regex", ...],
//    "action": [{"pattern": "...", "replace": "..."}], "obs": [...]}
inline AtomRuleSet atom_rules_from_json(const nlohmann::json& j) {
  AtomRuleSet r;
  try {
    r.name = j.value("name", std::string("custom"));
    for (const auto& p : j.value("drop_lines", nlohmann::json::array())) {
      r.drop_lines.emplace_back(p.get<std::string>(), "");
    }
    auto read = [](const nlohmann::json& arr, std::vector<RegexRule>& out) {
      for (const auto& rule : arr) {
        out.emplace_back(rule.at("pattern").get<std::string>(),
                         rule.value("replace", std::string()));
      }
    };
    read(j.value("action", nlohmann::json::array()), r.action_rules);
    read(j.value("obs", nlohmann::json::array()), r.obs_rules);
  } catch (const std::regex_error& e) {
    throw ConfigError(std::string("atom rules: bad regex: ") + e.what());
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("atom rules: ") + e.what());
  }
  return r;
}

// Accepts a built-in name or a path to a rule file.
inline AtomRuleSet load_atom_rules(const std::string& name_or_path) {
  if (name_or_path == "default" || name_or_path == "alfworld" || name_or_path == "webshop" ||
      name_or_path == "scienceworld") {
    return builtin_atom_rules(name_or_path);
  }
  std::ifstream in(name_or_path);
  if (!in) throw IoError(name_or_path, "cannot open atom rule file");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(name_or_path + ": " + e.what());
  }
  return atom_rules_from_json(j);
}

}  // namespace agora

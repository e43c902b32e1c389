#pragma once

// Data-integrity audits over evaluation logs:
//   (i)   eval/train task-id disjointness (blocking)
//   (ii)  duplicate full-trajectory hashes within chunks of tasks
//   (iii) realized vs nominal compression-ratio drift
//   (iv)  identical-action loops and truncated (cut-off) responses
// Findings are reported; input records are never modified or dropped.

#include <openssl/evp.h>

#include <algorithm>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "agora/accounting.hpp"
#include "agora/error.hpp"
#include "agora/trajectory.hpp"

namespace agora {

struct AuditOptions {
  std::size_t chunk_size = 5;
  double band_low = 0.5;
  double band_high = 2.0;
  std::size_t loop_threshold = 5;
  // A cell is flagged when its cut-off rate exceeds this.
  double cutoff_flag_rate = 0.1;
  // Trailing characters that mark a response as cut mid-token.
  std::string dangling_chars = ",;:-([{";
  std::string reference_method = "nocomp";
};

struct DuplicateHash {
  CellKey cell;
  std::size_t chunk = 0;
  std::string hash;
  std::vector<std::string> task_ids;
};

struct RatioDrift {
  CellKey cell;
  double realized = 0.0;
  double nominal = 0.0;
  bool flagged = false;
  std::string error;  // set when the ratio could not be computed
};

struct ActionLoop {
  CellKey cell;
  std::string task_id;
  std::size_t run_length = 0;
  std::string action;
};

struct CutoffRate {
  CellKey cell;
  std::size_t responses = 0;
  std::size_t cutoffs = 0;
  double rate = 0.0;
  bool flagged = false;
};

struct AuditReport {
  bool disjoint = true;
  std::vector<std::string> overlapping_ids;
  std::vector<DuplicateHash> duplicate_hashes;
  std::vector<RatioDrift> ratio_drift;
  std::vector<ActionLoop> loops;
  std::vector<CutoffRate> cutoffs;

  bool blocking() const noexcept { return !disjoint; }
  bool has_findings() const noexcept {
    if (!disjoint || !duplicate_hashes.empty() || !loops.empty()) return true;
    for (const auto& d : ratio_drift) {
      if (d.flagged) return true;
    }
    for (const auto& c : cutoffs) {
      if (c.flagged) return true;
    }
    return false;
  }
};

inline std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("sha256: digest failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 0xF];
  }
  return out;
}

// Canonical form hashed by audit (ii): compact JSON with lexicographically
// ordered keys {actions, final_reward, observations, step_rewards, system}.
inline std::string canonical_trajectory(const TaskLogRecord& r) {
  nlohmann::json j;
  j["system"] = r.system_prompt;
  j["observations"] = r.observations;
  j["actions"] = r.actions;
  j["step_rewards"] = r.step_rewards;
  j["final_reward"] = r.final_reward ? nlohmann::json(*r.final_reward) : nlohmann::json();
  return j.dump();
}

inline std::string trajectory_hash(const TaskLogRecord& r) { return sha256_hex(canonical_trajectory(r)); }

// Length of the longest run of identical consecutive actions and the action.
inline std::pair<std::size_t, std::string> longest_action_run(const std::vector<std::string>& actions) {
  std::size_t best = 0;
  std::string best_action;
  for (std::size_t i = 0; i < actions.size();) {
    std::size_t j = i;
    while (j + 1 < actions.size() && actions[j + 1] == actions[i]) ++j;
    if (j - i + 1 > best) {
      best = j - i + 1;
      best_action = actions[i];
    }
    i = j + 1;
  }
  return {best, best_action};
}

// Heuristic: empty, unbalanced brackets/quotes, or a dangling trailing character.
inline bool looks_cut_off(std::string_view response, std::string_view dangling = ",;:-([{") {
  auto end = response.find_last_not_of(" \t\r\n");
  if (end == std::string_view::npos) return true;
  response = response.substr(0, end + 1);
  int square = 0, paren = 0, brace = 0, quotes = 0;
  for (char c : response) {
    square += c == '[' ? 1 : c == ']' ? -1 : 0;
    paren += c == '(' ? 1 : c == ')' ? -1 : 0;
    brace += c == '{' ? 1 : c == '}' ? -1 : 0;
    quotes += c == '"';
  }
  if (square > 0 || paren > 0 || brace > 0 || quotes % 2 != 0) return true;
  return dangling.find(response.back()) != std::string_view::npos;
}

inline AuditReport audit(const std::vector<TaskLogRecord>& logs, const std::set<std::string>& train_ids,
                         std::optional<double> nominal_ratio, const AuditOptions& opt = {}) {
  AuditReport rep;

  std::set<std::string> overlap;
  for (const auto& r : logs) {
    if (train_ids.count(r.task_id)) overlap.insert(r.task_id);
  }
  rep.overlapping_ids.assign(overlap.begin(), overlap.end());
  rep.disjoint = overlap.empty();

  // Cells in first-seen order; tasks keep arrival order inside a cell.
  std::vector<CellKey> order;
  std::map<CellKey, std::vector<TaskLogRecord>> cells;
  for (const auto& r : logs) {
    CellKey k{r.env, r.backbone, r.method};
    auto [it, fresh] = cells.try_emplace(k);
    if (fresh) order.push_back(k);
    it->second.push_back(r);
  }

  const std::size_t chunk = std::max<std::size_t>(opt.chunk_size, 1);
  for (const auto& key : order) {
    const auto& recs = cells.at(key);

    for (std::size_t start = 0; start < recs.size(); start += chunk) {
      std::map<std::string, std::vector<std::string>> by_hash;
      std::vector<std::string> hash_order;
      for (std::size_t i = start; i < std::min(recs.size(), start + chunk); ++i) {
        auto h = trajectory_hash(recs[i]);
        auto& ids = by_hash[h];
        if (ids.empty()) hash_order.push_back(h);
        ids.push_back(recs[i].task_id);
      }
      for (const auto& h : hash_order) {
        if (by_hash[h].size() > 1) rep.duplicate_hashes.push_back({key, start / chunk, h, by_hash[h]});
      }
    }

    if (nominal_ratio && key.method != opt.reference_method) {
      auto ref = cells.find({key.env, key.backbone, opt.reference_method});
      if (ref != cells.end()) {
        RatioDrift d{key, 0.0, *nominal_ratio, false, {}};
        try {
          d.realized = eff_ratio(recs, ref->second);
          double rel = d.realized / *nominal_ratio;
          d.flagged = rel < opt.band_low || rel > opt.band_high;
        } catch (const Error& e) {
          d.error = e.what();
          d.flagged = true;
        }
        rep.ratio_drift.push_back(std::move(d));
      }
    }

    CutoffRate cut{key, 0, 0, 0.0, false};
    for (const auto& r : recs) {
      auto [run, action] = longest_action_run(r.actions);
      if (run >= opt.loop_threshold) rep.loops.push_back({key, r.task_id, run, action});
      for (const auto& a : r.actions) {
        ++cut.responses;
        cut.cutoffs += looks_cut_off(a, opt.dangling_chars);
      }
    }
    if (cut.responses > 0) {
      cut.rate = static_cast<double>(cut.cutoffs) / static_cast<double>(cut.responses);
      cut.flagged = cut.rate > opt.cutoff_flag_rate;
    }
    rep.cutoffs.push_back(cut);
  }
  return rep;
}

inline nlohmann::json audit_to_json(const AuditReport& rep) {
  auto cell = [](const CellKey& k) {
    return nlohmann::json{{"env", k.env}, {"backbone", k.backbone}, {"method", k.method}};
  };
  nlohmann::json j;
  j["disjointness"] = {{"pass", rep.disjoint}, {"blocking", rep.blocking()}, {"overlapping_ids", rep.overlapping_ids}};
  j["duplicate_hashes"] = nlohmann::json::array();
  for (const auto& d : rep.duplicate_hashes) {
    j["duplicate_hashes"].push_back({{"cell", cell(d.cell)}, {"chunk", d.chunk}, {"hash", d.hash}, {"task_ids", d.task_ids}});
  }
  j["ratio_drift"] = nlohmann::json::array();
  for (const auto& d : rep.ratio_drift) {
    nlohmann::json e{{"cell", cell(d.cell)}, {"realized", d.realized}, {"nominal", d.nominal}, {"flagged", d.flagged}};
    if (!d.error.empty()) e["error"] = d.error;
    j["ratio_drift"].push_back(std::move(e));
  }
  j["loops"] = nlohmann::json::array();
  for (const auto& l : rep.loops) {
    j["loops"].push_back({{"cell", cell(l.cell)}, {"task_id", l.task_id}, {"run_length", l.run_length}, {"action", l.action}});
  }
  j["cutoffs"] = nlohmann::json::array();
  for (const auto& c : rep.cutoffs) {
    j["cutoffs"].push_back({{"cell", cell(c.cell)}, {"responses", c.responses}, {"cutoffs", c.cutoffs},
                            {"rate", c.rate}, {"flagged", c.flagged}});
  }
  j["findings"] = rep.has_findings();
  return j;
}

}  // namespace agora

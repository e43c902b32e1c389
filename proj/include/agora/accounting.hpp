#pragma once

// Cost and effective-compression accounting over per-task logs.
//
// Prices are list prices in CNY per million tokens; USD figures divide by
// `fx` (CNY per USD).

#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "agora/error.hpp"
#include "agora/stats.hpp"
#include "agora/trajectory.hpp"

namespace agora {

struct TokenPrice {
  double in = 0.0;
  double out = 0.0;
};

struct PriceTable {
  std::map<std::string, TokenPrice> backbones;
  double fx = 7.0;

  static PriceTable defaults() {
    PriceTable t;
    t.backbones = {
        {"qwen3.5-flash", {0.158, 1.58}},
        {"gpt-4o-mini", {0.75, 3.0}},
        {"gpt-5-mini", {1.25, 10.0}},
    };
    t.fx = 7.0;
    return t;
  }

  const TokenPrice& at(const std::string& backbone) const {
    auto it = backbones.find(backbone);
    if (it == backbones.end()) {
      std::string known;
      for (const auto& [k, v] : backbones) known += (known.empty() ? "" : ", ") + k;
      throw ConfigError("unknown backbone '" + backbone + "' (known: " + known + ")");
    }
    return it->second;
  }

  void validate() const {
    if (!(fx > 0)) throw ConfigError("prices: fx must be positive");
    for (const auto& [k, p] : backbones) {
      if (!(p.in > 0) || !(p.out > 0)) throw ConfigError("prices: rates for '" + k + "' must be positive");
    }
  }
};

// {"fx": 7, "backbones": {"name": {"in": 0.75, "out": 3.0}}}; entries are
// merged over the defaults.
inline PriceTable price_table_from_json(const nlohmann::json& j) {
  auto t = PriceTable::defaults();
  try {
    t.fx = j.value("fx", t.fx);
    if (j.contains("backbones")) {
      for (const auto& [name, p] : j.at("backbones").items()) {
        t.backbones[name] = {p.at("in").get<double>(), p.at("out").get<double>()};
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("prices: ") + e.what());
  }
  t.validate();
  return t;
}

inline PriceTable load_price_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path, "cannot open price table");
  try {
    return price_table_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

// (T_in * p_in + T_out * p_out) / 1e6, in list-price currency.
inline double cost_per_task(double t_in, double t_out, const PriceTable& prices,
                            const std::string& backbone) {
  if (t_in < 0 || t_out < 0) throw ConfigError("cost_per_task: token counts must be nonnegative");
  const auto& p = prices.at(backbone);
  return (t_in * p.in + t_out * p.out) / 1e6;
}

inline double to_usd(double cny, const PriceTable& prices) { return cny / prices.fx; }

namespace detail {

inline std::map<std::string, const TaskLogRecord*> index_by_task(const std::vector<TaskLogRecord>& logs,
                                                                 const char* side) {
  std::map<std::string, const TaskLogRecord*> m;
  for (const auto& r : logs) {
    if (!m.emplace(r.task_id, &r).second) {
      throw PairingError(r.task_id, std::string("duplicate task id in ") + side + " log");
    }
  }
  return m;
}

}  // namespace detail

// Per-task mean of T_in(nocomp) / T_in(method), paired by task id.
inline double eff_ratio(const std::vector<TaskLogRecord>& method, const std::vector<TaskLogRecord>& nocomp) {
  auto m = detail::index_by_task(method, "method");
  auto r = detail::index_by_task(nocomp, "reference");
  for (const auto& [id, rec] : r) {
    if (!m.count(id)) throw PairingError(id, "missing from method log");
  }
  for (const auto& [id, rec] : m) {
    if (!r.count(id)) throw PairingError(id, "missing from reference log");
  }
  if (m.empty()) throw Error("eff_ratio: empty logs");
  double sum = 0.0;
  for (const auto& [id, rec] : m) {
    auto denom = rec->total_in();
    if (denom == 0) throw PairingError(id, "method log has zero input tokens");
    sum += static_cast<double>(r.at(id)->total_in()) / static_cast<double>(denom);
  }
  return sum / static_cast<double>(m.size());
}

// Σ T_in(nocomp) / Σ T_in(method). Reported for contrast only.
inline double aggregate_ratio(const std::vector<TaskLogRecord>& method,
                              const std::vector<TaskLogRecord>& nocomp) {
  double num = 0.0;
  double den = 0.0;
  for (const auto& r : nocomp) num += static_cast<double>(r.total_in());
  for (const auto& r : method) den += static_cast<double>(r.total_in());
  if (den == 0.0) throw Error("aggregate_ratio: zero method tokens");
  return num / den;
}

struct CellKey {
  std::string env;
  std::string backbone;
  std::string method;
  friend auto operator<=>(const CellKey&, const CellKey&) = default;
};

struct CellMetrics {
  CellKey cell;
  std::size_t n_tasks = 0;
  double mr = 0.0;
  std::optional<double> retention;
  std::optional<double> eff_ratio;
  std::optional<double> cost_per_task;  // list-price currency
  std::optional<double> cost_per_task_usd;
  double ci_low = 0.0;
  double ci_high = 0.0;
};

struct MetricsOptions {
  std::string reference_method = "nocomp";
  std::size_t resamples = 10000;
  double level = 0.95;
  std::uint64_t seed = 0;
};

inline std::map<CellKey, std::vector<TaskLogRecord>> group_cells(const std::vector<TaskLogRecord>& logs) {
  std::map<CellKey, std::vector<TaskLogRecord>> cells;
  for (const auto& r : logs) cells[{r.env, r.backbone, r.method}].push_back(r);
  return cells;
}

// Metrics for every (env, backbone, method) cell. Retention and Eff.x need the
// reference method in the same (env, backbone); cost needs a priced backbone.
inline std::vector<CellMetrics> compute_cell_metrics(const std::vector<TaskLogRecord>& logs,
                                                     const PriceTable& prices,
                                                     const MetricsOptions& opt = {}) {
  auto cells = group_cells(logs);
  std::vector<CellMetrics> out;
  for (const auto& [key, recs] : cells) {
    CellMetrics m;
    m.cell = key;
    m.n_tasks = recs.size();
    std::vector<double> rewards;
    double t_in = 0.0;
    double t_out = 0.0;
    for (const auto& r : recs) {
      rewards.push_back(r.final_reward.value_or(0.0));
      t_in += static_cast<double>(r.total_in());
      t_out += static_cast<double>(r.total_out());
    }
    double sum = 0.0;
    for (double x : rewards) sum += x;
    m.mr = sum / static_cast<double>(rewards.size());
    auto ci = bootstrap_ci(rewards, opt.resamples, opt.level, opt.seed);
    m.ci_low = ci.low;
    m.ci_high = ci.high;

    auto ref = cells.find({key.env, key.backbone, opt.reference_method});
    if (ref != cells.end()) {
      double ref_sum = 0.0;
      for (const auto& r : ref->second) ref_sum += r.final_reward.value_or(0.0);
      double ref_mr = ref_sum / static_cast<double>(ref->second.size());
      if (ref_mr > 0) m.retention = m.mr / ref_mr;
      m.eff_ratio = eff_ratio(recs, ref->second);
    }
    if (prices.backbones.count(key.backbone)) {
      auto n = static_cast<double>(recs.size());
      m.cost_per_task = cost_per_task(t_in / n, t_out / n, prices, key.backbone);
      m.cost_per_task_usd = to_usd(*m.cost_per_task, prices);
    }
    out.push_back(std::move(m));
  }
  return out;
}

namespace detail {

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline std::string num(double v) {
  std::ostringstream os;
  os.precision(12);
  os << v;
  return os.str();
}

inline std::string opt_num(const std::optional<double>& v) { return v ? num(*v) : ""; }

}  // namespace detail

inline std::string metrics_to_csv(const std::vector<CellMetrics>& rows) {
  std::string out = "env,backbone,method,n,mr,ci_low,ci_high,retention,eff_ratio,cost_per_task,cost_per_task_usd\n";
  for (const auto& r : rows) {
    out += detail::csv_field(r.cell.env) + "," + detail::csv_field(r.cell.backbone) + "," +
           detail::csv_field(r.cell.method) + "," + std::to_string(r.n_tasks) + "," +
           detail::num(r.mr) + "," + detail::num(r.ci_low) + "," + detail::num(r.ci_high) + "," +
           detail::opt_num(r.retention) + "," + detail::opt_num(r.eff_ratio) + "," +
           detail::opt_num(r.cost_per_task) + "," + detail::opt_num(r.cost_per_task_usd) + "\n";
  }
  return out;
}

inline nlohmann::json metrics_to_json(const std::vector<CellMetrics>& rows) {
  auto arr = nlohmann::json::array();
  auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(); };
  for (const auto& r : rows) {
    arr.push_back({{"env", r.cell.env},
                   {"backbone", r.cell.backbone},
                   {"method", r.cell.method},
                   {"n", r.n_tasks},
                   {"mr", r.mr},
                   {"ci_low", r.ci_low},
                   {"ci_high", r.ci_high},
                   {"retention", opt(r.retention)},
                   {"eff_ratio", opt(r.eff_ratio)},
                   {"cost_per_task", opt(r.cost_per_task)},
                   {"cost_per_task_usd", opt(r.cost_per_task_usd)}});
  }
  return arr;
}

}  // namespace agora

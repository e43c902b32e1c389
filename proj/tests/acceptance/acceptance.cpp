// Acceptance suite: one PASS/FAIL line per primary criterion. Oracles here are
// written independently of the library code paths they check.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "../unit/test_support.hpp"

using namespace agora;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int g_failed = 0;

void report(const std::string& name, const std::function<Outcome()>& check) {
  Outcome o;
  try {
    o = check();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  std::printf("[%s] %s: %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
  std::fflush(stdout);
  if (!o.pass) ++g_failed;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Reference character count: bytes that are not UTF-8 continuation bytes.
std::size_t ref_chars(const std::string& s) {
  std::size_t n = 0;
  for (unsigned char c : s) n += (c & 0xC0) != 0x80;
  return n;
}

// A trajectory held as plain strings, independent of the parser's types.
struct Plain {
  std::string sys;
  bool has_sys = true;
  std::string task;
  std::vector<testkit::StepText> steps;
  std::optional<std::string> pend;
};

Plain plain_from(const testkit::RandomTrajectory& t) {
  return {t.sys, t.with_system, t.task, t.steps, t.pend};
}

// Characters of the prompt holding the format components and the steps in
// `kept`, without any elision markers. The current observation is present
// on its own when step N is not kept.
std::size_t oracle_cost(const Plain& p, const std::set<std::size_t>& kept) {
  std::string s;
  if (p.has_sys) s += "[SYSTEM]" + p.sys;
  s += "[USER]" + p.task;
  const std::size_t n = p.steps.size();
  for (std::size_t i = 1; i <= n; ++i) {
    if (kept.count(i)) s += "[ASSISTANT]" + p.steps[i - 1].action + "[USER]" + p.steps[i - 1].obs;
  }
  if (n > 0 && !kept.count(n)) s += "[USER]" + p.steps[n - 1].obs;
  if (p.pend) s += "[ASSISTANT]" + *p.pend;
  return ref_chars(s);
}

std::set<std::size_t> oracle_floor(std::size_t n, const std::vector<double>& p, std::size_t k, double theta) {
  std::set<std::size_t> f;
  for (std::size_t i = 1; i <= n; ++i) {
    if (i + k > n || p[i - 1] > theta) f.insert(i);
  }
  return f;
}

// The greedy definition executed literally: visit the remaining steps by
// descending score (later step first on ties) and admit one whenever the
// prompt it produces still fits the budget.
std::set<std::size_t> oracle_greedy(const Plain& pl, const std::vector<double>& p, std::size_t k, double theta,
                                    std::size_t budget) {
  const std::size_t n = pl.steps.size();
  auto kept = oracle_floor(n, p, k, theta);
  std::vector<std::size_t> rest;
  for (std::size_t i = 1; i <= n; ++i) {
    if (!kept.count(i)) rest.push_back(i);
  }
  // Selection sort, deliberately unlike the library's std::sort.
  while (!rest.empty()) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < rest.size(); ++j) {
      double pj = p[rest[j] - 1], pb = p[rest[best] - 1];
      if (pj > pb || (pj == pb && rest[j] > rest[best])) best = j;
    }
    std::size_t i = rest[best];
    rest.erase(rest.begin() + static_cast<std::ptrdiff_t>(best));
    auto trial = kept;
    trial.insert(i);
    if (oracle_cost(pl, trial) <= budget) kept = std::move(trial);
  }
  return kept;
}

std::vector<double> random_scores(std::mt19937_64& rng, std::size_t n) {
  static const double grid[] = {0.0, 0.05, 0.2, 0.2, 0.5, 0.5, 0.7, 0.89, 0.9, 0.91, 0.95, 1.0};
  std::vector<double> p;
  for (std::size_t i = 0; i < n; ++i) {
    p.push_back(rng() % 3 == 0 ? std::uniform_real_distribution<double>(0, 1)(rng) : grid[rng() % 12]);
  }
  return p;
}

CompressionConfig random_config(std::mt19937_64& rng) {
  CompressionConfig cfg;
  cfg.rho = std::uniform_real_distribution<double>(0.02, 1.0)(rng);
  cfg.k_recent = rng() % 5;
  cfg.theta_hi = std::uniform_real_distribution<double>(0.5, 1.0)(rng);
  return cfg;
}

// Trajectory with widely varying step lengths so budgets bind.
testkit::RandomTrajectory sized_trajectory(std::mt19937_64& rng, std::size_t max_steps) {
  auto t = testkit::random_trajectory(rng, max_steps);
  for (auto& s : t.steps) {
    if (rng() % 3 == 0) s.obs += std::string(rng() % 200, 'x');
  }
  return t;
}

// ---------------------------------------------------------------------------

Outcome parser_losslessness() {
  std::mt19937_64 rng(101);
  std::vector<std::string> prompts;
  for (int i = 0; i < 1000; ++i) {
    auto t = testkit::random_trajectory(rng, 20);
    std::string p = t.prompt();
    if (i % 10 == 0) p = "free preamble\n" + p.substr(p.find("[USER]"));
    prompts.push_back(p);
  }
  std::size_t failures = 0;
  auto start = std::chrono::steady_clock::now();
  for (const auto& p : prompts) {
    auto ctx = parse_prompt(p);
    if (reassemble(ctx) != p || ctx.total_char_len != ref_chars(p)) ++failures;
  }
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  char buf[128];
  std::snprintf(buf, sizeof buf, "1000 prompts, %zu failures, %.3f s", failures, secs);
  return {failures == 0 && secs < 5.0, buf};
}

Outcome floor_invariance() {
  std::mt19937_64 rng(202);
  std::size_t violations = 0;
  const int cases = 10000;
  for (int c = 0; c < cases; ++c) {
    auto t = sized_trajectory(rng, 15);
    auto ctx = parse_prompt(t.prompt());
    auto cfg = random_config(rng);
    auto p = random_scores(rng, ctx.num_steps());
    auto scores = testkit::scores_of(p);
    auto plan = greedy_fill(ctx, scores, compute_floor(ctx, scores, cfg), cfg);
    auto out = render(ctx, plan, RenderStyle::Prompt).rendered;
    const auto n = t.steps.size();

    bool ok = true;
    auto has = [&](const std::string& s) { return out.find(s) != std::string::npos; };
    if (t.with_system && !has("[SYSTEM]" + t.sys)) ok = false;
    if (!has("[USER]" + t.task)) ok = false;
    if (n > 0 && !has("[USER]" + t.steps[n - 1].obs)) ok = false;
    if (t.pend && !has("[ASSISTANT]" + *t.pend)) ok = false;
    for (auto i : oracle_floor(n, p, cfg.k_recent, cfg.theta_hi)) {
      const auto& s = t.steps[i - 1];
      if (!plan.kept_indices.count(i) || !has("[ASSISTANT]" + s.action + "[USER]" + s.obs)) ok = false;
    }
    violations += !ok;
  }
  return {violations == 0, std::to_string(cases) + " draws, " + std::to_string(violations) + " violations"};
}

Outcome greedy_oracle() {
  std::mt19937_64 rng(303);
  std::size_t instances = 0, mismatches = 0;
  while (instances < 12000) {
    auto t = sized_trajectory(rng, 12);
    auto pl = plain_from(t);
    auto ctx = parse_prompt(t.prompt());
    if (ctx.num_steps() > 12) continue;
    auto cfg = random_config(rng);
    auto p = random_scores(rng, ctx.num_steps());
    auto scores = testkit::scores_of(p);
    auto plan = greedy_fill(ctx, scores, compute_floor(ctx, scores, cfg), cfg);

    auto budget = static_cast<std::size_t>(std::floor(cfg.rho * static_cast<double>(ref_chars(t.prompt()))));
    auto want = oracle_greedy(pl, p, cfg.k_recent, cfg.theta_hi, budget);
    if (plan.kept_indices != want || plan.budget_B != budget || plan.budget_used != oracle_cost(pl, want)) {
      ++mismatches;
    }
    ++instances;
  }
  return {mismatches == 0 && instances >= 10000,
          std::to_string(instances) + " instances (N <= 12), " + std::to_string(mismatches) + " mismatches"};
}

Outcome budget_soundness() {
  std::mt19937_64 rng(404);
  std::size_t checked = 0, violations = 0, over_floor = 0;
  for (int c = 0; c < 10000; ++c) {
    auto t = sized_trajectory(rng, 15);
    auto pl = plain_from(t);
    auto ctx = parse_prompt(t.prompt());
    auto cfg = random_config(rng);
    auto p = random_scores(rng, ctx.num_steps());
    auto scores = testkit::scores_of(p);
    auto floor = compute_floor(ctx, scores, cfg);
    auto plan = greedy_fill(ctx, scores, floor, cfg);
    std::size_t floor_cost = oracle_cost(pl, oracle_floor(pl.steps.size(), p, cfg.k_recent, cfg.theta_hi));
    if (floor_cost > plan.budget_B) {
      ++over_floor;
      continue;
    }
    ++checked;
    if (plan.budget_used > plan.budget_B || plan.budget_used != oracle_cost(pl, plan.kept_indices)) ++violations;

    // The random-order baseline shares the fill and must respect the budget too.
    auto rs = baseline_compress(ctx, RandomStep{cfg.rho, static_cast<std::uint64_t>(c)}, cfg, RenderStyle::Prompt,
                                "t" + std::to_string(c));
    std::set<std::size_t> recent;
    for (std::size_t i = 1; i <= pl.steps.size(); ++i) {
      if (i + cfg.k_recent > pl.steps.size()) recent.insert(i);
    }
    if (oracle_cost(pl, recent) <= rs.plan.budget_B && rs.plan.budget_used > rs.plan.budget_B) ++violations;
  }
  return {violations == 0 && checked >= 1000,
          "10000 draws (" + std::to_string(checked) + " with floor <= B, " + std::to_string(over_floor) +
              " floor over budget), " + std::to_string(violations) + " violations"};
}

Outcome rendering_goldens() {
  struct Case {
    const char* sample;
    const char* golden;
    const char* keyword;
    std::set<std::size_t> kept;
  };
  const std::string root = AGORA_SOURCE_DIR;
  std::vector<Case> cases = {
      {"/samples/webshop_step7.jsonl", "/tests/fixtures/golden/webshop_steps.txt", "country", {2, 5, 6}},
      {"/samples/scienceworld_step9.jsonl", "/tests/fixtures/golden/scienceworld_steps.txt", "from cupboard", {2, 7, 8}},
  };
  std::string detail;
  bool ok = true;
  for (const auto& c : cases) {
    auto golden = read_file(root + c.golden);
    auto traj = read_trajectories(root + c.sample, RecordSchema::RawPrompt).at(0);
    auto ctx = group_context(traj.blocks);

    CompressionPlan plan;
    plan.kept_indices = c.kept;
    plan.elision_spans = elision_spans(c.kept, ctx.num_steps());
    bool direct = render_step_section(ctx, plan) == golden;

    CompressionConfig cfg;
    KeywordScorer scorer({c.keyword});
    auto full = compress(ctx, scorer, cfg, RenderStyle::Transcript);
    bool via_pipeline = full.plan.kept_indices == c.kept && full.rendered.size() >= golden.size() &&
                        full.rendered.compare(full.rendered.size() - golden.size(), golden.size(), golden) == 0;
    ok = ok && direct && via_pipeline;
    detail += std::string(detail.empty() ? "" : "; ") + traj.task_id + (direct && via_pipeline ? " bit-exact" : " MISMATCH");
  }
  bool marker = elision_marker({3, 4}) == "[Steps 3–4] (2 step(s) elided)";
  return {ok && marker, detail + (marker ? "; marker text exact" : "; marker text MISMATCH")};
}

Outcome cost_formula() {
  auto prices = PriceTable::defaults();
  bool exact = cost_per_task(1e6, 0, prices, "gpt-4o-mini") == 0.75 &&
               cost_per_task(1e6, 1e6, prices, "gpt-5-mini") == 11.25;
  std::mt19937_64 rng(606);
  std::uniform_real_distribution<double> tok(0, 5e6);
  const char* names[] = {"qwen3.5-flash", "gpt-4o-mini", "gpt-5-mini"};
  std::size_t bad = 0;
  for (int i = 0; i < 1000; ++i) {
    const char* b = names[rng() % 3];
    double i1 = tok(rng), o1 = tok(rng), i2 = tok(rng), o2 = tok(rng);
    double k = std::uniform_real_distribution<double>(0, 10)(rng);
    double sum = cost_per_task(i1 + i2, o1 + o2, prices, b);
    double parts = cost_per_task(i1, o1, prices, b) + cost_per_task(i2, o2, prices, b);
    double scaled = cost_per_task(k * i1, k * o1, prices, b);
    auto close = [](double x, double y) { return std::abs(x - y) <= 1e-12 * std::max(1.0, std::abs(y)); };
    const auto& pr = prices.at(b);
    double direct = (i1 * pr.in + o1 * pr.out) / 1e6;
    if (!close(sum, parts) || !close(scaled, k * cost_per_task(i1, o1, prices, b)) ||
        !close(cost_per_task(i1, o1, prices, b), direct)) {
        ++bad;
    }
  }
  return {exact && bad == 0, std::string("0.75 and 11.25 ") + (exact ? "exact" : "WRONG") +
                                 "; linearity on 1000 draws, " + std::to_string(bad) + " failures"};
}

Outcome eff_ratio_estimator() {
  using testkit::log_record;
  std::vector<TaskLogRecord> nocomp = {log_record("a", "nocomp", {120, 80}), log_record("b", "nocomp", {4000})};
  std::vector<TaskLogRecord> method = {log_record("a", "agora", {100}), log_record("b", "agora", {1000})};
  double per_task = eff_ratio(method, nocomp);
  double aggregate = aggregate_ratio(method, nocomp);
  char buf[128];
  std::snprintf(buf, sizeof buf, "per-task mean %.15g, aggregate %.6g", per_task, aggregate);
  return {std::abs(per_task - 3.0) <= 1e-12 && std::abs(aggregate - 3.0) > 1e-6, buf};
}

Outcome audit_fault_injection() {
  auto episode = [](const std::string& id, const std::string& method, std::vector<std::string> actions,
                    std::int64_t tin) {
    auto r = testkit::log_record(id, method, {tin}, {4}, 1.0);
    r.system_prompt = "You are an agent.";
    r.observations = {"Your task: " + id};
    for (std::size_t i = 0; i < actions.size(); ++i) r.observations.push_back("obs " + std::to_string(i));
    r.actions = std::move(actions);
    r.step_rewards.assign(r.actions.size(), 0.0);
    return r;
  };
  // Clean base: 5 tasks under nocomp and a method realizing exactly 4x.
  std::vector<TaskLogRecord> clean;
  for (int i = 0; i < 5; ++i) {
    std::string id = "task-" + std::to_string(i);
    clean.push_back(episode(id, "nocomp", {"go to desk " + std::to_string(i), "take pen"}, 800));
    clean.push_back(episode(id, "agora", {"go to desk " + std::to_string(i), "take pen"}, 200));
  }
  const std::set<std::string> train = {"train-0", "train-1"};
  const double nominal = 4.0;

  int correct = 0;
  std::string detail;
  auto scenario = [&](const std::string& name, bool ok) {
    correct += ok;
    if (!ok) detail += " " + name + "-wrong";
  };

  // (i) disjointness
  scenario("disjoint-clean", audit(clean, train, nominal).disjoint);
  scenario("disjoint-planted", !audit(clean, {"task-3"}, nominal).disjoint &&
                                   audit(clean, {"task-3"}, nominal).overlapping_ids ==
                                       std::vector<std::string>{"task-3"});
  // (ii) duplicate hash: task-1's trajectory copied under task-2's id.
  scenario("duplicate-clean", audit(clean, train, nominal).duplicate_hashes.empty());
  auto dup = clean;
  dup[4] = dup[2];
  dup[4].task_id = "task-2";
  auto dup_rep = audit(dup, train, std::nullopt);
  scenario("duplicate-planted", dup_rep.duplicate_hashes.size() == 1 &&
                                    dup_rep.duplicate_hashes[0].task_ids ==
                                        std::vector<std::string>{"task-1", "task-2"});
  // (iii) ratio drift: realized 10x vs nominal 4x is 2.5x the nominal.
  auto drift_clean = audit(clean, train, nominal).ratio_drift;
  scenario("drift-clean", drift_clean.size() == 1 && !drift_clean[0].flagged);
  auto drift = clean;
  for (auto& r : drift) {
    if (r.method == "agora") r.token_in = {80};
  }
  auto drift_rep = audit(drift, train, nominal).ratio_drift;
  scenario("drift-planted", drift_rep.size() == 1 && drift_rep[0].flagged &&
                                std::abs(drift_rep[0].realized / nominal - 2.5) < 1e-12);
  // (iv) five identical actions in a row.
  scenario("loop-clean", audit(clean, train, nominal).loops.empty());
  auto loop = clean;
  loop[1].actions = {"look", "look", "look", "look", "look", "take pen"};
  loop[1].observations.resize(7, "obs");
  auto loop_rep = audit(loop, train, std::nullopt).loops;
  scenario("loop-planted", loop_rep.size() == 1 && loop_rep[0].run_length == 5);

  return {correct == 8, std::to_string(correct) + "/8 scenarios correct" + detail};
}

Outcome jaccard_brute_force() {
  std::mt19937_64 rng(909);
  std::size_t bad = 0;
  for (int c = 0; c < 10000; ++c) {
    std::uint64_t ma = 0, mb = 0;
    std::set<std::size_t> a, b;
    for (std::size_t k = 0; k < 40; ++k) {
      if (rng() % 4 == 0) {
        a.insert(k);
        ma |= 1ULL << k;
      }
      if (rng() % 4 == 0) {
        b.insert(k);
        mb |= 1ULL << k;
      }
    }
    if (c % 50 == 0) {
      a.clear();
      ma = 0;
    }
    int inter = 0, uni = 0;
    for (int k = 0; k < 64; ++k) {
      bool x = (ma >> k) & 1, y = (mb >> k) & 1;
      inter += x && y;
      uni += x || y;
    }
    double want = uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
    if (jaccard_overlap(a, b) != want || jaccard_overlap(b, a) != want) ++bad;
  }
  bool example = jaccard_overlap<int>({2, 5, 6}, {5, 6}) == 2.0 / 3.0;
  return {bad == 0 && example, "10000 random pairs, " + std::to_string(bad) + " mismatches; {2,5,6} vs {5,6} = " +
                                   (example ? "2/3" : "WRONG")};
}

Outcome statistics() {
  std::vector<double> constant(30, 0.7);
  auto ci = bootstrap_ci(constant, 10000, 0.95, 5);
  bool collapse = ci.low == 0.7 && ci.high == 0.7;

  std::vector<double> bern;
  std::mt19937_64 rng(17);
  for (int i = 0; i < 30; ++i) bern.push_back(static_cast<double>(rng() % 2));
  auto r1 = bootstrap_ci(bern, 10000, 0.95, 123);
  auto r2 = bootstrap_ci(bern, 10000, 0.95, 123);
  bool repro = r1.low == r2.low && r1.high == r2.high;

  bool wilcoxon = wilcoxon_signed_rank(bern, bern).p_value == 1.0;
  auto holm = holm_adjust(std::vector<double>{0.01, 0.04});
  bool holm_ok = std::abs(holm[0] - 0.02) < 1e-15 && std::abs(holm[1] - 0.04) < 1e-15;

  std::string d = std::string("constant CI collapses: ") + (collapse ? "yes" : "NO") +
                  "; seeded CI reproducible: " + (repro ? "yes" : "NO") +
                  "; Wilcoxon identical p=1: " + (wilcoxon ? "yes" : "NO") +
                  "; Holm {.01,.04} -> {.02,.04}: " + (holm_ok ? "yes" : "NO");
  return {collapse && repro && wilcoxon && holm_ok, d};
}

Outcome simulated_environment() {
  CompressionConfig cfg;
  auto mr = [&](const std::string& method, const Scorer& scorer) {
    auto logs = simulate({}, 50, parse_method(method, cfg.rho, 7), scorer, cfg, 7);
    double s = 0;
    for (const auto& t : logs) s += *t.final_reward;
    return s / static_cast<double>(logs.size());
  };
  LexicalScorer lexical;
  KeywordScorer critical({"note"});
  double nocomp = mr("nocomp", lexical);
  double floor0 = mr("floor-k0", lexical);
  double agora = mr("agora", critical);
  char buf[160];
  std::snprintf(buf, sizeof buf, "50 tasks: NoComp %.2f, FloorK(0) %.2f, AGORA (critical step p > theta_hi) %.2f",
                nocomp, floor0, agora);
  return {nocomp == 1.0 && floor0 == 0.0 && agora == 1.0, buf};
}

}  // namespace

int main() {
  report("parser-losslessness", parser_losslessness);
  report("floor-invariance", floor_invariance);
  report("greedy-oracle-equivalence", greedy_oracle);
  report("budget-soundness", budget_soundness);
  report("rendering-goldens", rendering_goldens);
  report("cost-formula", cost_formula);
  report("eff-ratio-estimator", eff_ratio_estimator);
  report("audit-fault-injection", audit_fault_injection);
  report("jaccard", jaccard_brute_force);
  report("statistics", statistics);
  report("simulated-environment", simulated_environment);
  std::printf("%d of 11 criteria failed\n", g_failed);
  return g_failed == 0 ? 0 : 1;
}

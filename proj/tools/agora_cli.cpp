// agora: command-line front end for the trajectory compressor.
//
// Exit codes: 0 clean, 1 usage or I/O error, 2 audit findings.
// stdout carries data only; diagnostics go to stderr.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "agora/agora.hpp"

namespace {

using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitFindings = 2;

struct Options {
  std::string input = "-";
  std::string output = "-";
  std::string method = "agora";
  std::string scorer = "lexical";
  std::string atom_rules = "default";
  std::string render = "prompt";
  std::string schema = "raw_prompt";
  agora::CompressionConfig cfg;
  std::string other;  // jaccard: second replay file
  // audit
  std::string train_ids;
  std::optional<double> nominal;
  std::size_t chunk = 5;
  // metrics
  std::string prices;
  std::string format = "csv";
  std::size_t resamples = 10000;
  // simulate
  std::size_t n_tasks = 20;
  std::size_t min_steps = 6;
  std::size_t max_steps = 12;
  bool as_log = false;
};

// Opens `path` for reading, "-" meaning stdin.
class Input {
 public:
  explicit Input(const std::string& path) {
    if (path == "-") return;
    file_ = std::make_unique<std::ifstream>(path);
    if (!*file_) throw agora::IoError(path, "cannot open for reading");
  }
  std::istream& get() { return file_ ? *file_ : std::cin; }

 private:
  std::unique_ptr<std::ifstream> file_;
};

class Output {
 public:
  explicit Output(const std::string& path) : path_(path) {
    if (path == "-") return;
    file_ = std::make_unique<std::ofstream>(path);
    if (!*file_) throw agora::IoError(path, "cannot open for writing");
  }
  std::ostream& get() { return file_ ? *file_ : std::cout; }
  void close() {
    get().flush();
    if (!get()) throw agora::IoError(path_, "write failed");
  }

 private:
  std::string path_;
  std::unique_ptr<std::ofstream> file_;
};

agora::RecordSchema parse_schema(const std::string& s) {
  if (s == "raw_prompt") return agora::RecordSchema::RawPrompt;
  if (s == "eval_log") return agora::RecordSchema::EvalLog;
  throw agora::ConfigError("unknown schema '" + s + "'");
}

agora::RenderStyle parse_render(const std::string& s) {
  if (s == "prompt") return agora::RenderStyle::Prompt;
  if (s == "transcript") return agora::RenderStyle::Transcript;
  throw agora::ConfigError("unknown render style '" + s + "'");
}

json indices(const std::set<std::size_t>& s) { return json(std::vector<std::size_t>(s.begin(), s.end())); }

json plan_to_json(const agora::CompressionPlan& p) {
  json spans = json::array();
  for (const auto& s : p.elision_spans) spans.push_back({s.first, s.last});
  json scores = json::array();
  for (const auto& s : p.scores) scores.push_back({{"step", s.step_index}, {"p", s.p}});
  return {{"floor", indices(p.floor_indices)}, {"kept", indices(p.kept_indices)},
          {"masked", indices(p.masked_indices)}, {"scores", scores},
          {"budget_B", p.budget_B},          {"budget_used", p.budget_used},
          {"elided", spans}};
}

// Runs `fn` over each non-blank line, collecting per-line errors. Returns the
// number of failed lines.
template <typename Fn>
std::size_t for_each_record(std::istream& in, Fn&& fn) {
  std::size_t lineno = 0;
  std::size_t failed = 0;
  for (std::string line; std::getline(in, line);) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      json j;
      try {
        j = json::parse(line);
      } catch (const json::parse_error& e) {
        throw agora::ParseError(lineno, e.what());
      }
      fn(j, lineno);
    } catch (const agora::ParseError& e) {
      ++failed;
      std::cerr << "agora: " << e.what() << "\n";
    } catch (const agora::SchemaError& e) {
      ++failed;
      std::cerr << "agora: " << e.what() << "\n";
    } catch (const agora::Error& e) {
      ++failed;
      std::cerr << "agora: line " << lineno << ": " << e.what() << "\n";
    }
  }
  return failed;
}

struct Engine {
  agora::Method method;
  std::unique_ptr<agora::Scorer> scorer;
  agora::AtomRuleSet rules;
  agora::CompressionConfig cfg;
  agora::RenderStyle style;
};

Engine make_engine(const Options& o) {
  o.cfg.validate();
  return {agora::parse_method(o.method, o.cfg.rho, o.cfg.seed), agora::make_scorer(o.scorer),
          agora::load_atom_rules(o.atom_rules), o.cfg, parse_render(o.render)};
}

int cmd_compress(const Options& o) {
  auto eng = make_engine(o);
  auto schema = parse_schema(o.schema);
  Input in(o.input);
  Output out(o.output);
  auto failed = for_each_record(in.get(), [&](const json& j, std::size_t lineno) {
    auto t = agora::trajectory_from_json(j, schema, lineno);
    auto ctx = agora::group_context(t.blocks, eng.rules);
    auto cc = agora::apply_method(ctx, eng.method, *eng.scorer, eng.cfg, eng.style, t.task_id);
    json rec{{"task_id", t.task_id},
             {"method", agora::method_name(eng.method)},
             {"rendered", cc.rendered},
             {"realized_ratio", cc.realized_ratio},
             {"plan", plan_to_json(cc.plan)}};
    out.get() << rec.dump() << '\n';
  });
  out.close();
  return failed ? kExitError : kExitOk;
}

int cmd_score(const Options& o) {
  auto scorer = agora::make_scorer(o.scorer);
  auto rules = agora::load_atom_rules(o.atom_rules);
  auto schema = parse_schema(o.schema);
  Input in(o.input);
  Output out(o.output);
  auto failed = for_each_record(in.get(), [&](const json& j, std::size_t lineno) {
    auto t = agora::trajectory_from_json(j, schema, lineno);
    auto ctx = agora::group_context(t.blocks, rules);
    json scores = json::array();
    for (const auto& s : agora::score_steps(*scorer, ctx.c_now.text, ctx.past_steps)) {
      scores.push_back({{"step", s.step_index}, {"p", s.p}});
    }
    out.get() << json{{"task_id", t.task_id}, {"scorer", scorer->name()}, {"scores", scores}}.dump() << '\n';
  });
  out.close();
  return failed ? kExitError : kExitOk;
}

// Re-runs a method over every agent call of logged episodes. A call is the
// prompt prefix ending at each User block after the task.
int cmd_replay(const Options& o) {
  auto eng = make_engine(o);
  Input in(o.input);
  Output out(o.output);
  auto failed = for_each_record(in.get(), [&](const json& j, std::size_t lineno) {
    auto t = agora::trajectory_from_json(j, agora::RecordSchema::EvalLog, lineno);
    std::vector<std::int64_t> tin;
    std::size_t call = 0;
    for (std::size_t end = 1; end <= t.blocks.size(); ++end) {
      if (t.blocks[end - 1].role != agora::Role::User) continue;
      std::vector<agora::RoleBlock> prefix(t.blocks.begin(), t.blocks.begin() + static_cast<std::ptrdiff_t>(end));
      auto ctx = agora::group_context(prefix, eng.rules);
      auto cc = agora::apply_method(ctx, eng.method, *eng.scorer, eng.cfg, eng.style, t.task_id);
      ++call;
      auto tokens = agora::whitespace_tokens(cc.rendered);
      tin.push_back(tokens);
      if (o.as_log) continue;
      json rec{{"task_id", t.task_id},
               {"call", call},
               {"method", agora::method_name(eng.method)},
               {"num_steps", ctx.num_steps()},
               {"kept", indices(cc.plan.kept_indices)},
               {"retained", indices(agora::retained_indices(cc.plan))},
               {"chars_in", ctx.total_char_len},
               {"chars_out", agora::utf8::length(cc.rendered)},
               {"tokens_out", tokens},
               {"realized_ratio", cc.realized_ratio}};
      out.get() << rec.dump() << '\n';
    }
    if (o.as_log) {
      t.method = agora::method_name(eng.method);
      t.token_in = tin;
      out.get() << agora::trajectory_to_json(t).dump() << '\n';
    }
  });
  out.close();
  return failed ? kExitError : kExitOk;
}

std::vector<agora::TaskLogRecord> read_logs(const std::string& path) {
  Input in(path);
  std::vector<agora::TaskLogRecord> logs;
  for (const auto& t : agora::read_trajectories(in.get(), agora::RecordSchema::EvalLog)) {
    logs.push_back(agora::to_log_record(t));
  }
  return logs;
}

int cmd_audit(const Options& o) {
  auto logs = read_logs(o.input);
  std::set<std::string> train;
  if (!o.train_ids.empty()) {
    std::ifstream f(o.train_ids);
    if (!f) throw agora::IoError(o.train_ids, "cannot open for reading");
    for (std::string line; std::getline(f, line);) {
      auto t = agora::detail::trim(line);
      if (!t.empty()) train.emplace(t);
    }
  }
  agora::AuditOptions opt;
  opt.chunk_size = o.chunk;
  auto rep = agora::audit(logs, train, o.nominal, opt);
  Output out(o.output);
  out.get() << agora::audit_to_json(rep).dump(2) << '\n';
  out.close();
  if (rep.blocking()) std::cerr << "agora: audit: eval/train task ids overlap (blocking)\n";
  return rep.has_findings() ? kExitFindings : kExitOk;
}

int cmd_metrics(const Options& o) {
  auto logs = read_logs(o.input);
  auto prices = o.prices.empty() ? agora::PriceTable::defaults() : agora::load_price_table(o.prices);
  agora::MetricsOptions opt;
  opt.resamples = o.resamples;
  opt.seed = o.cfg.seed;
  auto rows = agora::compute_cell_metrics(logs, prices, opt);
  Output out(o.output);
  if (o.format == "json") {
    out.get() << agora::metrics_to_json(rows).dump(2) << '\n';
  } else {
    out.get() << agora::metrics_to_csv(rows);
  }
  out.close();
  return kExitOk;
}

// Mean Jaccard of retained step sets over calls present in both replay files.
int cmd_jaccard(const Options& o) {
  auto load = [](const std::string& path) {
    std::map<std::pair<std::string, std::size_t>, std::set<std::size_t>> m;
    Input in(path);
    for_each_record(in.get(), [&](const json& j, std::size_t lineno) {
      try {
        auto key = std::make_pair(j.at("task_id").get<std::string>(), j.at("call").get<std::size_t>());
        auto v = j.at("retained").get<std::vector<std::size_t>>();
        m[key] = std::set<std::size_t>(v.begin(), v.end());
      } catch (const json::exception& e) {
        throw agora::SchemaError(lineno, "retained", e.what());
      }
    });
    return m;
  };
  auto a = load(o.input);
  auto b = load(o.other);
  std::vector<std::pair<std::set<std::size_t>, std::set<std::size_t>>> pairs;
  for (const auto& [key, sa] : a) {
    auto it = b.find(key);
    if (it != b.end()) pairs.emplace_back(sa, it->second);
  }
  if (pairs.empty()) throw agora::PairingError("", "no (task_id, call) pairs shared by both inputs");
  double mean = agora::mean_jaccard<std::size_t>(pairs);
  Output out(o.output);
  out.get() << json{{"pairs", pairs.size()}, {"mean_jaccard", mean}}.dump() << '\n';
  out.close();
  return kExitOk;
}

int cmd_simulate(const Options& o) {
  o.cfg.validate();
  auto method = agora::parse_method(o.method, o.cfg.rho, o.cfg.seed);
  auto scorer = agora::make_scorer(o.scorer);
  agora::SimEnvSpec spec;
  spec.min_steps = o.min_steps;
  spec.max_steps = o.max_steps;
  auto logs = agora::simulate(spec, o.n_tasks, method, *scorer, o.cfg, o.cfg.seed);
  Output out(o.output);
  agora::write_trajectories(logs, out.get());
  out.close();
  return kExitOk;
}

void add_io(CLI::App* sub, Options& o) {
  sub->add_option("-i,--input", o.input, "Input JSONL ('-' for stdin)");
  sub->add_option("-o,--output", o.output, "Output path ('-' for stdout)");
}

void add_engine(CLI::App* sub, Options& o) {
  sub->add_option("--rho", o.cfg.rho, "Target keep ratio");
  sub->add_option("--k-recent", o.cfg.k_recent, "Most recent steps always kept");
  sub->add_option("--theta-hi", o.cfg.theta_hi, "Scores above this are always kept");
  sub->add_option("--seed", o.cfg.seed, "Seed for randomized methods");
  sub->add_option("--method", o.method,
                  "agora | nocomp | floor-k<K> | obsmask[:K] | random-step[:RHO] | truncate-<N>");
  sub->add_option("--scorer", o.scorer, "lexical | keyword:w1,w2 | portable:<dir>");
  sub->add_option("--atom-rules", o.atom_rules, "default | alfworld | webshop | scienceworld | <file.json>");
  sub->add_option("--render", o.render, "prompt | transcript")->check(CLI::IsMember({"prompt", "transcript"}));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Step-level compressor for agent trajectory prompts"};
  app.require_subcommand(1);
  Options o;

  auto* compress = app.add_subcommand("compress", "Compress prompts; one record with rendering and plan per input");
  add_io(compress, o);
  add_engine(compress, o);
  compress->add_option("--schema", o.schema, "raw_prompt | eval_log")
      ->check(CLI::IsMember({"raw_prompt", "eval_log"}));

  auto* score = app.add_subcommand("score", "Score each past step against the current observation");
  add_io(score, o);
  score->add_option("--scorer", o.scorer, "lexical | keyword:w1,w2 | portable:<dir>");
  score->add_option("--atom-rules", o.atom_rules, "Atom rule set name or JSON file");
  score->add_option("--schema", o.schema, "raw_prompt | eval_log")
      ->check(CLI::IsMember({"raw_prompt", "eval_log"}));

  auto* replay = app.add_subcommand("replay", "Replay logged episodes call by call under a method");
  add_io(replay, o);
  add_engine(replay, o);
  replay->add_flag("--as-log", o.as_log, "Emit eval logs with token_in recomputed instead of per-call records");

  auto* audit = app.add_subcommand("audit", "Run data-integrity audits over eval logs");
  add_io(audit, o);
  audit->add_option("--train-ids", o.train_ids, "File with one training task id per line");
  audit->add_option("--nominal", o.nominal, "Nominal compression ratio for the drift check");
  audit->add_option("--chunk", o.chunk, "Tasks per duplicate-hash chunk")->check(CLI::PositiveNumber);

  auto* metrics = app.add_subcommand("metrics", "Per-cell reward, Eff.x and cost");
  add_io(metrics, o);
  metrics->add_option("--prices", o.prices, "Price table JSON (merged over defaults)");
  metrics->add_option("--format", o.format, "csv | json")->check(CLI::IsMember({"csv", "json"}));
  metrics->add_option("--seed", o.cfg.seed, "Bootstrap seed");
  metrics->add_option("--resamples", o.resamples, "Bootstrap resamples")->check(CLI::PositiveNumber);

  auto* jaccard = app.add_subcommand("jaccard", "Mean retained-step overlap between two replay outputs");
  jaccard->add_option("-a", o.input, "First replay JSONL")->required();
  jaccard->add_option("-b", o.other, "Second replay JSONL")->required();
  jaccard->add_option("-o,--output", o.output, "Output path");

  auto* simulate = app.add_subcommand("simulate", "Generate eval logs from the planted-critical synthetic env");
  simulate->add_option("-o,--output", o.output, "Output path");
  add_engine(simulate, o);
  simulate->add_option("--n-tasks", o.n_tasks, "Number of tasks");
  simulate->add_option("--min-steps", o.min_steps, "Shortest episode");
  simulate->add_option("--max-steps", o.max_steps, "Longest episode");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitError;
  }

  try {
    if (*compress) return cmd_compress(o);
    if (*score) return cmd_score(o);
    if (*replay) return cmd_replay(o);
    if (*audit) return cmd_audit(o);
    if (*metrics) return cmd_metrics(o);
    if (*jaccard) return cmd_jaccard(o);
    if (*simulate) return cmd_simulate(o);
  } catch (const agora::Error& e) {
    std::cerr << "agora: " << e.what() << "\n";
    return kExitError;
  } catch (const std::exception& e) {
    std::cerr << "agora: unexpected error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}

#include <gtest/gtest.h>

#include "test_support.hpp"

using namespace agora;
using testkit::make_prompt;
using testkit::scores_of;
using testkit::step_of_len;

namespace {

ParsedContext numbered(std::size_t n) {
  std::vector<testkit::StepText> steps;
  for (std::size_t i = 1; i <= n; ++i) steps.push_back({"a" + std::to_string(i), "o" + std::to_string(i)});
  return parse_prompt(make_prompt("sys", "task", steps));
}

CompressionPlan keep(const ParsedContext& ctx, std::set<std::size_t> kept) {
  CompressionPlan p;
  p.kept_indices = std::move(kept);
  p.elision_spans = elision_spans(p.kept_indices, ctx.num_steps());
  return p;
}

}  // namespace

TEST(Floor, RecentWindowOnly) {
  auto ctx = numbered(6);
  auto f = compute_floor(ctx, scores_of({0.1, 0.9, 0.5, 0.2, 0.3, 0.0}), {});
  EXPECT_EQ(f.steps, (std::set<std::size_t>{5, 6}));
  EXPECT_EQ(f.components, (std::vector<Component>{Component::System, Component::Task, Component::Now}));
}

TEST(Floor, FewerStepsThanWindow) {
  auto ctx = numbered(1);
  EXPECT_EQ(compute_floor(ctx, scores_of({0.0}), {}).steps, (std::set<std::size_t>{1}));
  auto empty = numbered(0);
  EXPECT_TRUE(compute_floor(empty, {}, {}).steps.empty());
}

TEST(Floor, HighScoreForced) {
  auto ctx = numbered(4);
  EXPECT_EQ(compute_floor(ctx, scores_of({0.95, 0.1, 0.1, 0.1}), {}).steps, (std::set<std::size_t>{1, 3, 4}));
  // Strictly greater than theta_hi.
  EXPECT_EQ(compute_floor(ctx, scores_of({0.9, 0.1, 0.1, 0.1}), {}).steps, (std::set<std::size_t>{3, 4}));
}

TEST(Floor, PendingIsAComponent) {
  auto ctx = parse_prompt(make_prompt("s", "t", {{"a", "o"}}, "thinking"));
  auto f = compute_floor(ctx, scores_of({0.0}), {});
  EXPECT_EQ(f.components.back(), Component::Pending);
}

TEST(Floor, ScoreCountMismatchRejected) {
  auto ctx = numbered(3);
  EXPECT_THROW(compute_floor(ctx, scores_of({0.1}), {}), ConfigError);
}

TEST(Greedy, ResidualHundredKeepsFirstAndThird) {
  auto ctx = parse_prompt(make_prompt("system", "task",
                                      {step_of_len(60, 'a'), step_of_len(50, 'b'), step_of_len(30, 'c'),
                                       step_of_len(40, 'd'), step_of_len(45, 'e')}));
  ASSERT_EQ(ctx.step_cost(1), 60u);
  ASSERT_EQ(ctx.step_cost(2), 50u);
  ASSERT_EQ(ctx.step_cost(3), 30u);
  auto scores = scores_of({0.8, 0.7, 0.6, 0.1, 0.1});
  CompressionConfig cfg;
  auto floor = compute_floor(ctx, scores, cfg);
  ASSERT_EQ(floor.steps, (std::set<std::size_t>{4, 5}));
  std::size_t floor_cost = ctx.format_cost() + ctx.step_cost(4) + ctx.step_cost(5);
  cfg.rho = (static_cast<double>(floor_cost) + 100.5) / static_cast<double>(ctx.total_char_len);
  ASSERT_EQ(budget_for(ctx, cfg.rho), floor_cost + 100);

  auto plan = greedy_fill(ctx, scores, floor, cfg);
  EXPECT_EQ(plan.kept_indices, (std::set<std::size_t>{1, 3, 4, 5}));
  EXPECT_EQ(plan.budget_used, floor_cost + 90);
  EXPECT_EQ(plan.floor_indices, floor.steps);
}

TEST(Greedy, FloorOverBudgetKeepsFloorExactly) {
  auto ctx = numbered(6);
  CompressionConfig cfg;
  cfg.rho = 0.01;
  auto scores = scores_of({0.5, 0.5, 0.95, 0.5, 0.5, 0.5});
  auto floor = compute_floor(ctx, scores, cfg);
  auto plan = greedy_fill(ctx, scores, floor, cfg);
  EXPECT_EQ(plan.kept_indices, floor.steps);
  EXPECT_GT(plan.budget_used, plan.budget_B);
}

TEST(Greedy, AllStepsInFloor) {
  auto ctx = numbered(3);
  CompressionConfig cfg;
  cfg.k_recent = 5;
  auto scores = scores_of({0.1, 0.2, 0.3});
  auto plan = greedy_fill(ctx, scores, compute_floor(ctx, scores, cfg), cfg);
  EXPECT_EQ(plan.kept_indices, (std::set<std::size_t>{1, 2, 3}));
  EXPECT_TRUE(plan.elision_spans.empty());
}

TEST(Greedy, TiesPreferLaterStep) {
  auto ctx = parse_prompt(make_prompt("s", "t", {step_of_len(40), step_of_len(40), step_of_len(20), step_of_len(20)}));
  CompressionConfig cfg;
  cfg.k_recent = 1;
  auto scores = scores_of({0.5, 0.5, 0.1, 0.1});
  auto floor = compute_floor(ctx, scores, cfg);
  std::size_t base = ctx.format_cost() + ctx.step_cost(4);
  cfg.rho = (static_cast<double>(base) + 40.5) / static_cast<double>(ctx.total_char_len);
  auto plan = greedy_fill(ctx, scores, floor, cfg);
  EXPECT_EQ(plan.kept_indices, (std::set<std::size_t>{2, 4}));
}

TEST(Greedy, InvalidConfigRejected) {
  auto ctx = numbered(2);
  CompressionConfig cfg;
  cfg.rho = 0.0;
  EXPECT_THROW(greedy_fill(ctx, scores_of({0.1, 0.1}), {}, cfg), ConfigError);
  cfg.rho = 0.5;
  cfg.theta_hi = 1.5;
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(Markers, Text) {
  EXPECT_EQ(elision_marker({1, 1}), "[Step 1] (elided)");
  EXPECT_EQ(elision_marker({3, 4}), "[Steps 3–4] (2 step(s) elided)");
}

TEST(Markers, SpansMergeRuns) {
  EXPECT_EQ(elision_spans({2, 5, 6}, 6), (std::vector<ElisionSpan>{{1, 1}, {3, 4}}));
  EXPECT_EQ(elision_spans({6, 7}, 7), (std::vector<ElisionSpan>{{1, 5}}));
  EXPECT_TRUE(elision_spans({1, 2}, 2).empty());
  EXPECT_EQ(elision_spans({}, 3), (std::vector<ElisionSpan>{{1, 3}}));
}

TEST(Render, KeepTwoFiveSixOfSix) {
  auto ctx = numbered(6);
  auto out = render(ctx, keep(ctx, {2, 5, 6}));
  EXPECT_EQ(out.rendered,
            "[SYSTEM]sys[USER]task[Step 1] (elided)\n[ASSISTANT]a2[USER]o2[Steps 3–4] (2 step(s) elided)\n"
            "[ASSISTANT]a5[USER]o5[ASSISTANT]a6[USER]o6");
  auto section = render_step_section(ctx, keep(ctx, {2, 5, 6}));
  EXPECT_EQ(section,
            "[Step 1] (elided)\n[Step 2] Action: a2\n         Obs: o2\n[Steps 3–4] (2 step(s) elided)\n"
            "[Step 5] Action: a5\n         Obs: o5\n[Step 6] Action: a6\n         Obs: o6");
}

TEST(Render, KeepAllEqualsReassembly) {
  auto prompt = make_prompt("sys", "task", {{"a1", "o1"}, {"a2", "o2"}}, "pending");
  auto ctx = parse_prompt(prompt);
  auto out = render(ctx, keep(ctx, {1, 2}));
  EXPECT_EQ(out.rendered, prompt);
  EXPECT_DOUBLE_EQ(out.realized_ratio, 1.0);
}

TEST(Render, SevenStepsFloorSixSeven) {
  auto ctx = numbered(7);
  auto out = render(ctx, keep(ctx, {6, 7}));
  EXPECT_NE(out.rendered.find("[Steps 1–5] (5 step(s) elided)\n[ASSISTANT]a6"), std::string::npos);
  EXPECT_EQ(out.rendered.find("[Step 1]"), std::string::npos);
}

TEST(Render, CurrentObservationSurvivesWhenStepNDropped) {
  auto ctx = numbered(3);
  auto out = render(ctx, keep(ctx, {1}));
  EXPECT_EQ(out.rendered, "[SYSTEM]sys[USER]task[ASSISTANT]a1[USER]o1[Steps 2–3] (2 step(s) elided)\n[USER]o3");
  auto tr = render(ctx, keep(ctx, {1}), RenderStyle::Transcript);
  EXPECT_EQ(tr.rendered, "sys\ntask\n[Step 1] Action: a1\n         Obs: o1\n[Steps 2–3] (2 step(s) elided)\no3");
}

TEST(Render, TranscriptOmitsEmptySystemAndAddsPending) {
  auto ctx = parse_prompt("[USER]task[ASSISTANT]a1[USER]o1[ASSISTANT]next");
  auto tr = render(ctx, keep(ctx, {1}), RenderStyle::Transcript);
  EXPECT_EQ(tr.rendered, "task\n[Step 1] Action: a1\n         Obs: o1\nnext");
}

TEST(Render, WideStepNumbersPadToHeader) {
  auto ctx = numbered(10);
  auto section = render_step_section(ctx, keep(ctx, {10}));
  EXPECT_EQ(section, "[Steps 1–9] (9 step(s) elided)\n[Step 10] Action: a10\n          Obs: o10");
}

TEST(Render, RealizedRatio) {
  EXPECT_DOUBLE_EQ(realized_ratio(100, std::string(25, 'x')), 4.0);
  EXPECT_DOUBLE_EQ(realized_ratio(0, ""), 1.0);
}

TEST(Compress, EqualsComposedStages) {
  auto ctx = parse_prompt(make_prompt("You are an agent.", "find the apple",
                                      {{"go to desk 1", "you see a pen"},
                                       {"go to fridge 1", "the fridge has an apple"},
                                       {"go to shelf 2", "you see a book"},
                                       {"open fridge 1", "you see an apple and milk"},
                                       {"look", "you are in the kitchen near the apple"}}));
  LexicalScorer scorer;
  CompressionConfig cfg;
  cfg.rho = 0.6;
  for (auto style : {RenderStyle::Prompt, RenderStyle::Transcript}) {
    auto got = compress(ctx, scorer, cfg, style);
    auto scores = score_steps(scorer, ctx.c_now.text, ctx.past_steps);
    auto plan = greedy_fill(ctx, scores, compute_floor(ctx, scores, cfg), cfg);
    auto want = render(ctx, plan, style);
    EXPECT_EQ(got.rendered, want.rendered);
    EXPECT_EQ(got.plan.kept_indices, want.plan.kept_indices);
    EXPECT_EQ(got.plan.scores, scores);
  }
}

TEST(Compress, StepZeroPromptUnchanged) {
  auto prompt = make_prompt("sys", "task", {});
  auto out = compress(parse_prompt(prompt), LexicalScorer{}, {});
  EXPECT_EQ(out.rendered, prompt);
  EXPECT_EQ(out.plan.budget_used, utf8::length(prompt));
}

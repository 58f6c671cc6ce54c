#include <gtest/gtest.h>

#include <set>

#include "lynceus/optimizer.hpp"
#include "lynceus/synthetic.hpp"
#include "toy.hpp"

using namespace lynceus;

namespace {

const Dataset& synthetic() {
  static const Dataset d = generate_synthetic(SyntheticSpec::table_shaped(), 1);
  return d;
}

double median_runtime(const Dataset& d) {
  std::vector<double> r;
  for (const auto& rec : d.records()) r.push_back(rec.runtime);
  return quantile_nearest_rank(r, 0.5);
}

OptimizerSettings settings(double t_max, std::uint64_t seed) {
  OptimizerSettings s;
  s.t_max = t_max;
  s.seed = seed;
  s.planner.lookahead = 1;
  s.max_iterations = 6;
  return s;
}

}  // namespace

TEST(Bootstrap, DefaultCount) {
  EXPECT_EQ(default_bootstrap_count(384, 5), 12u);
  EXPECT_EQ(default_bootstrap_count(69, 3), 3u);
  EXPECT_EQ(default_bootstrap_count(10, 7), 7u);
  EXPECT_EQ(default_bootstrap_count(101, 2), 4u);
  EXPECT_EQ(default_bootstrap_count(synthetic().space()), 12u);
}

TEST(Bootstrap, LatinHypercube) {
  const ConfigSpace line({Dimension::numeric("x", {1, 2, 3, 4, 5, 6, 7})});
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto s = lhs_bootstrap(line, 7, seed);
    std::set<std::size_t> levels;
    for (const auto& c : s) levels.insert(c.levels[0]);
    EXPECT_EQ(levels.size(), 7u);
  }
  const auto& space = synthetic().space();
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    for (std::size_t n : {5, 12, 40}) {
      const auto s = lhs_bootstrap(space, n, seed);
      ASSERT_EQ(s.size(), n);
      std::set<std::size_t> ids;
      for (const auto& c : s) ids.insert(c.index);
      EXPECT_EQ(ids.size(), n);
      if (n == 5) {
        for (std::size_t k = 0; k < space.dimension_count(); ++k) {
          std::set<std::size_t> lv;
          for (const auto& c : s) lv.insert(c.levels[k]);
          EXPECT_GE(lv.size(), std::min<std::size_t>(5, space.dimension(k).size()));
        }
      }
    }
  }
  const auto a = lhs_bootstrap(space, 12, 3), b = lhs_bootstrap(space, 12, 3);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, lhs_bootstrap(space, 12, 4));
  EXPECT_THROW(lhs_bootstrap(line, 8, 0), std::invalid_argument);
  // A full draw covers the whole space.
  EXPECT_EQ(lhs_bootstrap(line, 7, 1).size(), 7u);
}

TEST(Timeout, Policies) {
  // One currency unit per hour: costs 2, 1, 10 and 5.
  auto d = toy::line_dataset({7200, 3600, 36000, 18000}, {1, 1, 1, 1});
  const GaussianPrediction pred{10.0, 2.0};
  const double t_max = 1e9;

  auto none = run_with_timeout(d, 2, TimeoutPolicy::truncated_gaussian, std::nullopt, pred, 4.0, t_max);
  EXPECT_FALSE(none.timed_out);
  EXPECT_EQ(none.spent, 10.0);

  auto cheap = run_with_timeout(d, 1, TimeoutPolicy::truncated_gaussian, 2.0, pred, 4.0, t_max);
  EXPECT_FALSE(cheap.timed_out);
  EXPECT_EQ(cheap.spent, 1.0);

  auto tg = run_with_timeout(d, 2, TimeoutPolicy::truncated_gaussian, 10.0 - 1e-12, {10.0 - 1e-12, 2.0}, 4.0, t_max);
  EXPECT_TRUE(tg.timed_out);
  EXPECT_FALSE(tg.feasible);
  EXPECT_FALSE(tg.runtime_known);
  EXPECT_EQ(tg.spent, 10.0 - 1e-12);
  EXPECT_NEAR(*tg.model_cost, 11.596, 1e-3);
  EXPECT_NEAR(*tg.model_cost, 10.0 + 2.0 * 2.0 * normal_pdf(0.0), 1e-9);

  // Cancellation at t = C* / U spends exactly C*.
  const double c_star = 2.0;
  const double t_cancel = c_star / d.record(2).unit_price();
  EXPECT_DOUBLE_EQ(d.query_partial(2, t_cancel).spent_cost, c_star);
  auto tg2 = run_with_timeout(d, 2, TimeoutPolicy::truncated_gaussian, c_star, pred, 4.0, t_max);
  EXPECT_EQ(tg2.spent, c_star);
  EXPECT_GT(*tg2.model_cost, c_star);

  auto no_info = run_with_timeout(d, 2, TimeoutPolicy::no_info_2x, c_star, pred, 4.0, t_max);
  EXPECT_TRUE(no_info.timed_out);
  EXPECT_EQ(no_info.spent, 2 * c_star);
  EXPECT_FALSE(no_info.model_cost);
  auto no_info_ok = run_with_timeout(d, 3, TimeoutPolicy::no_info_2x, 2.5, pred, 4.0, t_max);
  EXPECT_FALSE(no_info_ok.timed_out);
  EXPECT_EQ(no_info_ok.spent, 5.0);

  auto ideal = run_with_timeout(d, 2, TimeoutPolicy::ideal, c_star, pred, 4.0, t_max);
  EXPECT_EQ(ideal.spent, c_star);
  EXPECT_EQ(*ideal.model_cost, 10.0);
  EXPECT_TRUE(ideal.timed_out);

  auto maxc = run_with_timeout(d, 2, TimeoutPolicy::max_cost, c_star, pred, 4.0, t_max);
  EXPECT_EQ(maxc.spent, c_star);
  EXPECT_EQ(*maxc.model_cost, 4.0);

  auto off = run_with_timeout(d, 2, TimeoutPolicy::none, c_star, pred, 4.0, t_max);
  EXPECT_FALSE(off.timed_out);
  EXPECT_EQ(off.spent, 10.0);
  EXPECT_EQ(*off.model_cost, 10.0);
}

TEST(Timeout, LinearExtrapolation) {
  auto d = toy::line_dataset({7200, 3600}, {1, 1});
  JobRecord r = d.record(0);
  r.progress = {{3600, 0.25}, {7200, 1.0}};
  JobRecord q = d.record(1);
  q.progress = {{3600, 1.0}};
  const Dataset p("p", d.space(), {r, q});
  // Cancelled at C* = 1 -> t = 3600 s with progress 0.25: runtime 14400 s, cost 4.
  const auto o = run_with_timeout(p, 0, TimeoutPolicy::linear, 1.0, {3.0, 1.0}, 9.0, 1e9);
  EXPECT_TRUE(o.timed_out);
  EXPECT_EQ(o.spent, 1.0);
  EXPECT_DOUBLE_EQ(*o.model_cost, 4.0);

  OptimizerSettings s;
  s.t_max = 1e9;
  s.timeout = TimeoutPolicy::linear;
  EXPECT_THROW(optimize(d, s), ConfigurationError);
}

TEST(Timeout, TruncatedGaussianMeanAboveIncumbent) {
  for (double mu : {0.5, 1.0, 3.0, 10.0})
    for (double sigma : {0.01, 0.3, 1.0, 4.0})
      for (double c : {0.4, 1.0, 2.5, 9.0, 40.0}) {
        const double a = (c - mu) / sigma;
        const double est = c + sigma * mills_excess(a);
        EXPECT_GT(est, c) << mu << " " << sigma << " " << c;
        // Truncated mean by the trapezoid rule on [c, max(c, mu) + 40 sigma].
        const int n = 400000;
        const double h = (std::max(c, mu) - c + 40.0 * sigma) / n;
        double num = 0, den = 0;
        for (int i = 0; i <= n; ++i) {
          const double x = c + i * h;
          const double w = (i == 0 || i == n) ? 0.5 : 1.0;
          const double f = normal_pdf((x - mu) / sigma);
          num += w * x * f;
          den += w * f;
        }
        if (den > 1e-280) EXPECT_NEAR(est, num / den, 1e-6 * std::max(1.0, c));
      }
}

TEST(Optimizer, BudgetLedgerIsExact) {
  const auto& d = synthetic();
  const double t_max = median_runtime(d);
  for (auto policy : {TimeoutPolicy::truncated_gaussian, TimeoutPolicy::no_info_2x, TimeoutPolicy::none}) {
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
      auto s = settings(t_max, seed);
      s.budget = 3.0;
      s.timeout = policy;
      s.max_iterations = 25;
      s.planner.lookahead = 0;
      const auto r = optimize(d, s);
      double spent = 0;
      std::size_t samples = 0;
      std::optional<double> best;
      for (const auto& st : r.trajectory) {
        spent += st.spent;
        EXPECT_EQ(st.budget_left, s.budget - spent);
        EXPECT_EQ(st.cumulative_cost, spent);
        if (st.timed_out) {
          ASSERT_TRUE(best);
          EXPECT_EQ(st.spent, policy == TimeoutPolicy::no_info_2x ? 2 * *best : *best);
          if (policy == TimeoutPolicy::truncated_gaussian) EXPECT_GT(*st.model_cost, *best);
          if (policy == TimeoutPolicy::no_info_2x) EXPECT_FALSE(st.model_cost);
        } else {
          EXPECT_EQ(st.spent, d.record(st.config).cost());
        }
        samples += st.model_cost ? 1 : 0;
        if (st.feasible && !st.timed_out) best = std::min(best.value_or(kInf), d.record(st.config).cost());
      }
      EXPECT_EQ(r.exploration_cost, spent);
      // Budget may be overrun only by the final exploration.
      for (std::size_t i = 0; i + 1 < r.trajectory.size(); ++i)
        if (r.trajectory[i].phase == Phase::search) EXPECT_GT(r.trajectory[i].budget_left, 0.0);
      EXPECT_LE(samples, r.trajectory.size());
    }
  }
}

TEST(Optimizer, RecommendationIsCheapestFeasibleSample) {
  const auto& d = synthetic();
  const double t_max = median_runtime(d);
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    auto s = settings(t_max, seed);
    const auto r = optimize(d, s);
    ASSERT_EQ(r.status, RunStatus::ok);
    double best = kInf;
    std::optional<double> prev_cno;
    for (const auto& st : r.trajectory) {
      if (st.feasible && !st.timed_out) best = std::min(best, d.record(st.config).cost());
      if (prev_cno && st.best_cno) EXPECT_LE(*st.best_cno, *prev_cno);
      if (st.best_cno) prev_cno = st.best_cno;
    }
    EXPECT_EQ(*r.recommended_cost, best);
    EXPECT_LE(d.record(*r.recommendation).runtime, t_max);
    EXPECT_GE(*r.cno, 1.0);
    EXPECT_EQ(r.bootstrap_count, 12u);
  }
}

TEST(Optimizer, BootstrapOnlyBudget) {
  const auto& d = synthetic();
  const double t_max = median_runtime(d);
  auto s = settings(t_max, 5);
  s.budget = 1e-9;
  const auto r = optimize(d, s);
  ASSERT_EQ(r.trajectory.size(), 12u);
  double best = kInf;
  for (const auto& st : r.trajectory) {
    EXPECT_EQ(st.phase, Phase::bootstrap);
    if (st.feasible) best = std::min(best, d.record(st.config).cost());
  }
  ASSERT_TRUE(r.recommended_cost);
  EXPECT_EQ(*r.recommended_cost, best);
}

TEST(Optimizer, ExhaustiveLimitFindsOptimum) {
  const auto d = toy::line_dataset({50, 40, 90, 20, 70, 30, 60, 80, 10, 45}, {10, 30, 5, 60, 8, 25, 9, 4, 200, 12});
  const double t_max = 65;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    OptimizerSettings s;
    s.t_max = t_max;
    s.seed = seed;
    s.timeout = TimeoutPolicy::none;
    s.planner.reward_stop_fraction = 0.0;
    s.planner.lookahead = 1;
    const auto r = optimize(d, s);
    EXPECT_EQ(r.trajectory.size(), d.size());
    EXPECT_EQ(r.recommendation, d.optimum(t_max));
    EXPECT_EQ(*r.cno, 1.0);
    EXPECT_EQ(r.bootstrap_count, 2u);

    const auto g = optimize_greedy(d, s);
    EXPECT_EQ(g.recommendation, d.optimum(t_max));
  }
}

TEST(Optimizer, NoFeasibleConfiguration) {
  const auto d = toy::line_dataset({50, 40, 90}, {10, 30, 5});
  OptimizerSettings s;
  s.t_max = 10;
  s.timeout = TimeoutPolicy::none;
  s.planner.reward_stop_fraction = 0.0;
  const auto r = optimize(d, s);
  EXPECT_EQ(r.status, RunStatus::no_feasible);
  EXPECT_FALSE(r.recommendation);
  EXPECT_EQ(r.trajectory.size(), 3u);
}

TEST(Optimizer, RandomBaseline) {
  const auto& d = synthetic();
  const double t_max = median_runtime(d);
  const auto a = optimize_random(d, kInf, t_max, 3);
  EXPECT_EQ(a.trajectory.size(), d.size());
  EXPECT_EQ(a.recommendation, d.optimum(t_max));
  EXPECT_EQ(*a.cno, 1.0);
  const auto b = optimize_random(d, kInf, t_max, 3);
  EXPECT_EQ(a.trajectory, b.trajectory);
  EXPECT_NE(a.trajectory, optimize_random(d, kInf, t_max, 4).trajectory);

  const auto c = optimize_random(d, 2.0, t_max, 3);
  EXPECT_LT(c.trajectory.size(), d.size());
  EXPECT_GT(c.trajectory.size(), 0u);
  for (std::size_t i = 0; i + 1 < c.trajectory.size(); ++i) EXPECT_GT(c.trajectory[i].budget_left, 0.0);

  const auto t = optimize_random(d, kInf, t_max, 3, 1.1);
  ASSERT_TRUE(t.cno);
  EXPECT_LE(*t.cno, 1.1);
  const auto& last = t.trajectory.back();
  EXPECT_LE(*last.best_cno, 1.1);
  EXPECT_GT(*t.trajectory[t.trajectory.size() - 2].best_cno, 1.1);
  EXPECT_EQ(optimize_random(d, kInf, t_max, 3, std::nullopt, 5).trajectory.size(), 5u);
}

TEST(Optimizer, DeterministicAcrossThreads) {
  const auto& d = synthetic();
  const double t_max = median_runtime(d);
  auto s = settings(t_max, 11);
  s.planner.lookahead = 2;
  s.max_iterations = 3;
  const auto a = optimize(d, s);
  s.threads = 4;
  const auto b = optimize(d, s);
  const auto c = optimize(d, s);
  EXPECT_EQ(a.trajectory, b.trajectory);
  EXPECT_EQ(b.trajectory, c.trajectory);
  EXPECT_EQ(a.planner_retrains, b.planner_retrains);
  EXPECT_GT(a.planner_retrains, 0u);
}

TEST(Optimizer, CollapseToGreedy) {
  const auto& d = synthetic();
  const double t_max = median_runtime(d);
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    auto s = settings(t_max, seed);
    s.planner.lookahead = 0;
    s.timeout = TimeoutPolicy::none;
    s.max_iterations = 30;
    EXPECT_EQ(optimize(d, s).trajectory, optimize_greedy(d, s).trajectory);
  }
}

TEST(Optimizer, Truncation) {
  const auto& d = synthetic();
  const double t_max = median_runtime(d);
  auto s = settings(t_max, 2);
  s.planner.lookahead = 0;
  s.max_iterations = 4;
  const auto r = optimize(d, s);
  EXPECT_LE(r.trajectory.size(), 12u + 4u);
  s.max_iterations.reset();
  s.stop_at_cno = 1.5;
  const auto q = optimize(d, s);
  if (q.trajectory.back().phase == Phase::search) EXPECT_LE(*q.trajectory.back().best_cno, 1.5);
}

TEST(Optimizer, SettingErrors) {
  const auto& d = synthetic();
  OptimizerSettings s;
  EXPECT_THROW(optimize(d, s), ConfigurationError);  // t_max = 0
  s.t_max = 100;
  s.budget = 0;
  EXPECT_THROW(optimize(d, s), ConfigurationError);
  EXPECT_THROW(optimize_random(d, 0.0, 100, 0), ConfigurationError);
}

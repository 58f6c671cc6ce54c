#pragma once

#include <algorithm>
#include <atomic>
#include <concepts>
#include <cstdint>
#include <optional>
#include <span>
#include <type_traits>
#include <vector>

#include "lynceus/acquisition.hpp"
#include "lynceus/parallel.hpp"
#include "lynceus/quadrature.hpp"
#include "lynceus/regressor.hpp"
#include "lynceus/rng.hpp"

namespace lynceus {

template <class M>
concept CostModel = requires(const M& m, std::size_t x) {
  { m.predict(x) } -> std::same_as<GaussianPrediction>;
  { m.sigma_floor() } -> std::convertible_to<double>;
};

/// Predictions for many configurations, batched when the model supports it.
template <CostModel M>
std::vector<GaussianPrediction> predict_all(const M& model, std::span<const std::size_t> configs) {
  std::vector<GaussianPrediction> out(configs.size());
  if constexpr (requires { model.predict_many(configs, std::span<GaussianPrediction>(out)); }) {
    model.predict_many(configs, out);
  } else {
    for (std::size_t i = 0; i < configs.size(); ++i) out[i] = model.predict(configs[i]);
  }
  return out;
}

template <class T>
concept ModelTrainer = requires(const T& t, const TrainingSet& s, std::uint64_t seed) {
  { t(s, seed) } -> CostModel;
};

struct PlannerConfig {
  std::size_t lookahead = 2;
  std::size_t nodes = 3;  // quadrature points per speculated outcome
  double discount = 0.9;
  double budget_confidence = 0.99;
  double reward_stop_fraction = 0.01;  // of y*; <= 0 disables the stop
};

/// The optimizer state: explored samples S, untested configurations T
/// (ascending), remaining budget beta and the deployed configuration.
struct PlannerState {
  TrainingSet samples;
  std::vector<std::size_t> untested;
  double budget = kInf;
  std::optional<std::size_t> deployed;

  void mark_tested(std::size_t x) {
    auto it = std::lower_bound(untested.begin(), untested.end(), x);
    if (it != untested.end() && *it == x) untested.erase(it);
  }
};

struct PathScore {
  double reward = 0.0;
  double cost = 0.0;
};

struct RootScore {
  std::size_t config;
  PathScore score;
};

struct PlanDecision {
  std::optional<std::size_t> selected;
  std::vector<RootScore> roots;  // ascending configuration order
  Incumbent incumbent;
  double selected_reward = 0.0;
  bool stopped_marginal = false;
  std::size_t retrains = 0;
};

/// Long-sighted selection of the next configuration. Every budget-feasible
/// untested configuration roots one path; deeper steps follow the EI_c-greedy
/// choice under a model retrained on each quadrature-speculated outcome.
template <ModelTrainer Trainer>
class Planner {
 public:
  using Model = std::invoke_result_t<const Trainer&, const TrainingSet&, std::uint64_t>;

  Planner(Trainer trainer, PlannerConfig config, std::span<const double> unit_price, double t_max)
      : trainer_(std::move(trainer)), config_(config), rule_(std::max<std::size_t>(config.nodes, 1)),
        unit_price_(unit_price), t_max_(t_max) {}

  const PlannerConfig& config() const noexcept { return config_; }

  /// Configurations whose cost stays within the budget with the configured confidence.
  std::vector<std::size_t> affordable(const PlannerState& st, const Model& model) const {
    std::vector<std::size_t> out;
    const auto preds = predict_all(model, st.untested);
    for (std::size_t i = 0; i < preds.size(); ++i)
      if (prob_below(preds[i], st.budget) >= config_.budget_confidence) out.push_back(st.untested[i]);
    return out;
  }

  double ei_c(const Model& model, std::size_t x, double y_star) const {
    return ei_constrained(model.predict(x), y_star, t_max_, unit_price_[x]);
  }

  /// Next step of a speculated path: the affordable configuration with the
  /// largest EI_c, lowest index on ties.
  std::optional<std::size_t> next_step(const PlannerState& st, const Model& model, double y_star) const {
    std::optional<std::size_t> best;
    double best_value = -1.0;
    const auto preds = predict_all(model, st.untested);
    for (std::size_t i = 0; i < preds.size(); ++i) {
      const auto x = st.untested[i];
      const auto& pred = preds[i];
      if (prob_below(pred, st.budget) < config_.budget_confidence) continue;
      const double v = ei_constrained(pred, y_star, t_max_, unit_price_[x]);
      if (v > best_value) {
        best_value = v;
        best = x;
      }
    }
    return best;
  }

  /// Reward and cost of the path of length `depth` rooted in x. `key` seeds
  /// every speculative retrain below this node.
  PathScore explore_paths(const PlannerState& st, const Model& model, double y_star, std::size_t x,
                          std::size_t depth, std::uint64_t key, std::size_t& retrains) const {
    const auto pred = model.predict(x);
    PathScore out{ei_constrained(pred, y_star, t_max_, unit_price_[x]), pred.mean};
    if (depth == 0) return out;

    const auto branches = rule_.apply(pred);
    for (std::size_t i = 0; i < branches.size(); ++i) {
      const double c = std::max(branches[i].cost, model.sigma_floor());
      const double w = branches[i].weight;
      PlannerState next = st;
      next.samples.add({x, c, c <= t_max_ * unit_price_[x], false});
      next.mark_tested(x);
      next.budget = st.budget - c;
      next.deployed = x;

      const auto branch_key = derive_seed(key, i);
      ++retrains;
      const auto next_model = trainer_(next.samples, branch_key);
      const double next_y = incumbent(next.samples, next_model, next.untested).value;
      const auto x_next = next_step(next, next_model, next_y);
      if (!x_next) continue;
      const auto sub = explore_paths(next, next_model, next_y, *x_next, depth - 1, branch_key, retrains);
      out.cost += w * sub.cost;
      out.reward += config_.discount * w * sub.reward;
    }
    return out;
  }

  /// Picks the root with the best reward/cost ratio, or nothing when no
  /// configuration is affordable or the best path's reward is marginal.
  /// `model` must be trained on st.samples.
  PlanDecision next_config(const PlannerState& st, const Model& model, std::uint64_t key,
                           unsigned threads = 1) const {
    PlanDecision d;
    d.incumbent = incumbent(st.samples, model, st.untested);
    const auto roots = affordable(st, model);
    if (roots.empty()) return d;

    std::vector<PathScore> scores(roots.size());
    std::vector<std::size_t> retrains(roots.size(), 0);
    parallel_for(roots.size(), threads, [&](std::size_t r) {
      scores[r] = explore_paths(st, model, d.incumbent.value, roots[r], config_.lookahead,
                                derive_seed(key, roots[r]), retrains[r]);
    });

    double best_ratio = -1.0;
    for (std::size_t r = 0; r < roots.size(); ++r) {
      d.roots.push_back({roots[r], scores[r]});
      d.retrains += retrains[r];
      const double denom = scores[r].cost > 0.0 ? scores[r].cost : model.sigma_floor();
      const double ratio = scores[r].reward / denom;
      if (ratio > best_ratio) {
        best_ratio = ratio;
        d.selected = roots[r];
        d.selected_reward = scores[r].reward;
      }
    }
    if (config_.reward_stop_fraction > 0.0 &&
        d.selected_reward < config_.reward_stop_fraction * d.incumbent.value) {
      d.selected.reset();
      d.stopped_marginal = true;
    }
    return d;
  }

 private:
  Trainer trainer_;
  PlannerConfig config_;
  QuadratureRule rule_;
  std::span<const double> unit_price_;
  double t_max_;
};

}  // namespace lynceus

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "lynceus/acquisition.hpp"
#include "lynceus/dataset.hpp"
#include "lynceus/planner.hpp"
#include "lynceus/regressor.hpp"
#include "lynceus/rng.hpp"
#include "lynceus/stats.hpp"

namespace lynceus {

enum class TimeoutPolicy { truncated_gaussian, no_info_2x, ideal, max_cost, none, linear };

inline std::string_view to_string(TimeoutPolicy p) {
  switch (p) {
    case TimeoutPolicy::truncated_gaussian: return "tg";
    case TimeoutPolicy::no_info_2x: return "noinfo2x";
    case TimeoutPolicy::ideal: return "ideal";
    case TimeoutPolicy::max_cost: return "maxcost";
    case TimeoutPolicy::none: return "none";
    case TimeoutPolicy::linear: return "linear";
  }
  return "?";
}

inline std::optional<TimeoutPolicy> parse_timeout_policy(std::string_view s) {
  for (auto p : {TimeoutPolicy::truncated_gaussian, TimeoutPolicy::no_info_2x, TimeoutPolicy::ideal,
                 TimeoutPolicy::max_cost, TimeoutPolicy::none, TimeoutPolicy::linear})
    if (to_string(p) == s) return p;
  return std::nullopt;
}

class ConfigurationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// N = max(ceil(3% of |C|), number of dimensions).
inline std::size_t default_bootstrap_count(std::size_t cardinality, std::size_t dimensions) {
  return std::max((3 * cardinality + 99) / 100, dimensions);
}

inline std::size_t default_bootstrap_count(const ConfigSpace& space) {
  return default_bootstrap_count(space.cardinality(), space.dimension_count());
}

/// Latin hypercube over a discrete space. Dimension d with L levels gives its
/// N samples the levels floor((i + 1/2) L / N), i = 0..N-1, in a random order.
/// A sample that collides with an earlier one swaps entries with a later
/// sample (keeping every marginal intact); if that keeps failing it is
/// redrawn uniformly from the unused configurations.
inline std::vector<Configuration> lhs_bootstrap(const ConfigSpace& space, std::size_t n, std::uint64_t seed) {
  if (n > space.cardinality())
    throw std::invalid_argument("cannot draw " + std::to_string(n) + " distinct configurations from a space of " +
                                std::to_string(space.cardinality()));
  Rng rng(seed);
  const std::size_t dims = space.dimension_count();
  std::vector<std::vector<std::size_t>> column(dims, std::vector<std::size_t>(n));
  for (std::size_t d = 0; d < dims; ++d) {
    const auto levels = space.dimension(d).size();
    for (std::size_t i = 0; i < n; ++i)
      column[d][i] = static_cast<std::size_t>((2 * i + 1) * levels / (2 * n));
    rng.shuffle(column[d].begin(), column[d].end());
  }
  auto tuple_index = [&](std::size_t j) {
    std::vector<std::size_t> lv(dims);
    for (std::size_t d = 0; d < dims; ++d) lv[d] = column[d][j];
    return space.encode(lv).index;
  };

  std::set<std::size_t> used;
  std::vector<Configuration> out;
  for (std::size_t j = 0; j < n; ++j) {
    auto idx = tuple_index(j);
    for (std::size_t attempt = 0; used.count(idx) && j + 1 < n && attempt < 64 * dims; ++attempt) {
      const auto d = rng.index(dims);
      const auto k = j + 1 + rng.index(n - j - 1);
      std::swap(column[d][j], column[d][k]);
      idx = tuple_index(j);
    }
    while (used.count(idx)) idx = rng.index(space.cardinality());
    used.insert(idx);
    out.push_back(space.decode(idx));
  }
  return out;
}

/// Result of profiling one configuration.
struct RunOutcome {
  std::size_t config = 0;
  double spent = 0.0;
  std::optional<double> model_cost;  // value fed to the model; absent when nothing is learned
  bool runtime_known = true;
  bool feasible = false;
  bool timed_out = false;
};

/// Profiles x, cancelling it early when it is provably worse than the
/// incumbent. `incumbent_cost` is C(x*) (absent: no timeout is armed), `pred`
/// the current model's prediction for x, `max_cost_seen` the largest cost in S.
inline RunOutcome run_with_timeout(const Dataset& d, std::size_t x, TimeoutPolicy policy,
                                   std::optional<double> incumbent_cost, const GaussianPrediction& pred,
                                   double max_cost_seen, double t_max) {
  const auto q = d.query(x);
  RunOutcome full{x, q.cost, q.cost, true, d.feasible(x, t_max), false};
  if (!incumbent_cost || policy == TimeoutPolicy::none) return full;
  const double best = *incumbent_cost;

  if (policy == TimeoutPolicy::no_info_2x) {
    if (q.cost <= 2.0 * best) return full;
    return {x, 2.0 * best, std::nullopt, false, false, true};
  }
  if (q.cost <= best) return full;

  // Cancelled at t = C(x*) / U(x): the spend is exactly C(x*).
  RunOutcome out{x, best, std::nullopt, false, false, true};
  switch (policy) {
    case TimeoutPolicy::truncated_gaussian: {
      // E[C | C > C(x*)] = mu + sigma * lambda(alpha) = C(x*) + sigma * (lambda(alpha) - alpha)
      const double alpha = (best - pred.mean) / pred.stddev;
      double estimate = best + pred.stddev * mills_excess(alpha);
      if (!(estimate > best)) estimate = std::nextafter(best, kInf);
      out.model_cost = estimate;
      break;
    }
    case TimeoutPolicy::ideal:
      out.model_cost = q.cost;
      break;
    case TimeoutPolicy::max_cost:
      out.model_cost = max_cost_seen;
      break;
    case TimeoutPolicy::linear: {
      const double t = best / q.unit_price;
      const auto partial = d.query_partial(x, t);
      if (partial.progress && *partial.progress > 0.0)
        out.model_cost = (t / *partial.progress) * q.unit_price;
      else
        out.model_cost = max_cost_seen;
      break;
    }
    default:
      break;
  }
  return out;
}

struct OptimizerSettings {
  double budget = kInf;
  double t_max = 0.0;
  PlannerConfig planner{};
  TimeoutPolicy timeout = TimeoutPolicy::truncated_gaussian;
  std::optional<std::size_t> bootstrap;  // default: default_bootstrap_count
  std::uint64_t seed = 0;
  unsigned threads = 1;
  EnsembleOptions model{};
  // Simulation-only truncation: stop once the best-so-far CNO reaches this
  // value, or after this many search iterations.
  std::optional<double> stop_at_cno;
  std::optional<std::size_t> max_iterations;
};

enum class Phase { bootstrap, search };
enum class RunStatus { ok, no_feasible };

inline std::string_view to_string(Phase p) { return p == Phase::bootstrap ? "bootstrap" : "search"; }
inline std::string_view to_string(RunStatus s) { return s == RunStatus::ok ? "ok" : "no-feasible"; }

struct Step {
  std::size_t step = 0;
  Phase phase = Phase::bootstrap;
  std::size_t config = 0;
  double spent = 0.0;
  std::optional<double> model_cost;
  bool timed_out = false;
  bool feasible = false;
  double budget_left = 0.0;
  double cumulative_cost = 0.0;
  std::optional<double> best_cost;
  std::optional<double> best_cno;

  bool operator==(const Step&) const = default;
};

struct OptimizeResult {
  RunStatus status = RunStatus::no_feasible;
  std::optional<std::size_t> recommendation;
  std::optional<double> recommended_cost;
  std::optional<double> cno;
  std::vector<Step> trajectory;
  std::size_t bootstrap_count = 0;
  double exploration_cost = 0.0;
  double bootstrap_cost = 0.0;
  std::size_t planner_retrains = 0;
};

namespace detail {

/// Shared bookkeeping for every optimizer: ledger, training set, trajectory.
class RunLedger {
 public:
  RunLedger(const Dataset& d, double budget, double t_max) : d_(d), budget_total_(budget), t_max_(t_max) {
    state_.budget = budget;
    state_.untested.resize(d.size());
    std::iota(state_.untested.begin(), state_.untested.end(), std::size_t{0});
    if (auto opt = d.optimum(t_max)) optimum_cost_ = d.record(*opt).cost();
  }

  PlannerState& state() noexcept { return state_; }
  const PlannerState& state() const noexcept { return state_; }

  void apply(const RunOutcome& o, Phase phase) {
    spent_total_ += o.spent;
    state_.budget = budget_total_ - spent_total_;
    if (o.model_cost) state_.samples.add({o.config, *o.model_cost, o.feasible, o.timed_out});
    state_.mark_tested(o.config);
    state_.deployed = o.config;
    if (o.feasible && !o.timed_out) {
      const double c = d_.record(o.config).cost();
      if (!best_ || c < d_.record(*best_).cost()) best_ = o.config;
    }
    Step s;
    s.step = result_.trajectory.size();
    s.phase = phase;
    s.config = o.config;
    s.spent = o.spent;
    s.model_cost = o.model_cost;
    s.timed_out = o.timed_out;
    s.feasible = o.feasible;
    s.budget_left = state_.budget;
    s.cumulative_cost = spent_total_;
    if (best_) {
      s.best_cost = d_.record(*best_).cost();
      if (optimum_cost_) s.best_cno = *s.best_cost / *optimum_cost_;
    }
    result_.trajectory.push_back(s);
    if (phase == Phase::bootstrap) result_.bootstrap_cost = spent_total_;
  }

  double max_cost_seen() const { return state_.samples.max_cost(); }

  bool reached(std::optional<double> cno) const {
    return cno && !result_.trajectory.empty() && result_.trajectory.back().best_cno &&
           *result_.trajectory.back().best_cno <= *cno;
  }

  OptimizeResult finish(std::size_t bootstrap_count) {
    result_.bootstrap_count = bootstrap_count;
    result_.exploration_cost = spent_total_;
    if (best_) {
      result_.status = RunStatus::ok;
      result_.recommendation = best_;
      result_.recommended_cost = d_.record(*best_).cost();
      if (optimum_cost_) result_.cno = *result_.recommended_cost / *optimum_cost_;
    }
    return std::move(result_);
  }

  OptimizeResult& result() noexcept { return result_; }

 private:
  const Dataset& d_;
  double budget_total_;
  double t_max_;
  double spent_total_ = 0.0;
  PlannerState state_;
  std::optional<std::size_t> best_;
  std::optional<double> optimum_cost_;
  OptimizeResult result_;
};

inline void validate_settings(const Dataset& d, const OptimizerSettings& s) {
  if (!(s.t_max > 0.0)) throw ConfigurationError("runtime limit must be positive");
  if (!(s.budget > 0.0)) throw ConfigurationError("budget must be positive");
  if (s.timeout == TimeoutPolicy::linear && !d.has_progress())
    throw ConfigurationError("linear timeout policy needs progress curves in the dataset");
  if (d.size() < 2) throw ConfigurationError("space must hold at least two configurations");
}

inline std::vector<double> unit_prices(const Dataset& d) {
  std::vector<double> u(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) u[i] = d.record(i).unit_price();
  return u;
}

using Selector = std::function<std::optional<std::size_t>(const PlannerState&, const EnsembleModel&, std::size_t iteration)>;

/// The main loop shared by the look-ahead and greedy optimizers.
inline OptimizeResult model_based_loop(const Dataset& d, const OptimizerSettings& s, const Selector& select) {
  validate_settings(d, s);
  const auto& space = d.space();
  const std::size_t n_boot =
      std::min(std::max<std::size_t>(s.bootstrap.value_or(default_bootstrap_count(space)), 2), d.size());
  const BaggingTrainer trainer{space.shared_features(), s.model};

  RunLedger ledger(d, s.budget, s.t_max);
  for (const auto& x : lhs_bootstrap(space, n_boot, derive_seed(s.seed, stream::bootstrap))) {
    const auto q = d.query(x.index);
    ledger.apply({x.index, q.cost, q.cost, true, d.feasible(x.index, s.t_max), false}, Phase::bootstrap);
  }

  for (std::size_t it = 0; !ledger.state().untested.empty() && ledger.state().budget > 0.0; ++it) {
    if (ledger.reached(s.stop_at_cno) || (s.max_iterations && it >= *s.max_iterations)) break;
    const auto& st = ledger.state();
    const auto model = trainer(st.samples, derive_seed(s.seed, {stream::model, it}));
    const auto x = select(st, model, it);
    if (!x) break;
    const auto outcome = run_with_timeout(d, *x, s.timeout, best_feasible_cost(st.samples), model.predict(*x),
                                          ledger.max_cost_seen(), s.t_max);
    ledger.apply(outcome, Phase::search);
  }
  return ledger.finish(n_boot);
}

}  // namespace detail

/// Budget-aware look-ahead optimization over a tabulated job.
inline OptimizeResult optimize(const Dataset& d, const OptimizerSettings& s) {
  const auto prices = detail::unit_prices(d);
  Planner planner(BaggingTrainer{d.space().shared_features(), s.model}, s.planner, prices, s.t_max);
  std::size_t retrains = 0;
  auto result = detail::model_based_loop(d, s, [&](const PlannerState& st, const EnsembleModel& m, std::size_t it) {
    const auto decision = planner.next_config(st, m, derive_seed(s.seed, {stream::speculate, it}), s.threads);
    retrains += decision.retrains;
    return decision.selected;
  });
  result.planner_retrains = retrains;
  return result;
}

/// Greedy BO with EI_c per dollar as acquisition. Timeouts follow the settings.
inline OptimizeResult optimize_greedy(const Dataset& d, const OptimizerSettings& s) {
  const auto prices = detail::unit_prices(d);
  return detail::model_based_loop(
      d, s, [&](const PlannerState& st, const EnsembleModel& m, std::size_t) -> std::optional<std::size_t> {
        const auto y = incumbent(st.samples, m, st.untested).value;
        std::optional<std::size_t> best;
        double best_ratio = -1.0, best_eic = 0.0;
        const auto preds = predict_all(m, st.untested);
        for (std::size_t i = 0; i < preds.size(); ++i) {
          const auto x = st.untested[i];
          const auto& pred = preds[i];
          if (prob_below(pred, st.budget) < s.planner.budget_confidence) continue;
          const double ratio = ei_per_dollar(pred, y, s.t_max, prices[x], m.sigma_floor());
          if (ratio > best_ratio) {
            best_ratio = ratio;
            best = x;
            best_eic = ei_constrained(pred, y, s.t_max, prices[x]);
          }
        }
        if (best && s.planner.reward_stop_fraction > 0.0 && best_eic < s.planner.reward_stop_fraction * y)
          return std::nullopt;
        return best;
      });
}

/// Uniform random exploration without replacement until the budget is spent.
inline OptimizeResult optimize_random(const Dataset& d, double budget, double t_max, std::uint64_t seed,
                                      std::optional<double> stop_at_cno = std::nullopt,
                                      std::optional<std::size_t> max_iterations = std::nullopt) {
  if (!(t_max > 0.0)) throw ConfigurationError("runtime limit must be positive");
  if (!(budget > 0.0)) throw ConfigurationError("budget must be positive");
  std::vector<std::size_t> order(d.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(derive_seed(seed, stream::random_order));
  rng.shuffle(order.begin(), order.end());
  detail::RunLedger ledger(d, budget, t_max);
  for (std::size_t it = 0; it < order.size(); ++it) {
    const auto x = order[it];
    if (!(ledger.state().budget > 0.0) || ledger.reached(stop_at_cno)) break;
    if (max_iterations && it >= *max_iterations) break;
    const auto q = d.query(x);
    ledger.apply({x, q.cost, q.cost, true, d.feasible(x, t_max), false}, Phase::search);
  }
  return ledger.finish(0);
}

}  // namespace lynceus

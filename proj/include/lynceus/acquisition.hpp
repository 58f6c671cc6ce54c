#pragma once

#include <algorithm>
#include <cmath>
#include <span>

#include "lynceus/regressor.hpp"
#include "lynceus/stats.hpp"

namespace lynceus {

/// EI(x) = (y* - mu) Phi(z) + sigma phi(z), z = (y* - mu) / sigma.
inline double expected_improvement(const GaussianPrediction& pred, double y_star) {
  const double z = (y_star - pred.mean) / pred.stddev;
  const double ei = (y_star - pred.mean) * normal_cdf(z) + pred.stddev * normal_pdf(z);
  return std::max(ei, 0.0);
}

/// P(T(x) <= T_max), evaluated on the cost model as P(C(x) <= T_max * U(x)).
inline double constraint_probability(const GaussianPrediction& pred, double t_max, double unit_price) {
  return prob_below(pred, t_max * unit_price);
}

inline double ei_constrained(const GaussianPrediction& pred, double y_star, double t_max, double unit_price) {
  return expected_improvement(pred, y_star) * constraint_probability(pred, t_max, unit_price);
}

/// EI_c over the predicted cost. Non-positive means are replaced by the floor.
inline double ei_per_dollar(const GaussianPrediction& pred, double y_star, double t_max, double unit_price,
                            double sigma_floor) {
  const double denom = pred.mean > 0.0 ? pred.mean : sigma_floor;
  return ei_constrained(pred, y_star, t_max, unit_price) / denom;
}

enum class IncumbentSource { feasible_best, fallback };

struct Incumbent {
  double value = 0.0;
  IncumbentSource source = IncumbentSource::fallback;
};

/// Cheapest feasible, fully-run sample in S. Timed-out samples never qualify.
inline std::optional<double> best_feasible_cost(const TrainingSet& s) {
  std::optional<double> best;
  for (const auto& x : s.samples())
    if (x.feasible && !x.timed_out && (!best || x.cost < *best)) best = x.cost;
  return best;
}

/// y*: best feasible cost in S, or (max cost in S) + 3 * (max sigma over the
/// unexplored configurations) when S holds no feasible sample.
template <class Model>
Incumbent incumbent(const TrainingSet& s, const Model& model, std::span<const std::size_t> unexplored) {
  if (auto best = best_feasible_cost(s)) return {*best, IncumbentSource::feasible_best};
  double max_sigma = 0.0;
  for (auto x : unexplored) max_sigma = std::max(max_sigma, model.predict(x).stddev);
  return {s.max_cost() + 3.0 * max_sigma, IncumbentSource::fallback};
}

}  // namespace lynceus

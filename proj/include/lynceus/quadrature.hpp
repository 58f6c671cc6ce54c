#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "lynceus/regressor.hpp"

namespace lynceus {

struct WeightedCost {
  double cost;
  double weight;
};

/// K-point Gauss-Hermite rule for the weight exp(-x^2), with weights divided
/// by sqrt(pi) so they sum to one. Applied to N(mu, sigma) via
/// c_i = mu + sqrt(2) * sigma * x_i, it integrates polynomials of degree
/// <= 2K - 1 exactly against the Gaussian.
class QuadratureRule {
 public:
  explicit QuadratureRule(std::size_t k) {
    if (k == 0) throw std::invalid_argument("quadrature needs at least one node");
    nodes_.assign(k, 0.0);
    weights_.assign(k, 0.0);
    compute(k);
  }

  std::size_t size() const noexcept { return nodes_.size(); }
  const std::vector<double>& nodes() const noexcept { return nodes_; }
  const std::vector<double>& weights() const noexcept { return weights_; }

  std::vector<WeightedCost> apply(const GaussianPrediction& p) const {
    std::vector<WeightedCost> out;
    out.reserve(nodes_.size());
    for (std::size_t i = 0; i < nodes_.size(); ++i)
      out.push_back({p.mean + std::numbers::sqrt2 * p.stddev * nodes_[i], weights_[i]});
    return out;
  }

 private:
  // Newton iteration on the orthonormal Hermite recurrence, with the usual
  // asymptotic initial guesses for the largest roots.
  void compute(std::size_t n) {
    const double pim4 = 1.0 / std::pow(std::numbers::pi, 0.25);
    const std::size_t m = (n + 1) / 2;
    const double nd = static_cast<double>(n);
    std::vector<double> x(n), w(n);
    double z = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      if (i == 0)
        z = std::sqrt(2.0 * nd + 1.0) - 1.85575 * std::pow(2.0 * nd + 1.0, -0.16667);
      else if (i == 1)
        z -= 1.14 * std::pow(nd, 0.426) / z;
      else if (i == 2)
        z = 1.86 * z - 0.86 * x[0];
      else if (i == 3)
        z = 1.91 * z - 0.91 * x[1];
      else
        z = 2.0 * z - x[i - 2];
      double pp = 0.0;
      for (int it = 0; it < 100; ++it) {
        double p1 = pim4, p2 = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
          const double p3 = p2;
          p2 = p1;
          const double jd = static_cast<double>(j);
          p1 = z * std::sqrt(2.0 / (jd + 1.0)) * p2 - std::sqrt(jd / (jd + 1.0)) * p3;
        }
        pp = std::sqrt(2.0 * nd) * p2;
        const double z1 = z;
        z = z1 - p1 / pp;
        if (std::abs(z - z1) <= 1e-15 * std::max(1.0, std::abs(z))) break;
      }
      x[i] = z;
      x[n - 1 - i] = -z;
      w[i] = w[n - 1 - i] = 2.0 / (pp * pp);
    }
    if (n % 2 == 1) x[m - 1] = 0.0;
    // Ascending nodes; weights normalized to a probability vector.
    std::reverse(x.begin(), x.end());
    std::reverse(w.begin(), w.end());
    double total = 0.0;
    for (double v : w) total += v;
    for (std::size_t i = 0; i < n; ++i) {
      nodes_[i] = x[i];
      weights_[i] = w[i] / total;
    }
  }

  std::vector<double> nodes_;
  std::vector<double> weights_;
};

/// Discretizes N(mu, sigma) into K (cost, weight) pairs.
inline std::vector<WeightedCost> gauss_hermite(std::size_t k, const GaussianPrediction& pred) {
  return QuadratureRule(k).apply(pred);
}

}  // namespace lynceus

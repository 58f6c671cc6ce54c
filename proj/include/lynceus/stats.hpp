#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

namespace lynceus {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

inline double normal_pdf(double z) noexcept {
  return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}

inline double normal_cdf(double z) noexcept {
  return 0.5 * std::erfc(-z / std::numbers::sqrt2);
}

/// 1 - Phi(z), accurate in the upper tail.
inline double normal_sf(double z) noexcept {
  return 0.5 * std::erfc(z / std::numbers::sqrt2);
}

/// lambda(a) - a, where lambda(a) = phi(a) / (1 - Phi(a)) is the inverse Mills
/// ratio. Always > 0. Computed directly so that mu + sigma * lambda(a) keeps
/// its margin above the truncation point when a is large.
inline double mills_excess(double a) noexcept {
  if (a < 8.0) return normal_pdf(a) / normal_sf(a) - a;
  // Tail continued fraction: lambda(a) = a + 1/(a + 2/(a + 3/(a + ...))).
  double t = a;
  for (int k = 40; k >= 2; --k) t = a + k / t;
  return 1.0 / t;
}

inline double inverse_mills_ratio(double a) noexcept { return a + mills_excess(a); }

inline double mean(std::span<const double> xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

/// Sample standard deviation (n - 1 denominator); zero for fewer than two values.
inline double sample_stddev(std::span<const double> xs) {
  if (xs.size() < 2) return 0.0;
  const double m = mean(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

/// Nearest-rank quantile: the ceil(q * n)-th smallest value (1-based), q in (0, 1].
inline double quantile_nearest_rank(std::vector<double> xs, double q) {
  if (xs.empty()) throw std::invalid_argument("quantile of empty sample");
  if (!(q > 0.0 && q <= 1.0)) throw std::invalid_argument("quantile fraction must lie in (0, 1]");
  std::sort(xs.begin(), xs.end());
  auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(xs.size())));
  rank = std::clamp<std::size_t>(rank, 1, xs.size());
  return xs[rank - 1];
}

/// Linear-interpolation quantile (the "type 7" rule): position q * (n - 1).
/// Infinite values are allowed; an infinite neighbour only propagates when it
/// carries non-zero interpolation weight.
inline double quantile_linear(std::vector<double> xs, double q) {
  if (xs.empty()) throw std::invalid_argument("quantile of empty sample");
  if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("quantile fraction must lie in [0, 1]");
  std::sort(xs.begin(), xs.end());
  const double pos = q * static_cast<double>(xs.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, xs.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  if (frac == 0.0 || lo == hi) return xs[lo];
  if (std::isinf(xs[hi]) || std::isinf(xs[lo])) return xs[hi];
  return xs[lo] + frac * (xs[hi] - xs[lo]);
}

}  // namespace lynceus

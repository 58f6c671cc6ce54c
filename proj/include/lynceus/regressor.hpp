#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "lynceus/config_space.hpp"
#include "lynceus/rng.hpp"
#include "lynceus/stats.hpp"

namespace lynceus {

/// One explored configuration. `cost` is what the model is fed: the observed
/// cost, or an estimate when the run was cancelled.
struct Sample {
  std::size_t config = 0;
  double cost = 0.0;
  bool feasible = false;   // ran to completion within the runtime limit
  bool timed_out = false;  // cancelled; cost is an estimate

  bool operator==(const Sample&) const = default;
};

/// The training set S. Configurations are unique and costs positive.
class TrainingSet {
 public:
  TrainingSet() = default;

  void add(const Sample& s) {
    if (!(s.cost > 0.0) || !std::isfinite(s.cost))
      throw std::invalid_argument("training cost must be positive and finite");
    if (contains(s.config))
      throw std::invalid_argument("configuration " + std::to_string(s.config) + " already in training set");
    samples_.push_back(s);
  }

  bool contains(std::size_t config) const {
    return std::any_of(samples_.begin(), samples_.end(), [&](const Sample& s) { return s.config == config; });
  }

  std::size_t size() const noexcept { return samples_.size(); }
  bool empty() const noexcept { return samples_.empty(); }
  std::span<const Sample> samples() const noexcept { return samples_; }
  const Sample& operator[](std::size_t i) const { return samples_[i]; }

  double max_cost() const {
    double m = 0.0;
    for (const auto& s : samples_) m = std::max(m, s.cost);
    return m;
  }

 private:
  std::vector<Sample> samples_;
};

struct GaussianPrediction {
  double mean = 0.0;
  double stddev = 0.0;
};

inline double prob_below(const GaussianPrediction& p, double threshold) {
  if (threshold == kInf) return 1.0;
  if (threshold == -kInf) return 0.0;
  return normal_cdf((threshold - p.mean) / p.stddev);
}

struct TreeOptions {
  std::size_t min_leaf = 2;
};

/// CART regression tree: splits on maximal variance reduction, thresholds at
/// midpoints between adjacent feature values present in the node.
class RegressionTree {
 public:
  struct Node {
    std::int32_t feature = -1;  // -1 for leaves
    double threshold = 0.0;     // go left when value <= threshold
    std::uint16_t split_bin = 0;  // equivalently, when bin <= split_bin
    std::int32_t left = -1;
    std::int32_t right = -1;
    double value = 0.0;
  };

  /// `rows[i]` is the configuration of training point i (multiplicity allowed),
  /// `targets[i]` its cost. Repeated configurations must carry equal targets.
  static RegressionTree fit(const FeatureTable& features, std::span<const std::size_t> rows,
                            std::span<const double> targets, const TreeOptions& opts = {}) {
    RegressionTree tree;
    if (rows.empty()) throw std::invalid_argument("cannot fit a tree on no data");
    Builder b(features, rows, targets, opts, tree.nodes_);
    b.run();
    return tree;
  }

  double predict(std::span<const double> x) const {
    std::int32_t n = 0;
    while (nodes_[static_cast<std::size_t>(n)].feature >= 0) {
      const auto& node = nodes_[static_cast<std::size_t>(n)];
      n = x[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left : node.right;
    }
    return nodes_[static_cast<std::size_t>(n)].value;
  }

  /// Same result as predict() for a point of the feature table, from its bins.
  double predict_bins(std::span<const std::uint16_t> x) const {
    std::int32_t n = 0;
    while (nodes_[static_cast<std::size_t>(n)].feature >= 0) {
      const auto& node = nodes_[static_cast<std::size_t>(n)];
      n = x[static_cast<std::size_t>(node.feature)] <= node.split_bin ? node.left : node.right;
    }
    return nodes_[static_cast<std::size_t>(n)].value;
  }

  std::span<const Node> nodes() const noexcept { return nodes_; }

 private:
  // Histogram split search over (count, sum) per (feature, level) bin.
  // Duplicate rows of the bootstrap are merged into weighted entries; the
  // larger child's histogram is the parent's minus the smaller child's.
  struct Builder {
    struct Entry {
      std::size_t config;
      std::uint32_t weight;
      double y;
    };
    struct Histogram {
      std::vector<std::uint32_t> count;
      std::vector<double> sum;
    };

    const FeatureTable& features;
    const TreeOptions& opts;
    std::vector<Node>& nodes;
    std::size_t width;
    std::size_t total_bins = 0;
    std::vector<Entry> entries;          // partitioned in place
    std::vector<std::uint16_t> xb;       // entry bins, indexed by entry id
    std::vector<std::uint32_t> order;    // entry ids
    std::vector<std::uint32_t> scratch;
    std::vector<std::size_t> offset;     // per feature, into a histogram
    std::vector<Histogram> stack;        // one per depth

    Builder(const FeatureTable& f, std::span<const std::size_t> rows, std::span<const double> y,
            const TreeOptions& o, std::vector<Node>& out)
        : features(f), opts(o), nodes(out), width(f.width) {
      thread_local std::vector<std::int32_t> slot_of;
      slot_of.assign(f.configs, -1);
      for (std::size_t i = 0; i < rows.size(); ++i) {
        auto& slot = slot_of[rows[i]];
        if (slot < 0) {
          slot = static_cast<std::int32_t>(entries.size());
          entries.push_back({rows[i], 0, y[i]});
        }
        ++entries[static_cast<std::size_t>(slot)].weight;
      }
      xb.resize(entries.size() * width);
      order.resize(entries.size());
      for (std::uint32_t e = 0; e < entries.size(); ++e) {
        const auto src = f.bin_row(entries[e].config);
        std::copy(src.begin(), src.end(), xb.begin() + static_cast<std::ptrdiff_t>(e * width));
        order[e] = e;
      }
      for (auto c : f.bin_count) {
        offset.push_back(total_bins);
        total_bins += c;
      }
      nodes.reserve(2 * entries.size());
    }

    Histogram& level(std::size_t depth) {
      if (stack.size() <= depth) stack.resize(depth + 1, Histogram{std::vector<std::uint32_t>(total_bins),
                                                                    std::vector<double>(total_bins)});
      return stack[depth];
    }

    void accumulate(std::size_t begin, std::size_t end, Histogram& h) {
      std::fill(h.count.begin(), h.count.end(), 0u);
      std::fill(h.sum.begin(), h.sum.end(), 0.0);
      for (std::size_t i = begin; i < end; ++i) {
        const auto e = order[i];
        const auto* row = &xb[e * width];
        const auto w = entries[e].weight;
        const double s = w * entries[e].y;
        for (std::size_t f = 0; f < width; ++f) {
          const auto slot = offset[f] + row[f];
          h.count[slot] += w;
          h.sum[slot] += s;
        }
      }
    }

    void run() {
      accumulate(0, order.size(), level(0));
      build(0, order.size(), 0);
    }

    // The histogram at stack[depth] must hold this node's entries on entry.
    std::int32_t build(std::size_t begin, std::size_t end, std::size_t depth) {
      const auto id = static_cast<std::int32_t>(nodes.size());
      nodes.push_back({});
      std::size_t n = 0;
      double total = 0.0;
      double lo = kInf, hi = -kInf;
      for (std::size_t i = begin; i < end; ++i) {
        const auto& e = entries[order[i]];
        n += e.weight;
        total += e.weight * e.y;
        lo = std::min(lo, e.y);
        hi = std::max(hi, e.y);
      }
      nodes[static_cast<std::size_t>(id)].value = total / static_cast<double>(n);
      if (n < 2 * opts.min_leaf || lo == hi) return id;

      // Score of a partition: sumL^2/nL + sumR^2/nR, the parent SSE minus the
      // children SSE up to a constant. Ties keep the first candidate found.
      const Histogram& h = stack[depth];
      const double parent_score = total * total / static_cast<double>(n);
      double best_score = parent_score;
      std::int32_t best_feature = -1;
      std::size_t best_bin = 0, best_next = 0;
      for (std::size_t f = 0; f < width; ++f) {
        const std::size_t bins = features.bin_count[f];
        const auto* c = &h.count[offset[f]];
        const auto* sm = &h.sum[offset[f]];
        std::size_t n_left = 0;
        double s_left = 0.0;
        std::size_t prev = bins;  // last non-empty bin on the left
        for (std::size_t b = 0; b < bins; ++b) {
          if (c[b] == 0) continue;
          if (prev != bins && n_left >= opts.min_leaf && n - n_left >= opts.min_leaf) {
            const double s_right = total - s_left;
            const double score = s_left * s_left / static_cast<double>(n_left) +
                                 s_right * s_right / static_cast<double>(n - n_left);
            if (score > best_score * (1.0 + 1e-12)) {
              best_score = score;
              best_feature = static_cast<std::int32_t>(f);
              best_bin = prev;
              best_next = b;
            }
          }
          n_left += c[b];
          s_left += sm[b];
          prev = b;
        }
      }
      if (best_feature < 0) return id;

      const auto f = static_cast<std::size_t>(best_feature);
      const double threshold = 0.5 * (features.bin_value[f][best_bin] + features.bin_value[f][best_next]);
      // Levels absent from this node but lying between the two neighbours
      // follow the value threshold.
      std::size_t split_bin = best_bin;
      while (split_bin + 1 < best_next && features.bin_value[f][split_bin + 1] <= threshold) ++split_bin;

      // Stable partition: child contents depend only on the inputs.
      scratch.clear();
      std::size_t mid = begin;
      for (std::size_t i = begin; i < end; ++i) {
        if (xb[order[i] * width + f] <= best_bin)
          order[mid++] = order[i];
        else
          scratch.push_back(order[i]);
      }
      std::copy(scratch.begin(), scratch.end(), order.begin() + static_cast<std::ptrdiff_t>(mid));

      // Children histograms: scan the smaller side, subtract for the other.
      // The left child is built first and may reuse deeper levels, so the
      // right child's histogram is parked in this level until then.
      auto& child = level(depth + 1);
      auto& parent = stack[depth];
      const bool left_small = mid - begin <= end - mid;
      if (left_small)
        accumulate(begin, mid, child);
      else
        accumulate(mid, end, child);
      for (std::size_t k = 0; k < total_bins; ++k) {
        parent.count[k] -= child.count[k];
        parent.sum[k] -= child.sum[k];
      }
      // Now `child` holds the smaller side, stack[depth] the larger.
      if (!left_small) std::swap(child, stack[depth]);
      // `child` holds the left child's histogram, stack[depth] the right's.
      const auto left = build(begin, mid, depth + 1);
      std::swap(stack[depth], stack[depth + 1]);
      const auto right = build(mid, end, depth + 1);

      auto& node = nodes[static_cast<std::size_t>(id)];
      node.feature = best_feature;
      node.threshold = threshold;
      node.split_bin = static_cast<std::uint16_t>(split_bin);
      node.left = left;
      node.right = right;
      return id;
    }
  };

  std::vector<Node> nodes_;
};

/// Bagging ensemble of regression trees summarized as N(mu, sigma).
class EnsembleModel {
 public:
  static constexpr std::size_t kDefaultTrees = 10;

  EnsembleModel(std::shared_ptr<const FeatureTable> features, std::vector<RegressionTree> trees,
                double sigma_floor, std::uint64_t seed)
      : features_(std::move(features)), trees_(std::move(trees)), sigma_floor_(sigma_floor), seed_(seed) {}

  GaussianPrediction predict(std::size_t config) const {
    const auto x = features_->bin_row(config);
    std::array<double, 64> small{};
    std::vector<double> big;
    std::span<double> outs;
    if (trees_.size() <= small.size()) {
      outs = std::span<double>(small.data(), trees_.size());
    } else {
      big.resize(trees_.size());
      outs = big;
    }
    for (std::size_t t = 0; t < trees_.size(); ++t) outs[t] = trees_[t].predict_bins(x);
    return summarize(outs, sigma_floor_);
  }

  /// Same values as predict(), evaluated tree-major over many configurations.
  void predict_many(std::span<const std::size_t> configs, std::span<GaussianPrediction> out) const {
    const std::size_t nt = trees_.size();
    thread_local std::vector<double> buf;
    buf.resize(configs.size() * nt);
    for (std::size_t t = 0; t < nt; ++t)
      for (std::size_t i = 0; i < configs.size(); ++i)
        buf[i * nt + t] = trees_[t].predict_bins(features_->bin_row(configs[i]));
    for (std::size_t i = 0; i < configs.size(); ++i)
      out[i] = summarize(std::span<const double>(buf.data() + i * nt, nt), sigma_floor_);
  }

  std::vector<double> tree_outputs(std::size_t config) const {
    std::vector<double> out;
    for (const auto& t : trees_) out.push_back(t.predict_bins(features_->bin_row(config)));
    return out;
  }

  /// mu = mean of tree outputs, sigma = max(sample std-dev, floor).
  static GaussianPrediction summarize(std::span<const double> outputs, double sigma_floor) {
    return {mean(outputs), std::max(sample_stddev(outputs), sigma_floor)};
  }

  double sigma_floor() const noexcept { return sigma_floor_; }
  std::uint64_t seed() const noexcept { return seed_; }
  std::size_t tree_count() const noexcept { return trees_.size(); }
  std::span<const RegressionTree> trees() const noexcept { return trees_; }

 private:
  std::shared_ptr<const FeatureTable> features_;
  std::vector<RegressionTree> trees_;
  double sigma_floor_;
  std::uint64_t seed_;
};

class InsufficientData : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct EnsembleOptions {
  std::size_t trees = EnsembleModel::kDefaultTrees;
  TreeOptions tree;
  double sigma_floor_fraction = 1e-6;  // of the largest training cost
};

/// Each tree sees a bootstrap resample of S (|S| draws with replacement),
/// seeded from (seed, tree index) alone.
inline EnsembleModel train(std::shared_ptr<const FeatureTable> features, const TrainingSet& s,
                           std::uint64_t seed, const EnsembleOptions& opts = {}) {
  if (s.size() < 2) throw InsufficientData("training needs at least 2 samples, got " + std::to_string(s.size()));
  const std::size_t n = s.size();
  std::vector<std::size_t> rows(n);
  std::vector<double> targets(n);
  std::vector<RegressionTree> trees;
  trees.reserve(opts.trees);
  for (std::size_t t = 0; t < opts.trees; ++t) {
    Rng rng(derive_seed(seed, {stream::tree, t}));
    for (std::size_t i = 0; i < n; ++i) {
      const auto& pick = s[rng.index(n)];
      rows[i] = pick.config;
      targets[i] = pick.cost;
    }
    trees.push_back(RegressionTree::fit(*features, rows, targets, opts.tree));
  }
  return EnsembleModel(std::move(features), std::move(trees), opts.sigma_floor_fraction * s.max_cost(), seed);
}

/// Trainer functor for the planner and optimizer.
struct BaggingTrainer {
  std::shared_ptr<const FeatureTable> features;
  EnsembleOptions options{};

  EnsembleModel operator()(const TrainingSet& s, std::uint64_t seed) const {
    return train(features, s, seed, options);
  }
};

}  // namespace lynceus

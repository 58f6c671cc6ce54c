#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

namespace lynceus {

enum class DimensionKind { numeric, categorical };

/// One tunable parameter and its ordered set of admissible levels.
///
/// Numeric levels keep both the textual label they were declared with (so a
/// dataset round-trips byte for byte) and the parsed value fed to the model.
class Dimension {
 public:
  static Dimension numeric(std::string name, std::vector<double> values,
                           std::vector<std::string> labels = {}) {
    Dimension d;
    d.name_ = std::move(name);
    d.kind_ = DimensionKind::numeric;
    if (labels.empty()) {
      for (double v : values) labels.push_back(format_number(v));
    }
    if (labels.size() != values.size())
      throw std::invalid_argument("dimension '" + d.name_ + "': label/value count mismatch");
    d.values_ = std::move(values);
    d.labels_ = std::move(labels);
    d.validate();
    return d;
  }

  static Dimension categorical(std::string name, std::vector<std::string> labels) {
    Dimension d;
    d.name_ = std::move(name);
    d.kind_ = DimensionKind::categorical;
    d.labels_ = std::move(labels);
    d.validate();
    return d;
  }

  const std::string& name() const noexcept { return name_; }
  DimensionKind kind() const noexcept { return kind_; }
  bool is_numeric() const noexcept { return kind_ == DimensionKind::numeric; }
  std::size_t size() const noexcept { return labels_.size(); }
  const std::string& label(std::size_t level) const { return labels_.at(level); }
  double value(std::size_t level) const { return values_.at(level); }
  std::span<const std::string> labels() const noexcept { return labels_; }
  std::span<const double> values() const noexcept { return values_; }

  /// Number of model features this dimension contributes.
  std::size_t feature_width() const noexcept { return is_numeric() ? 1 : labels_.size(); }

  std::optional<std::size_t> find(const std::string& label) const {
    auto it = std::find(labels_.begin(), labels_.end(), label);
    if (it != labels_.end()) return static_cast<std::size_t>(it - labels_.begin());
    if (is_numeric()) {
      double v = 0.0;
      if (parse_number(label, v)) {
        auto jt = std::find(values_.begin(), values_.end(), v);
        if (jt != values_.end()) return static_cast<std::size_t>(jt - values_.begin());
      }
    }
    return std::nullopt;
  }

  bool operator==(const Dimension&) const = default;

  static bool parse_number(const std::string& text, double& out) {
    if (text.empty()) return false;
    std::size_t pos = 0;
    try {
      out = std::stod(text, &pos);
    } catch (const std::exception&) {
      return false;
    }
    return pos == text.size() && std::isfinite(out);
  }

  static std::string format_number(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
  }

 private:
  void validate() const {
    if (name_.empty()) throw std::invalid_argument("dimension with empty name");
    if (labels_.empty()) throw std::invalid_argument("dimension '" + name_ + "' has no levels");
    std::unordered_set<std::string> seen(labels_.begin(), labels_.end());
    if (seen.size() != labels_.size())
      throw std::invalid_argument("dimension '" + name_ + "' has duplicate levels");
    if (is_numeric()) {
      for (std::size_t i = 1; i < values_.size(); ++i)
        if (!(values_[i - 1] < values_[i]))
          throw std::invalid_argument("numeric dimension '" + name_ +
                                      "' levels must be strictly ascending");
    }
  }

  std::string name_;
  DimensionKind kind_ = DimensionKind::categorical;
  std::vector<std::string> labels_;
  std::vector<double> values_;
};

struct Configuration {
  std::size_t index = 0;
  std::vector<std::size_t> levels;

  bool operator==(const Configuration&) const = default;
};

/// Dense, configuration-major feature matrix for every point of a space, plus
/// the per-feature level ("bin") of every point. Trees train on bins and
/// predict on values.
struct FeatureTable {
  std::size_t configs = 0;
  std::size_t width = 0;
  std::vector<double> values;          // configs x width
  std::vector<std::uint16_t> bins;     // configs x width
  std::vector<std::size_t> bin_count;  // per feature
  std::vector<std::vector<double>> bin_value;  // per feature, per bin

  std::span<const double> row(std::size_t config) const {
    return {values.data() + config * width, width};
  }
  std::span<const std::uint16_t> bin_row(std::size_t config) const {
    return {bins.data() + config * width, width};
  }
};

/// Discrete product space. Mixed-radix indexing with the last dimension
/// varying fastest.
class ConfigSpace {
 public:
  explicit ConfigSpace(std::vector<Dimension> dims) : dims_(std::move(dims)) {
    if (dims_.empty()) throw std::invalid_argument("configuration space needs at least one dimension");
    std::unordered_set<std::string> names;
    cardinality_ = 1;
    for (const auto& d : dims_) {
      if (!names.insert(d.name()).second)
        throw std::invalid_argument("duplicate dimension name '" + d.name() + "'");
      cardinality_ *= d.size();
    }
    stride_.assign(dims_.size(), 1);
    for (std::size_t i = dims_.size() - 1; i > 0; --i) stride_[i - 1] = stride_[i] * dims_[i].size();
    build_features();
  }

  std::span<const Dimension> dimensions() const noexcept { return dims_; }
  const Dimension& dimension(std::size_t i) const { return dims_.at(i); }
  std::size_t dimension_count() const noexcept { return dims_.size(); }
  std::size_t cardinality() const noexcept { return cardinality_; }

  std::optional<std::size_t> find_dimension(const std::string& name) const {
    for (std::size_t i = 0; i < dims_.size(); ++i)
      if (dims_[i].name() == name) return i;
    return std::nullopt;
  }

  Configuration encode(std::span<const std::size_t> levels) const {
    if (levels.size() != dims_.size())
      throw std::invalid_argument("expected " + std::to_string(dims_.size()) + " level indices, got " +
                                  std::to_string(levels.size()));
    std::size_t index = 0;
    for (std::size_t i = 0; i < dims_.size(); ++i) {
      if (levels[i] >= dims_[i].size())
        throw std::invalid_argument("level index " + std::to_string(levels[i]) +
                                    " out of range for dimension '" + dims_[i].name() + "'");
      index += levels[i] * stride_[i];
    }
    return {index, std::vector<std::size_t>(levels.begin(), levels.end())};
  }

  Configuration decode(std::size_t index) const {
    if (index >= cardinality_)
      throw std::invalid_argument("configuration index " + std::to_string(index) +
                                  " out of range [0, " + std::to_string(cardinality_) + ")");
    Configuration c{index, std::vector<std::size_t>(dims_.size())};
    for (std::size_t i = 0; i < dims_.size(); ++i) {
      c.levels[i] = index / stride_[i];
      index %= stride_[i];
    }
    return c;
  }

  std::size_t level_of(std::size_t index, std::size_t dim) const {
    return (index / stride_[dim]) % dims_[dim].size();
  }

  /// Numeric levels at raw value; categorical levels one-hot.
  std::vector<double> featurize(const Configuration& x) const {
    auto checked = encode(x.levels);
    if (checked.index != x.index)
      throw std::invalid_argument("configuration index does not match its levels");
    auto r = features_->row(x.index);
    return {r.begin(), r.end()};
  }

  std::size_t feature_width() const noexcept { return features_->width; }
  const FeatureTable& features() const noexcept { return *features_; }
  std::shared_ptr<const FeatureTable> shared_features() const noexcept { return features_; }

  std::string describe(std::size_t index) const {
    auto c = decode(index);
    std::string out = "(";
    for (std::size_t i = 0; i < dims_.size(); ++i) {
      if (i) out += ", ";
      out += dims_[i].name() + "=" + dims_[i].label(c.levels[i]);
    }
    return out + ")";
  }

  bool operator==(const ConfigSpace& other) const { return dims_ == other.dims_; }

 private:
  void build_features() {
    auto t = std::make_shared<FeatureTable>();
    t->configs = cardinality_;
    for (const auto& d : dims_) {
      if (d.is_numeric()) {
        t->bin_count.push_back(d.size());
        t->bin_value.emplace_back(d.values().begin(), d.values().end());
      } else {
        for (std::size_t l = 0; l < d.size(); ++l) {
          t->bin_count.push_back(2);
          t->bin_value.push_back({0.0, 1.0});
        }
      }
    }
    t->width = t->bin_count.size();
    t->values.resize(t->configs * t->width);
    t->bins.resize(t->configs * t->width);
    for (std::size_t idx = 0; idx < cardinality_; ++idx) {
      std::size_t f = 0;
      for (std::size_t i = 0; i < dims_.size(); ++i) {
        const std::size_t lvl = level_of(idx, i);
        const auto& d = dims_[i];
        if (d.is_numeric()) {
          t->values[idx * t->width + f] = d.value(lvl);
          t->bins[idx * t->width + f] = static_cast<std::uint16_t>(lvl);
          ++f;
        } else {
          for (std::size_t l = 0; l < d.size(); ++l, ++f) {
            t->values[idx * t->width + f] = (l == lvl) ? 1.0 : 0.0;
            t->bins[idx * t->width + f] = (l == lvl) ? 1 : 0;
          }
        }
      }
    }
    features_ = std::move(t);
  }

  std::vector<Dimension> dims_;
  std::vector<std::size_t> stride_;
  std::size_t cardinality_ = 0;
  std::shared_ptr<const FeatureTable> features_;
};

}  // namespace lynceus

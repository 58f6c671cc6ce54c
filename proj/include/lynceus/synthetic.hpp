#pragma once

#include <cmath>
#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "lynceus/config_space.hpp"
#include "lynceus/dataset.hpp"
#include "lynceus/rng.hpp"

namespace lynceus {

/// Parameters of a synthetic job-performance table.
///
/// Runtime is built in log space:
///   ln T(x) = base + sum_d effect_d(x_d) + sum_(a,b) w_ab * (2u_a - 1)(2u_b - 1) + noise
/// where u_d in [0, 1] is the position of x_d among its dimension's levels and
///   effect_d = curvature * (u_d - center)^2 + log_slope * ln(value) + offset[level].
/// The per-hour price depends only on the price dimension (and optionally a
/// count dimension), so cost = T(x) * price(x) / 3600.
struct SyntheticSpec {
  struct Dim {
    std::string name;
    bool numeric = true;
    std::vector<std::string> levels;  // labels; numeric labels must parse
    double curvature = 0.0;
    double center = 0.5;
    double log_slope = 0.0;
    std::vector<double> offsets;  // optional, per level
  };
  struct Interaction {
    std::string a;
    std::string b;
    double weight = 0.0;
  };
  struct Price {
    std::string dimension;              // categorical or numeric dimension keyed by level
    std::vector<double> per_hour;       // per level of `dimension`
    std::optional<std::string> count_dimension;  // numeric; multiplies the price
    std::vector<double> units_per_vm;   // per level of `dimension`; count / units = #VMs
  };

  std::string name = "synthetic";
  std::vector<Dim> dimensions;
  std::vector<Interaction> interactions;
  Price price;
  double base_log_runtime = 0.0;
  double noise = 0.0;            // std-dev of the multiplicative log-normal noise
  double cutoff = 0.0;           // seconds; 0 disables
  bool progress_curves = true;
  double progress_exponent = 0.7;  // progress(t) = (t / T)^k
  std::size_t progress_points = 5;

  /// Five dimensions shaped like a distributed-training job: three
  /// hyper-parameters and two cloud parameters, 3*2*2*4*8 = 384 points.
  static SyntheticSpec table_shaped() {
    SyntheticSpec s;
    s.name = "synthetic-384";
    s.dimensions = {
        {"learning_rate", true, {"0.00001", "0.0001", "0.001"}, 3.0, 0.85, 0.0, {}},
        {"batch_size", true, {"16", "256"}, 0.0, 0.5, 0.0, {0.0, 0.45}},
        {"training_mode", false, {"sync", "async"}, 0.0, 0.5, 0.0, {0.0, 0.35}},
        {"vm_type", false, {"t2.small", "t2.medium", "t2.xlarge", "t2.2xlarge"}, 0.0, 0.5, 0.0,
         {0.55, 0.3, 0.0, 0.1}},
        {"vcpus", true, {"8", "16", "32", "48", "64", "80", "96", "112"}, 2.0, 0.3, -0.7, {}},
    };
    s.interactions = {
        {"batch_size", "vcpus", -0.6},
        {"training_mode", "vcpus", 0.7},
        {"learning_rate", "batch_size", 0.4},
        {"training_mode", "vm_type", -0.35},
        {"batch_size", "vm_type", 0.3},
    };
    s.price.dimension = "vm_type";
    s.price.per_hour = {0.023, 0.0464, 0.1856, 0.3712};
    s.price.count_dimension = "vcpus";
    s.price.units_per_vm = {1, 2, 4, 8};
    s.base_log_runtime = std::log(150.0);
    s.noise = 0.15;
    s.cutoff = 600.0;
    return s;
  }

  /// Same shape with every interaction and the noise removed: the log cost is
  /// additive across dimensions.
  static SyntheticSpec separable() {
    auto s = table_shaped();
    s.name = "synthetic-384-separable";
    s.interactions.clear();
    s.noise = 0.0;
    s.cutoff = 0.0;
    return s;
  }
};

inline void to_json(nlohmann::json& j, const SyntheticSpec& s) {
  j = nlohmann::json{{"name", s.name},
                     {"base_log_runtime", s.base_log_runtime},
                     {"noise", s.noise},
                     {"cutoff", s.cutoff},
                     {"progress_curves", s.progress_curves},
                     {"progress_exponent", s.progress_exponent},
                     {"progress_points", s.progress_points}};
  for (const auto& d : s.dimensions)
    j["dimensions"].push_back({{"name", d.name},
                               {"kind", d.numeric ? "numeric" : "categorical"},
                               {"levels", d.levels},
                               {"curvature", d.curvature},
                               {"center", d.center},
                               {"log_slope", d.log_slope},
                               {"offsets", d.offsets}});
  j["interactions"] = nlohmann::json::array();
  for (const auto& i : s.interactions) j["interactions"].push_back({{"a", i.a}, {"b", i.b}, {"weight", i.weight}});
  j["price"] = {{"dimension", s.price.dimension}, {"per_hour", s.price.per_hour}, {"units_per_vm", s.price.units_per_vm}};
  if (s.price.count_dimension) j["price"]["count_dimension"] = *s.price.count_dimension;
}

inline void from_json(const nlohmann::json& j, SyntheticSpec& s) {
  s = SyntheticSpec{};
  s.name = j.value("name", std::string("synthetic"));
  s.base_log_runtime = j.value("base_log_runtime", 0.0);
  s.noise = j.value("noise", 0.0);
  s.cutoff = j.value("cutoff", 0.0);
  s.progress_curves = j.value("progress_curves", true);
  s.progress_exponent = j.value("progress_exponent", 0.7);
  s.progress_points = j.value("progress_points", std::size_t{5});
  for (const auto& d : j.at("dimensions")) {
    SyntheticSpec::Dim dim;
    dim.name = d.at("name").get<std::string>();
    dim.numeric = d.value("kind", std::string("numeric")) == "numeric";
    for (const auto& l : d.at("levels")) dim.levels.push_back(l.is_string() ? l.get<std::string>() : l.dump());
    dim.curvature = d.value("curvature", 0.0);
    dim.center = d.value("center", 0.5);
    dim.log_slope = d.value("log_slope", 0.0);
    dim.offsets = d.value("offsets", std::vector<double>{});
    s.dimensions.push_back(std::move(dim));
  }
  if (j.contains("interactions"))
    for (const auto& i : j.at("interactions"))
      s.interactions.push_back({i.at("a").get<std::string>(), i.at("b").get<std::string>(), i.at("weight").get<double>()});
  const auto& p = j.at("price");
  s.price.dimension = p.at("dimension").get<std::string>();
  s.price.per_hour = p.at("per_hour").get<std::vector<double>>();
  s.price.units_per_vm = p.value("units_per_vm", std::vector<double>{});
  if (p.contains("count_dimension")) s.price.count_dimension = p.at("count_dimension").get<std::string>();
}

/// Builds the table. Pure function of (spec, seed). Warnings go to `warn`.
inline Dataset generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed,
                                  std::ostream& warn = std::cerr) {
  std::vector<Dimension> dims;
  for (const auto& d : spec.dimensions) {
    if (d.numeric) {
      std::vector<double> values;
      for (const auto& l : d.levels) {
        double v = 0.0;
        if (!Dimension::parse_number(l, v))
          throw std::invalid_argument("synthetic dimension '" + d.name + "': level '" + l + "' is not numeric");
        values.push_back(v);
      }
      dims.push_back(Dimension::numeric(d.name, values, d.levels));
    } else {
      dims.push_back(Dimension::categorical(d.name, d.levels));
    }
    if (!d.offsets.empty() && d.offsets.size() != d.levels.size())
      throw std::invalid_argument("synthetic dimension '" + d.name + "': offsets must match levels");
  }
  ConfigSpace space(std::move(dims));

  auto dim_index = [&](const std::string& name) {
    auto i = space.find_dimension(name);
    if (!i) throw std::invalid_argument("synthetic spec references unknown dimension '" + name + "'");
    return *i;
  };
  const auto price_dim = dim_index(spec.price.dimension);
  if (spec.price.per_hour.size() != space.dimension(price_dim).size())
    throw std::invalid_argument("synthetic price table must have one entry per level of '" +
                                spec.price.dimension + "'");
  std::optional<std::size_t> count_dim;
  if (spec.price.count_dimension) {
    count_dim = dim_index(*spec.price.count_dimension);
    if (!space.dimension(*count_dim).is_numeric())
      throw std::invalid_argument("price count dimension must be numeric");
    if (spec.price.units_per_vm.size() != spec.price.per_hour.size())
      throw std::invalid_argument("units_per_vm must have one entry per price level");
  }
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (const auto& i : spec.interactions) pairs.emplace_back(dim_index(i.a), dim_index(i.b));

  if (space.cardinality() == 1 || (spec.noise == 0.0 && spec.interactions.empty()))
    warn << "warning: synthetic spec '" << spec.name
         << "' is degenerate (single configuration or no noise and no interactions)\n";

  auto position = [&](std::size_t dim, std::size_t level) {
    const auto n = space.dimension(dim).size();
    return n == 1 ? 0.5 : static_cast<double>(level) / static_cast<double>(n - 1);
  };

  Rng rng(derive_seed(seed, stream::noise));
  std::vector<JobRecord> records;
  records.reserve(space.cardinality());
  for (std::size_t idx = 0; idx < space.cardinality(); ++idx) {
    const auto cfg = space.decode(idx);
    double log_t = spec.base_log_runtime;
    for (std::size_t d = 0; d < space.dimension_count(); ++d) {
      const auto& sd = spec.dimensions[d];
      const double u = position(d, cfg.levels[d]);
      log_t += sd.curvature * (u - sd.center) * (u - sd.center);
      if (space.dimension(d).is_numeric() && sd.log_slope != 0.0)
        log_t += sd.log_slope * std::log(space.dimension(d).value(cfg.levels[d]));
      if (!sd.offsets.empty()) log_t += sd.offsets[cfg.levels[d]];
    }
    for (std::size_t k = 0; k < pairs.size(); ++k) {
      const double ua = 2.0 * position(pairs[k].first, cfg.levels[pairs[k].first]) - 1.0;
      const double ub = 2.0 * position(pairs[k].second, cfg.levels[pairs[k].second]) - 1.0;
      log_t += spec.interactions[k].weight * ua * ub;
    }
    // One draw per configuration in index order, even when noise is zero.
    log_t += spec.noise * rng.normal();

    const double true_runtime = std::exp(log_t);
    JobRecord r;
    r.runtime = true_runtime;
    r.finished = true;
    if (spec.cutoff > 0.0 && true_runtime > spec.cutoff) {
      r.runtime = spec.cutoff;
      r.finished = false;
    }
    const auto pl = cfg.levels[price_dim];
    r.price_per_hour = spec.price.per_hour[pl];
    if (count_dim) r.price_per_hour *= space.dimension(*count_dim).value(cfg.levels[*count_dim]) / spec.price.units_per_vm[pl];

    if (spec.progress_curves && spec.progress_points > 0) {
      for (std::size_t p = 1; p <= spec.progress_points; ++p) {
        const double t = (p == spec.progress_points)
                             ? r.runtime
                             : r.runtime * static_cast<double>(p) / static_cast<double>(spec.progress_points);
        r.progress.push_back({t, std::pow(t / true_runtime, spec.progress_exponent)});
      }
      if (r.finished) r.progress.back().progress = 1.0;
    }
    records.push_back(std::move(r));
  }
  return Dataset(spec.name, std::move(space), std::move(records));
}

}  // namespace lynceus

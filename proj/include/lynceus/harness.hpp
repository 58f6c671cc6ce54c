#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "lynceus/dataset.hpp"
#include "lynceus/optimizer.hpp"
#include "lynceus/parallel.hpp"
#include "lynceus/stats.hpp"
#include "lynceus/synthetic.hpp"

namespace lynceus {

class SetupError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// lynceus: look-ahead planner with timeouts; bo-la: the same planner without
/// timeouts; bo: greedy EI_c per dollar; rnd: uniform random order.
enum class Method { lynceus, bo_la, bo, rnd };

inline std::string_view to_string(Method m) {
  switch (m) {
    case Method::lynceus: return "lynceus";
    case Method::bo_la: return "bo-la";
    case Method::bo: return "bo";
    case Method::rnd: return "rnd";
  }
  return "?";
}

inline std::optional<Method> parse_method(std::string_view s) {
  for (auto m : {Method::lynceus, Method::bo_la, Method::bo, Method::rnd})
    if (to_string(m) == s) return m;
  return std::nullopt;
}

/// Runtime limit: absolute seconds, or the runtime quantile that a fraction
/// of the configurations satisfies.
struct TmaxRule {
  enum class Kind { seconds, fraction };
  Kind kind = Kind::fraction;
  double value = 0.5;
};

/// Nearest-rank: the smallest runtime r such that at least a fraction f of
/// the configurations run within r.
inline double resolve_tmax(const Dataset& d, const TmaxRule& rule) {
  if (rule.kind == TmaxRule::Kind::seconds) {
    if (!(rule.value > 0.0) || !std::isfinite(rule.value)) throw SetupError("tmax seconds must be positive");
    return rule.value;
  }
  if (!(rule.value > 0.0 && rule.value <= 1.0))
    throw SetupError("tmax fraction must lie in (0, 1], got " + std::to_string(rule.value));
  std::vector<double> runtimes;
  for (const auto& r : d.records()) runtimes.push_back(r.runtime);
  return quantile_nearest_rank(std::move(runtimes), rule.value);
}

struct DatasetSource {
  std::optional<std::filesystem::path> path;
  std::optional<SyntheticSpec> synthetic;
  std::uint64_t synthetic_seed = 0;
};

inline Dataset load_source(const DatasetSource& src) {
  if (src.path) return load_dataset(*src.path);
  if (src.synthetic) return generate_synthetic(*src.synthetic, src.synthetic_seed);
  throw SetupError("experiment names no dataset");
}

struct ExperimentSpec {
  DatasetSource dataset;
  Method method = Method::lynceus;
  PlannerConfig planner{};
  std::optional<TimeoutPolicy> timeout;  // default: tg for lynceus, none for the baselines
  TmaxRule tmax{};
  double budget = kInf;
  std::size_t runs = 100;
  std::uint64_t seed = 0;
  std::optional<std::size_t> bootstrap;
  std::optional<double> stop_at_cno;
  std::optional<std::size_t> max_iterations;

  TimeoutPolicy effective_timeout() const {
    if (method == Method::lynceus) return timeout.value_or(TimeoutPolicy::truncated_gaussian);
    return timeout.value_or(TimeoutPolicy::none);
  }

  void validate() const {
    if (runs < 1) throw SetupError("runs must be at least 1");
    if (method == Method::rnd && timeout && *timeout != TimeoutPolicy::none)
      throw SetupError("method rnd takes no timeout policy");
    if (!(budget > 0.0)) throw SetupError("budget must be positive");
    if (planner.nodes < 1) throw SetupError("planner nodes must be at least 1");
    if (!(planner.discount >= 0.0 && planner.discount <= 1.0)) throw SetupError("planner discount must lie in [0, 1]");
    if (stop_at_cno && !(*stop_at_cno >= 1.0)) throw SetupError("stop_at_cno must be at least 1");
    if (tmax.kind == TmaxRule::Kind::fraction && !(tmax.value > 0.0 && tmax.value <= 1.0))
      throw SetupError("tmax fraction must lie in (0, 1]");
    if (tmax.kind == TmaxRule::Kind::seconds && !(tmax.value > 0.0 && std::isfinite(tmax.value)))
      throw SetupError("tmax seconds must be positive");
  }
};

/// JSON form:
///   {"dataset": "file.csv" | {"synthetic": "default"|"separable"|{...}, "seed": 1},
///    "method": "lynceus", "planner": {"lookahead": 2, "nodes": 3, "discount": 0.9},
///    "timeout": "tg", "tmax": {"fraction": 0.5} | {"seconds": 60},
///    "budget": null, "runs": 100, "seed": 0, "bootstrap": 12,
///    "stop_at_cno": 1.1, "max_iterations": 50}
/// Relative dataset paths resolve against `base_dir`.
inline ExperimentSpec parse_experiment_spec(const nlohmann::json& j, const std::filesystem::path& base_dir = {}) {
  static const std::set<std::string> known = {"dataset", "method", "planner", "timeout", "tmax", "budget", "runs",
                                              "seed", "bootstrap", "stop_at_cno", "max_iterations"};
  if (!j.is_object()) throw SetupError("experiment spec must be a JSON object");
  for (const auto& [k, v] : j.items())
    if (!known.count(k)) throw SetupError("experiment spec: unknown key '" + k + "'");

  ExperimentSpec s;
  try {
    if (!j.contains("dataset")) throw SetupError("experiment spec: missing 'dataset'");
    const auto& ds = j.at("dataset");
    if (ds.is_string()) {
      std::filesystem::path p = ds.get<std::string>();
      s.dataset.path = p.is_absolute() || base_dir.empty() ? p : base_dir / p;
    } else {
      const auto& syn = ds.at("synthetic");
      if (syn.is_string()) {
        const auto name = syn.get<std::string>();
        if (name == "default")
          s.dataset.synthetic = SyntheticSpec::table_shaped();
        else if (name == "separable")
          s.dataset.synthetic = SyntheticSpec::separable();
        else
          throw SetupError("experiment spec: unknown synthetic preset '" + name + "'");
      } else {
        s.dataset.synthetic = syn.get<SyntheticSpec>();
      }
      s.dataset.synthetic_seed = ds.value("seed", std::uint64_t{0});
    }
    if (j.contains("method")) {
      const auto m = parse_method(j.at("method").get<std::string>());
      if (!m) throw SetupError("experiment spec: unknown method '" + j.at("method").get<std::string>() + "'");
      s.method = *m;
    }
    if (j.contains("planner")) {
      const auto& p = j.at("planner");
      for (const auto& [k, v] : p.items())
        if (k != "lookahead" && k != "nodes" && k != "discount")
          throw SetupError("experiment spec: unknown planner key '" + k + "'");
      s.planner.lookahead = p.value("lookahead", s.planner.lookahead);
      s.planner.nodes = p.value("nodes", s.planner.nodes);
      s.planner.discount = p.value("discount", s.planner.discount);
    }
    if (j.contains("timeout")) {
      const auto name = j.at("timeout").get<std::string>();
      const auto t = parse_timeout_policy(name);
      if (!t) throw SetupError("experiment spec: unknown timeout policy '" + name + "'");
      s.timeout = t;
    }
    if (j.contains("tmax")) {
      const auto& t = j.at("tmax");
      if (t.contains("seconds") == t.contains("fraction"))
        throw SetupError("experiment spec: tmax needs exactly one of 'seconds' or 'fraction'");
      if (t.contains("seconds"))
        s.tmax = {TmaxRule::Kind::seconds, t.at("seconds").get<double>()};
      else
        s.tmax = {TmaxRule::Kind::fraction, t.at("fraction").get<double>()};
    }
    if (j.contains("budget") && !j.at("budget").is_null()) s.budget = j.at("budget").get<double>();
    if (j.contains("runs")) {
      const auto runs = j.at("runs").get<std::int64_t>();
      if (runs < 1) throw SetupError("runs must be at least 1");
      s.runs = static_cast<std::size_t>(runs);
    }
    if (j.contains("seed")) s.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("bootstrap")) s.bootstrap = j.at("bootstrap").get<std::size_t>();
    if (j.contains("stop_at_cno")) s.stop_at_cno = j.at("stop_at_cno").get<double>();
    if (j.contains("max_iterations")) s.max_iterations = j.at("max_iterations").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw SetupError(std::string("experiment spec: ") + e.what());
  }
  s.validate();
  return s;
}

inline ExperimentSpec load_experiment_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SetupError("cannot open experiment spec '" + path.string() + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw SetupError("experiment spec '" + path.string() + "': " + e.what());
  }
  return parse_experiment_spec(j, path.parent_path());
}

namespace detail {

inline nlohmann::json number_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(); }

template <class T>
nlohmann::json optional_json(const std::optional<T>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json();
}

}  // namespace detail

inline nlohmann::json to_json(const ExperimentSpec& s) {
  nlohmann::json j;
  if (s.dataset.path)
    j["dataset"] = s.dataset.path->generic_string();
  else if (s.dataset.synthetic)
    j["dataset"] = {{"synthetic", *s.dataset.synthetic}, {"seed", s.dataset.synthetic_seed}};
  j["method"] = to_string(s.method);
  if (s.method != Method::bo && s.method != Method::rnd)
    j["planner"] = {{"lookahead", s.planner.lookahead}, {"nodes", s.planner.nodes}, {"discount", s.planner.discount}};
  j["timeout"] = to_string(s.effective_timeout());
  j["tmax"] = s.tmax.kind == TmaxRule::Kind::seconds ? nlohmann::json{{"seconds", s.tmax.value}}
                                                     : nlohmann::json{{"fraction", s.tmax.value}};
  j["budget"] = detail::number_or_null(s.budget);
  j["runs"] = s.runs;
  j["seed"] = s.seed;
  j["bootstrap"] = detail::optional_json(s.bootstrap);
  j["stop_at_cno"] = detail::optional_json(s.stop_at_cno);
  j["max_iterations"] = detail::optional_json(s.max_iterations);
  return j;
}

/// Seed of run i of an experiment.
inline std::uint64_t run_seed(std::uint64_t master, std::size_t run) {
  return derive_seed(master, {stream::run, static_cast<std::uint64_t>(run)});
}

inline OptimizerSettings optimizer_settings(const ExperimentSpec& spec, double t_max, std::uint64_t seed,
                                            unsigned threads) {
  OptimizerSettings s;
  s.budget = spec.budget;
  s.t_max = t_max;
  s.planner = spec.planner;
  s.timeout = spec.effective_timeout();
  s.bootstrap = spec.bootstrap;
  s.seed = seed;
  s.threads = threads;
  s.stop_at_cno = spec.stop_at_cno;
  s.max_iterations = spec.max_iterations;
  return s;
}

/// One optimizer run of the experiment with an explicit seed.
inline OptimizeResult run_single(const Dataset& d, const ExperimentSpec& spec, double t_max, std::uint64_t seed,
                                 unsigned threads = 1) {
  switch (spec.method) {
    case Method::rnd:
      return optimize_random(d, spec.budget, t_max, seed, spec.stop_at_cno, spec.max_iterations);
    case Method::bo:
      return optimize_greedy(d, optimizer_settings(spec, t_max, seed, threads));
    case Method::lynceus:
    case Method::bo_la:
      return optimize(d, optimizer_settings(spec, t_max, seed, threads));
  }
  throw SetupError("unknown method");
}

struct RunRecord {
  std::size_t run = 0;
  std::uint64_t seed = 0;
  OptimizeResult result;
};

struct CurvePoint {
  std::size_t step = 0;  // search iterations after the bootstrap
  double cost_p90 = 0.0;
  double cno_p50 = kInf;
  double cno_p90 = kInf;
};

struct ThresholdCdf {
  double threshold = 1.0;
  std::vector<double> reach_cost;  // per run; +inf when never reached
  std::vector<std::pair<double, double>> points;  // (cost, fraction of runs), ascending
  double reached_fraction = 0.0;
  double p50 = kInf;
  double p90 = kInf;
};

/// Cumulative exploration cost at which the best-so-far CNO first drops to
/// `threshold`. A bootstrap hit is charged the whole bootstrap cost.
inline double cost_to_reach(const OptimizeResult& r, double threshold) {
  for (const auto& s : r.trajectory)
    if (s.best_cno && *s.best_cno <= threshold)
      return s.phase == Phase::bootstrap ? r.bootstrap_cost : s.cumulative_cost;
  return kInf;
}

/// Per-run (cumulative cost, best CNO) after the bootstrap (point 0) and after
/// every search step; runs that ended earlier hold their final values.
inline std::vector<CurvePoint> percentile_curve(std::span<const RunRecord> runs) {
  std::vector<std::vector<std::pair<double, double>>> series;
  std::size_t length = 0;
  for (const auto& rec : runs) {
    std::vector<std::pair<double, double>> s{{0.0, kInf}};
    for (const auto& st : rec.result.trajectory) {
      const std::pair<double, double> cur{st.cumulative_cost, st.best_cno.value_or(kInf)};
      if (st.phase == Phase::bootstrap)
        s.front() = cur;
      else
        s.push_back(cur);
    }
    length = std::max(length, s.size());
    series.push_back(std::move(s));
  }
  std::vector<CurvePoint> out;
  for (std::size_t k = 0; k < length; ++k) {
    std::vector<double> costs, cnos;
    for (const auto& s : series) {
      const auto& p = k < s.size() ? s[k] : s.back();
      costs.push_back(p.first);
      cnos.push_back(p.second);
    }
    out.push_back({k, quantile_linear(costs, 0.9), quantile_linear(cnos, 0.5), quantile_linear(cnos, 0.9)});
  }
  return out;
}

inline ThresholdCdf threshold_cdf(std::span<const RunRecord> runs, double threshold) {
  ThresholdCdf c;
  c.threshold = threshold;
  for (const auto& r : runs) c.reach_cost.push_back(cost_to_reach(r.result, threshold));
  std::vector<double> sorted = c.reach_cost;
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  for (std::size_t i = 0; i < sorted.size() && std::isfinite(sorted[i]); ++i) {
    const double frac = static_cast<double>(i + 1) / n;
    if (!c.points.empty() && c.points.back().first == sorted[i])
      c.points.back().second = frac;
    else
      c.points.emplace_back(sorted[i], frac);
  }
  c.reached_fraction = c.points.empty() ? 0.0 : c.points.back().second;
  c.p50 = quantile_linear(c.reach_cost, 0.5);
  c.p90 = quantile_linear(c.reach_cost, 0.9);
  return c;
}

inline constexpr double kReportThresholds[] = {2.0, 1.1, 1.0};

struct ExperimentReport {
  nlohmann::json metadata;
  std::vector<RunRecord> runs;
  std::vector<CurvePoint> curve;
  std::vector<ThresholdCdf> cdfs;

  const ThresholdCdf* cdf(double threshold) const {
    for (const auto& c : cdfs)
      if (c.threshold == threshold) return &c;
    return nullptr;
  }
};

inline nlohmann::json to_json(const Step& s, const ConfigSpace& space) {
  return {{"step", s.step},
          {"phase", to_string(s.phase)},
          {"config", s.config},
          {"label", space.describe(s.config)},
          {"spent", s.spent},
          {"model_cost", detail::optional_json(s.model_cost)},
          {"timed_out", s.timed_out},
          {"feasible", s.feasible},
          {"budget_left", detail::number_or_null(s.budget_left)},
          {"cumulative_cost", s.cumulative_cost},
          {"best_cost", detail::optional_json(s.best_cost)},
          {"best_cno", detail::optional_json(s.best_cno)}};
}

inline nlohmann::json to_json(const OptimizeResult& r, const ConfigSpace& space) {
  nlohmann::json j;
  j["status"] = to_string(r.status);
  j["recommendation"] = detail::optional_json(r.recommendation);
  j["recommendation_label"] = r.recommendation ? nlohmann::json(space.describe(*r.recommendation)) : nlohmann::json();
  j["recommended_cost"] = detail::optional_json(r.recommended_cost);
  j["cno"] = detail::optional_json(r.cno);
  j["exploration_cost"] = r.exploration_cost;
  j["bootstrap_count"] = r.bootstrap_count;
  j["bootstrap_cost"] = r.bootstrap_cost;
  j["planner_retrains"] = r.planner_retrains;
  auto& t = j["trajectory"] = nlohmann::json::array();
  for (const auto& s : r.trajectory) t.push_back(to_json(s, space));
  return j;
}

inline nlohmann::json to_json(const ExperimentReport& rep, const ConfigSpace& space) {
  nlohmann::json j;
  j["metadata"] = rep.metadata;
  auto& runs = j["runs"] = nlohmann::json::array();
  for (const auto& r : rep.runs) {
    auto rj = to_json(r.result, space);
    rj["run"] = r.run;
    rj["seed"] = r.seed;
    runs.push_back(std::move(rj));
  }
  auto& curve = j["aggregates"]["curve"] = nlohmann::json::array();
  for (const auto& p : rep.curve)
    curve.push_back({{"step", p.step},
                     {"cost_p90", detail::number_or_null(p.cost_p90)},
                     {"cno_p50", detail::number_or_null(p.cno_p50)},
                     {"cno_p90", detail::number_or_null(p.cno_p90)}});
  auto& cdfs = j["aggregates"]["cdf"] = nlohmann::json::array();
  for (const auto& c : rep.cdfs) {
    nlohmann::json cj{{"threshold", c.threshold},
                      {"reached_fraction", c.reached_fraction},
                      {"cost_p50", detail::number_or_null(c.p50)},
                      {"cost_p90", detail::number_or_null(c.p90)}};
    auto& pts = cj["points"] = nlohmann::json::array();
    for (const auto& [cost, frac] : c.points) pts.push_back({cost, frac});
    auto& reach = cj["reach_cost"] = nlohmann::json::array();
    for (double v : c.reach_cost) reach.push_back(detail::number_or_null(v));
    cdfs.push_back(std::move(cj));
  }
  return j;
}

inline void write_curve_csv(std::ostream& out, const ExperimentReport& rep) {
  auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v).dump() : std::string("inf"); };
  out << "step,cost_p90,cno_p50,cno_p90\n";
  for (const auto& p : rep.curve)
    out << p.step << ',' << num(p.cost_p90) << ',' << num(p.cno_p50) << ',' << num(p.cno_p90) << '\n';
}

inline void write_cdf_csv(std::ostream& out, const ExperimentReport& rep) {
  out << "threshold,cost,fraction\n";
  for (const auto& c : rep.cdfs)
    for (const auto& [cost, frac] : c.points)
      out << nlohmann::json(c.threshold).dump() << ',' << nlohmann::json(cost).dump() << ','
          << nlohmann::json(frac).dump() << '\n';
}

/// Runs spec.runs seeded optimizer runs. Runs are independent and may execute
/// concurrently; the report does not depend on `threads`.
inline ExperimentReport run_experiment(const ExperimentSpec& spec, const Dataset& d, unsigned threads = 1) {
  spec.validate();
  const double t_max = resolve_tmax(d, spec.tmax);
  const auto optimum = d.optimum(t_max);
  if (!optimum)
    throw SetupError("no configuration of '" + d.name() + "' satisfies tmax = " + nlohmann::json(t_max).dump() + " s");
  if (spec.effective_timeout() == TimeoutPolicy::linear && !d.has_progress())
    throw SetupError("linear timeout policy needs progress curves in the dataset");

  ExperimentReport rep;
  rep.runs.resize(spec.runs);
  // With a single run the threads go to the planner instead.
  const unsigned run_threads = spec.runs > 1 ? std::max(threads, 1u) : 1u;
  const unsigned planner_threads = spec.runs > 1 ? 1u : std::max(threads, 1u);
  parallel_for(spec.runs, run_threads, [&](std::size_t i) {
    const auto seed = run_seed(spec.seed, i);
    rep.runs[i] = {i, seed, run_single(d, spec, t_max, seed, planner_threads)};
  });
  rep.curve = percentile_curve(rep.runs);
  for (double thr : kReportThresholds) rep.cdfs.push_back(threshold_cdf(rep.runs, thr));

  std::size_t feasible = 0;
  for (std::size_t i = 0; i < d.size(); ++i) feasible += d.feasible(i, t_max) ? 1 : 0;
  rep.metadata = {{"spec", to_json(spec)},
                  {"dataset", d.name()},
                  {"configurations", d.size()},
                  {"t_max", t_max},
                  {"feasible_configurations", feasible},
                  {"optimum", *optimum},
                  {"optimum_label", d.space().describe(*optimum)},
                  {"optimum_cost", d.record(*optimum).cost()},
                  {"quantiles",
                   {{"t_max", "nearest-rank"}, {"report", "linear interpolation between order statistics (type 7)"}}},
                  {"curve", "point 0 is the state after the bootstrap, its cost includes every bootstrap run"}};
  if (spec.stop_at_cno || spec.max_iterations)
    rep.metadata["truncated"] =
        "runs stop early at stop_at_cno / max_iterations; curve points past a stop hold the final values";
  return rep;
}

inline ExperimentReport run_experiment(const ExperimentSpec& spec, unsigned threads = 1) {
  return run_experiment(spec, load_source(spec.dataset), threads);
}

/// Ideal disjoint optimization (tune the application on a fixed cloud
/// reference, then the cloud with the application fixed), for every
/// reference assignment of the cloud dimensions.
struct DisjointResult {
  std::vector<std::size_t> cloud_dims;
  std::vector<std::size_t> app_dims;
  std::size_t references = 0;
  std::size_t infeasible = 0;               // references with no feasible configuration
  std::vector<double> cno;                  // ascending, feasible references only
  std::vector<std::pair<double, double>> cdf;  // (cno, fraction of feasible references)
  double optimal_fraction = 0.0;            // fraction with cno == 1
};

inline DisjointResult disjoint_analysis(const Dataset& d, std::span<const std::size_t> cloud_dims, double t_max) {
  const auto& space = d.space();
  const std::size_t dims = space.dimension_count();
  DisjointResult res;
  std::vector<bool> is_cloud(dims, false);
  for (auto c : cloud_dims) {
    if (c >= dims) throw SetupError("cloud dimension index out of range");
    if (is_cloud[c]) throw SetupError("cloud dimension listed twice: " + space.dimension(c).name());
    is_cloud[c] = true;
  }
  for (std::size_t k = 0; k < dims; ++k) (is_cloud[k] ? res.cloud_dims : res.app_dims).push_back(k);
  if (res.cloud_dims.empty() || res.app_dims.empty())
    throw SetupError("disjoint analysis needs both application and cloud dimensions");
  const auto opt = d.optimum(t_max);
  if (!opt) throw SetupError("no configuration satisfies tmax");
  const double opt_cost = d.record(*opt).cost();

  auto radix = [&](const std::vector<std::size_t>& sub) {
    std::size_t n = 1;
    for (auto k : sub) n *= space.dimension(k).size();
    return n;
  };
  const std::size_t n_app = radix(res.app_dims), n_cloud = radix(res.cloud_dims);
  auto key = [&](const std::vector<std::size_t>& levels, const std::vector<std::size_t>& sub) {
    std::size_t k = 0;
    for (auto dim : sub) k = k * space.dimension(dim).size() + levels[dim];
    return k;
  };
  // cost[app][cloud], +inf when infeasible
  std::vector<double> cost(n_app * n_cloud, kInf);
  for (std::size_t i = 0; i < d.size(); ++i) {
    const auto levels = space.decode(i).levels;
    if (d.feasible(i, t_max)) cost[key(levels, res.app_dims) * n_cloud + key(levels, res.cloud_dims)] = d.record(i).cost();
  }
  res.references = n_cloud;
  for (std::size_t c = 0; c < n_cloud; ++c) {
    std::size_t best_app = n_app;
    for (std::size_t a = 0; a < n_app; ++a)
      if (std::isfinite(cost[a * n_cloud + c]) && (best_app == n_app || cost[a * n_cloud + c] < cost[best_app * n_cloud + c]))
        best_app = a;
    if (best_app == n_app) {
      ++res.infeasible;
      continue;
    }
    double best = kInf;
    for (std::size_t c2 = 0; c2 < n_cloud; ++c2) best = std::min(best, cost[best_app * n_cloud + c2]);
    res.cno.push_back(best / opt_cost);
  }
  std::sort(res.cno.begin(), res.cno.end());
  const double n = static_cast<double>(res.cno.size());
  std::size_t at_one = 0;
  for (std::size_t i = 0; i < res.cno.size(); ++i) {
    if (res.cno[i] == 1.0) ++at_one;
    const double frac = static_cast<double>(i + 1) / n;
    if (!res.cdf.empty() && res.cdf.back().first == res.cno[i])
      res.cdf.back().second = frac;
    else
      res.cdf.emplace_back(res.cno[i], frac);
  }
  res.optimal_fraction = res.cno.empty() ? 0.0 : static_cast<double>(at_one) / n;
  return res;
}

inline nlohmann::json to_json(const DisjointResult& r, const ConfigSpace& space, double t_max) {
  nlohmann::json j;
  for (auto k : r.cloud_dims) j["cloud_dimensions"].push_back(space.dimension(k).name());
  for (auto k : r.app_dims) j["app_dimensions"].push_back(space.dimension(k).name());
  j["t_max"] = t_max;
  j["references"] = r.references;
  j["infeasible_references"] = r.infeasible;
  j["optimal_fraction"] = r.optimal_fraction;
  j["cno"] = r.cno;
  auto& cdf = j["cdf"] = nlohmann::json::array();
  for (const auto& [v, f] : r.cdf) cdf.push_back({v, f});
  j["note"] =
      "references are the assignments of the cloud dimensions, not every configuration of the space";
  return j;
}

}  // namespace lynceus

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>

#include "lynceus/harness.hpp"

namespace fs = std::filesystem;
using namespace lynceus;

namespace {

struct Common {
  std::optional<std::uint64_t> seed;
  unsigned threads = 0;  // 0: hardware concurrency
  std::string out;

  void add(CLI::App* app) {
    app->add_option("--seed", seed, "random seed");
    app->add_option("--threads", threads, "worker threads (0 = all cores)");
    app->add_option("--out", out, "output path (default: stdout)");
  }
  unsigned thread_count() const {
    return threads ? threads : std::max(1u, std::thread::hardware_concurrency());
  }
};

struct DataArgs {
  std::string dataset;
  std::string synthetic;
  std::uint64_t synthetic_seed = 0;

  void add(CLI::App* app) {
    app->add_option("--dataset", dataset, "dataset CSV");
    app->add_option("--synthetic", synthetic, "synthetic spec: default, separable or a JSON file");
    app->add_option("--synthetic-seed", synthetic_seed, "seed of the synthetic table");
  }
  DatasetSource source() const {
    DatasetSource src;
    if (!dataset.empty() == !synthetic.empty()) throw SetupError("give exactly one of --dataset or --synthetic");
    if (!dataset.empty()) {
      src.path = dataset;
      return src;
    }
    src.synthetic = synthetic_spec(synthetic);
    src.synthetic_seed = synthetic_seed;
    return src;
  }
  static SyntheticSpec synthetic_spec(const std::string& name) {
    if (name == "default") return SyntheticSpec::table_shaped();
    if (name == "separable") return SyntheticSpec::separable();
    std::ifstream in(name);
    if (!in) throw SetupError("cannot open synthetic spec '" + name + "'");
    try {
      return nlohmann::json::parse(in).get<SyntheticSpec>();
    } catch (const nlohmann::json::exception& e) {
      throw SetupError("synthetic spec '" + name + "': " + e.what());
    }
  }
};

struct TmaxArgs {
  std::optional<double> seconds;
  std::optional<double> fraction;

  void add(CLI::App* app) {
    auto* s = app->add_option("--tmax", seconds, "runtime limit in seconds");
    auto* f = app->add_option("--tmax-fraction", fraction, "runtime limit as the fraction of feasible configurations");
    s->excludes(f);
  }
  std::optional<TmaxRule> rule() const {
    if (seconds) return TmaxRule{TmaxRule::Kind::seconds, *seconds};
    if (fraction) return TmaxRule{TmaxRule::Kind::fraction, *fraction};
    return std::nullopt;
  }
};

// Everything is rendered before anything is written, so a failure never
// leaves a partial file behind.
void emit(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  const fs::path target(path);
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw SetupError("cannot write '" + path + "'");
    out << text;
    if (!out.flush()) throw SetupError("cannot write '" + path + "'");
  }
  fs::rename(tmp, target);
}

std::size_t dimension_index(const ConfigSpace& space, const std::string& name) {
  if (auto k = space.find_dimension(name)) return *k;
  throw SetupError("unknown dimension '" + name + "'");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Budget-aware look-ahead optimization of cloud job configurations"};
  app.require_subcommand(1);

  // optimize
  auto* opt = app.add_subcommand("optimize", "single optimizer run; prints recommendation and trajectory");
  Common opt_common;
  DataArgs opt_data;
  TmaxArgs opt_tmax;
  std::string opt_spec, opt_method, opt_timeout;
  std::optional<std::size_t> opt_la, opt_nodes, opt_bootstrap;
  std::optional<double> opt_discount, opt_budget;
  opt_common.add(opt);
  opt_data.add(opt);
  opt_tmax.add(opt);
  opt->add_option("--spec", opt_spec, "experiment spec JSON supplying defaults");
  opt->add_option("--method", opt_method, "lynceus, bo-la, bo or rnd");
  opt->add_option("--timeout", opt_timeout, "tg, noinfo2x, ideal, maxcost, none or linear");
  opt->add_option("--lookahead", opt_la, "look-ahead depth");
  opt->add_option("--nodes", opt_nodes, "quadrature nodes");
  opt->add_option("--discount", opt_discount, "reward discount");
  opt->add_option("--budget", opt_budget, "exploration budget (default: unbounded)");
  opt->add_option("--bootstrap", opt_bootstrap, "initial sample count");

  // experiment
  auto* exp = app.add_subcommand("experiment", "batch of seeded runs from an experiment spec");
  Common exp_common;
  std::string exp_spec;
  exp_common.add(exp);
  exp->add_option("spec", exp_spec, "experiment spec JSON")->required();
  exp->footer("--out PREFIX writes PREFIX.json, PREFIX_curve.csv and PREFIX_cdf.csv");

  // disjoint
  auto* dis = app.add_subcommand("disjoint", "ideal disjoint optimization over every cloud reference");
  Common dis_common;
  DataArgs dis_data;
  TmaxArgs dis_tmax;
  std::vector<std::string> dis_cloud;
  dis_common.add(dis);
  dis_data.add(dis);
  dis_tmax.add(dis);
  dis->add_option("--cloud", dis_cloud, "cloud dimension names (default for synthetic data: the priced dimensions)")
      ->delimiter(',');

  // gen-synthetic
  auto* gen = app.add_subcommand("gen-synthetic", "write a synthetic dataset as CSV");
  Common gen_common;
  std::string gen_spec = "default";
  gen_common.add(gen);
  gen->add_option("--spec", gen_spec, "default, separable or a JSON spec file");

  // validate
  auto* val = app.add_subcommand("validate", "check a dataset file");
  Common val_common;
  std::string val_path;
  val_common.add(val);
  val->add_option("dataset", val_path, "dataset CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*opt) {
      ExperimentSpec spec;
      if (!opt_spec.empty()) spec = load_experiment_spec(opt_spec);
      if (!opt_data.dataset.empty() || !opt_data.synthetic.empty()) spec.dataset = opt_data.source();
      if (!opt_method.empty()) {
        auto m = parse_method(opt_method);
        if (!m) throw SetupError("unknown method '" + opt_method + "'");
        spec.method = *m;
      }
      if (!opt_timeout.empty()) {
        auto t = parse_timeout_policy(opt_timeout);
        if (!t) throw SetupError("unknown timeout policy '" + opt_timeout + "'");
        spec.timeout = t;
      }
      if (opt_la) spec.planner.lookahead = *opt_la;
      if (opt_nodes) spec.planner.nodes = *opt_nodes;
      if (opt_discount) spec.planner.discount = *opt_discount;
      if (opt_budget) spec.budget = *opt_budget;
      if (opt_bootstrap) spec.bootstrap = opt_bootstrap;
      if (auto r = opt_tmax.rule()) spec.tmax = *r;
      spec.runs = 1;
      spec.validate();
      const auto d = load_source(spec.dataset);
      const double t_max = resolve_tmax(d, spec.tmax);
      const auto optimum = d.optimum(t_max);
      if (!optimum) throw SetupError("no configuration satisfies tmax = " + nlohmann::json(t_max).dump() + " s");
      const auto seed = opt_common.seed.value_or(0);
      const auto result = run_single(d, spec, t_max, seed, opt_common.thread_count());
      auto j = to_json(result, d.space());
      spec.seed = seed;
      j["spec"] = to_json(spec);
      j["seed"] = seed;
      j["t_max"] = t_max;
      j["optimum_cost"] = d.record(*optimum).cost();
      emit(opt_common.out, j.dump(2) + "\n");
      if (!opt_common.out.empty()) {
        if (result.recommendation)
          std::cerr << "recommendation: " << d.space().describe(*result.recommendation)
                    << " cost " << *result.recommended_cost << " cno " << result.cno.value_or(0.0) << "\n";
        else
          std::cerr << "no feasible configuration found\n";
      }
    } else if (*exp) {
      auto spec = load_experiment_spec(exp_spec);
      if (exp_common.seed) spec.seed = *exp_common.seed;
      const auto d = load_source(spec.dataset);
      const auto report = run_experiment(spec, d, exp_common.thread_count());
      const auto json = to_json(report, d.space()).dump(2) + "\n";
      if (exp_common.out.empty()) {
        std::cout << json;
      } else {
        for (const auto* suffix : {".json", "_curve.csv", "_cdf.csv"})
          if (fs::exists(exp_common.out + suffix) && fs::equivalent(exp_common.out + suffix, exp_spec))
            throw SetupError("output " + exp_common.out + suffix + " would overwrite the spec");
        std::ostringstream curve, cdf;
        write_curve_csv(curve, report);
        write_cdf_csv(cdf, report);
        emit(exp_common.out + ".json", json);
        emit(exp_common.out + "_curve.csv", curve.str());
        emit(exp_common.out + "_cdf.csv", cdf.str());
      }
    } else if (*dis) {
      const auto src = dis_data.source();
      const auto d = load_source(src);
      std::vector<std::size_t> cloud;
      if (!dis_cloud.empty()) {
        for (const auto& name : dis_cloud) cloud.push_back(dimension_index(d.space(), name));
      } else if (src.synthetic) {
        cloud.push_back(dimension_index(d.space(), src.synthetic->price.dimension));
        if (src.synthetic->price.count_dimension)
          cloud.push_back(dimension_index(d.space(), *src.synthetic->price.count_dimension));
      } else {
        throw SetupError("--cloud is required for dataset files");
      }
      const double t_max = resolve_tmax(d, dis_tmax.rule().value_or(TmaxRule{}));
      const auto res = disjoint_analysis(d, cloud, t_max);
      emit(dis_common.out, to_json(res, d.space(), t_max).dump(2) + "\n");
    } else if (*gen) {
      const auto spec = DataArgs::synthetic_spec(gen_spec);
      const auto d = generate_synthetic(spec, gen_common.seed.value_or(0));
      std::ostringstream csv;
      write_dataset(csv, d);
      emit(gen_common.out, csv.str());
    } else if (*val) {
      const auto d = load_dataset(val_path);
      std::size_t unfinished = 0;
      for (const auto& r : d.records()) unfinished += r.finished ? 0 : 1;
      nlohmann::json j{{"dataset", d.name()},
                       {"configurations", d.size()},
                       {"unfinished", unfinished},
                       {"progress_curves", d.has_progress()}};
      for (std::size_t k = 0; k < d.space().dimension_count(); ++k) {
        const auto& dim = d.space().dimension(k);
        j["dimensions"].push_back({{"name", dim.name()},
                                   {"kind", dim.kind() == DimensionKind::numeric ? "numeric" : "categorical"},
                                   {"levels", dim.size()}});
      }
      emit(val_common.out, j.dump(2) + "\n");
    }
  } catch (const std::exception& e) {
    std::cerr << "lynceus: error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

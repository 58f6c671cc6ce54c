#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "lynceus/config_space.hpp"
#include "lynceus/dataset.hpp"
#include "lynceus/rng.hpp"
#include "lynceus/stats.hpp"
#include "lynceus/synthetic.hpp"

using namespace lynceus;

namespace {

ConfigSpace table_space() {
  return ConfigSpace({Dimension::numeric("lr", {1e-5, 1e-4, 1e-3}, {"0.00001", "0.0001", "0.001"}),
                      Dimension::numeric("batch", {16, 256}, {"16", "256"}),
                      Dimension::categorical("mode", {"sync", "async"}),
                      Dimension::categorical("vm", {"a", "b", "c", "d"}),
                      Dimension::numeric("vcpus", {8, 16, 32, 48, 64, 80, 96, 112},
                                         {"8", "16", "32", "48", "64", "80", "96", "112"})});
}

}  // namespace

TEST(Rng, DeriveSeedDependsOnPathOnly) {
  EXPECT_EQ(derive_seed(7, {1, 2, 3}), derive_seed(derive_seed(derive_seed(7, 1), 2), 3));
  EXPECT_NE(derive_seed(7, {1, 2}), derive_seed(7, {2, 1}));
  EXPECT_NE(derive_seed(7, 1), derive_seed(8, 1));
}

TEST(Rng, IndexInRangeAndRoughlyUniform) {
  Rng rng(42);
  std::vector<int> hist(7, 0);
  for (int i = 0; i < 70000; ++i) {
    const auto v = rng.index(7);
    ASSERT_LT(v, 7u);
    ++hist[v];
  }
  for (int h : hist) EXPECT_NEAR(h, 10000, 500);
}

TEST(Rng, NormalMoments) {
  Rng rng(3);
  double s = 0, ss = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    s += z;
    ss += z * z;
  }
  EXPECT_NEAR(s / n, 0.0, 0.01);
  EXPECT_NEAR(ss / n, 1.0, 0.02);
}

TEST(Rng, ShuffleIsPermutationAndDeterministic) {
  std::vector<int> a(50), b;
  std::iota(a.begin(), a.end(), 0);
  b = a;
  Rng r1(9), r2(9);
  r1.shuffle(a.begin(), a.end());
  r2.shuffle(b.begin(), b.end());
  EXPECT_EQ(a, b);
  std::set<int> s(a.begin(), a.end());
  EXPECT_EQ(s.size(), 50u);
}

TEST(Stats, NormalFunctions) {
  EXPECT_NEAR(normal_cdf(0.0), 0.5, 1e-15);
  EXPECT_NEAR(normal_cdf(3.0), 0.9986501019683699, 1e-14);
  EXPECT_NEAR(normal_pdf(0.0), 0.3989422804014327, 1e-15);
  EXPECT_NEAR(normal_sf(10.0), 7.619853024160527e-24, 1e-36);
}

TEST(Stats, MillsExcessMatchesDirectFormulaAndIsContinuous) {
  for (double a : {-5.0, -1.0, 0.0, 1.5, 4.0, 7.5}) {
    const double direct = normal_pdf(a) / normal_sf(a) - a;
    EXPECT_NEAR(mills_excess(a), direct, 1e-12 * std::max(1.0, direct)) << a;
  }
  // The large-argument branch agrees with the direct formula where both are accurate.
  const double below = mills_excess(std::nextafter(8.0, 0.0));
  const double above = mills_excess(8.0);
  EXPECT_NEAR(below, above, 1e-10);
  // Asymptotically 1/a - 2/a^3.
  EXPECT_NEAR(mills_excess(1e4), 1e-4, 1e-11);
  EXPECT_GT(mills_excess(40.0), 0.0);
  EXPECT_NEAR(inverse_mills_ratio(0.0), 2.0 * normal_pdf(0.0), 1e-15);
}

TEST(Stats, SampleStddev) {
  const std::vector<double> v{1, 1, 1, 1, 1, 3, 3, 3, 3, 3};
  EXPECT_NEAR(sample_stddev(v), std::sqrt(10.0 / 9.0), 1e-15);
  EXPECT_DOUBLE_EQ(mean(v), 2.0);
}

TEST(Stats, Quantiles) {
  std::vector<double> v{10, 9, 8, 7, 6, 5, 4, 3, 2, 1};
  EXPECT_EQ(quantile_nearest_rank(v, 0.5), 5.0);
  EXPECT_EQ(quantile_nearest_rank(v, 1.0), 10.0);
  EXPECT_EQ(quantile_nearest_rank(v, 0.01), 1.0);
  EXPECT_DOUBLE_EQ(quantile_linear(v, 0.5), 5.5);
  EXPECT_DOUBLE_EQ(quantile_linear(v, 0.9), 9.1);
  EXPECT_DOUBLE_EQ(quantile_linear(v, 0.0), 1.0);
  std::vector<double> w{1, 2, kInf, kInf};
  EXPECT_DOUBLE_EQ(quantile_linear(w, 1.0 / 3.0), 2.0);
  EXPECT_EQ(quantile_linear(w, 0.5), kInf);
}

TEST(ConfigSpace, EncodeDecode) {
  const auto space = table_space();
  EXPECT_EQ(space.cardinality(), 384u);
  const std::vector<std::size_t> zero{0, 0, 0, 0, 0}, last{2, 1, 1, 3, 7};
  EXPECT_EQ(space.encode(zero).index, 0u);
  EXPECT_EQ(space.encode(last).index, 383u);
  EXPECT_EQ(space.decode(383).levels, last);
  for (std::size_t i = 0; i < space.cardinality(); ++i) EXPECT_EQ(space.encode(space.decode(i).levels).index, i);
  // Last dimension varies fastest.
  EXPECT_EQ(space.decode(1).levels, (std::vector<std::size_t>{0, 0, 0, 0, 1}));
}

TEST(ConfigSpace, Errors) {
  const auto space = table_space();
  const std::vector<std::size_t> bad{0, 2, 0, 0, 0};
  try {
    space.encode(bad);
    FAIL();
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("batch"), std::string::npos);
  }
  EXPECT_THROW(space.decode(384), std::invalid_argument);
  EXPECT_THROW(Dimension::categorical("d", {}), std::invalid_argument);
  EXPECT_THROW(Dimension::categorical("d", {"a", "a"}), std::invalid_argument);
  EXPECT_THROW(Dimension::numeric("d", {2, 1}, {"2", "1"}), std::invalid_argument);
  EXPECT_THROW(ConfigSpace({Dimension::categorical("d", {"a"}), Dimension::categorical("d", {"b"})}),
               std::invalid_argument);
}

TEST(ConfigSpace, Featurize) {
  const auto space = table_space();
  const auto x = space.encode(std::vector<std::size_t>{1, 0, 1, 2, 3});
  const auto f = space.featurize(x);
  // lr, batch, mode one-hot (2), vm one-hot (4), vcpus
  ASSERT_EQ(f.size(), 9u);
  EXPECT_DOUBLE_EQ(f[0], 1e-4);
  EXPECT_DOUBLE_EQ(f[1], 16);
  EXPECT_EQ(f[2], 0.0);
  EXPECT_EQ(f[3], 1.0);
  EXPECT_EQ((std::vector<double>(f.begin() + 4, f.begin() + 8)), (std::vector<double>{0, 0, 1, 0}));
  EXPECT_DOUBLE_EQ(f[8], 48);
  const auto& table = space.features();
  for (std::size_t k = 0; k < 9; ++k) EXPECT_EQ(table.row(x.index)[k], f[k]);
}

TEST(Dataset, ParseQueryAndErrors) {
  const std::string csv =
      "p:vm,p:n,runtime_s,price_per_h,finished,progress\n"
      "small,1,100,3.6,1,50:0.4;100:1\n"
      "small,2,60,7.2,1,\n"
      "large,1,40,36,1,\n"
      "large,2,1000,72,0,\n";
  std::istringstream in(csv);
  const auto d = read_dataset(in, "t");
  ASSERT_EQ(d.size(), 4u);
  EXPECT_EQ(d.space().dimension(0).kind(), DimensionKind::categorical);
  EXPECT_EQ(d.space().dimension(1).kind(), DimensionKind::numeric);
  const auto q = d.query(0);
  EXPECT_DOUBLE_EQ(q.unit_price, 0.001);
  EXPECT_EQ(q.cost, q.runtime * q.unit_price);
  EXPECT_EQ(d.query_partial(0, 100).spent_cost, q.cost);
  EXPECT_EQ(d.query_partial(0, 500).spent_cost, q.cost);
  EXPECT_DOUBLE_EQ(d.query_partial(0, 50).spent_cost, 0.05);
  EXPECT_DOUBLE_EQ(*d.query_partial(0, 25).progress, 0.2);
  EXPECT_DOUBLE_EQ(*d.query_partial(0, 75).progress, 0.7);
  EXPECT_FALSE(d.query_partial(1, 10).progress);
  EXPECT_TRUE(d.feasible(2, 40));
  EXPECT_FALSE(d.feasible(3, 5000));  // unfinished
  EXPECT_EQ(*d.optimum(1000), 0u);    // costs .1, .12, .4

  auto fails = [](const std::string& text, const std::string& needle) {
    std::istringstream s(text);
    try {
      read_dataset(s, "bad");
    } catch (const DatasetError& e) {
      return std::string(e.what()).find(needle) != std::string::npos;
    }
    return false;
  };
  EXPECT_TRUE(fails("p:a,runtime_s,price_per_h\nx,1,1\nx,2,1\n", "duplicate configuration index 0"));
  EXPECT_TRUE(fails("p:a,runtime_s,price_per_h\nx,1,1\nx,2,1\n", "line 3"));
  EXPECT_TRUE(fails("p:a,p:b,runtime_s,price_per_h\nx,1,1,1\ny,2,1,1\nx,2,1,1\n", "missing configuration index 2 (a=y, b=1)"));
  EXPECT_TRUE(fails("p:a,runtime_s,price_per_h\nx,-1,1\n", "line 2"));
  EXPECT_TRUE(fails("p:a,runtime_s,price_per_h\nx,1\n", "line 2"));
  EXPECT_TRUE(fails("p:a,runtime_s\nx,1\n", "price_per_h"));
  EXPECT_TRUE(fails("a,runtime_s,price_per_h\nx,1,1\n", "p:<name>"));
}

TEST(Dataset, MetadataPinsOrder) {
  const std::string csv = "p:vm,runtime_s,price_per_h\nb,1,1\na,2,1\n";
  DatasetMetadata meta;
  meta.dimensions.push_back({"vm", DimensionKind::categorical, {"a", "b"}});
  std::istringstream in(csv);
  const auto d = read_dataset(in, "m", meta);
  EXPECT_EQ(d.space().dimension(0).label(0), "a");
  EXPECT_EQ(d.record(0).runtime, 2.0);
  std::istringstream in2(csv);
  const auto inferred = read_dataset(in2, "m");
  EXPECT_EQ(inferred.space().dimension(0).label(0), "b");
}

TEST(Dataset, RoundTrip) {
  const auto d = generate_synthetic(SyntheticSpec::table_shaped(), 5);
  std::ostringstream out;
  write_dataset(out, d);
  std::istringstream in(out.str());
  const auto back = read_dataset(in, d.name());
  EXPECT_TRUE(back == d);
}

TEST(Synthetic, ShapeSkewAndDeterminism) {
  const auto spec = SyntheticSpec::table_shaped();
  const auto a = generate_synthetic(spec, 1);
  const auto b = generate_synthetic(spec, 1);
  EXPECT_EQ(a.size(), 384u);
  EXPECT_TRUE(a == b);
  EXPECT_FALSE(a == generate_synthetic(spec, 2));
  for (std::uint64_t seed : {0, 1, 2, 3, 7}) {
    const auto d = generate_synthetic(spec, seed);
    const auto opt = d.optimum(kInf);
    ASSERT_TRUE(opt);
    const double best = d.record(*opt).cost();
    std::size_t near = 0;
    for (const auto& r : d.records()) near += r.cost() <= 2.0 * best ? 1 : 0;
    EXPECT_LE(near, 38u) << "seed " << seed;  // at most 10% of 384
  }
}

TEST(Synthetic, DegenerateSpecWarns) {
  std::ostringstream warn;
  generate_synthetic(SyntheticSpec::separable(), 0, warn);
  EXPECT_NE(warn.str().find("degenerate"), std::string::npos);
  std::ostringstream quiet;
  generate_synthetic(SyntheticSpec::table_shaped(), 0, quiet);
  EXPECT_TRUE(quiet.str().empty());
}

TEST(Synthetic, JsonRoundTrip) {
  const auto spec = SyntheticSpec::table_shaped();
  nlohmann::json j = spec;
  const auto back = j.get<SyntheticSpec>();
  EXPECT_TRUE(generate_synthetic(back, 3) == generate_synthetic(spec, 3));
}

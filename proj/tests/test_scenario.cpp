#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "rmfs/scenario.hpp"

using namespace rmfs;
using namespace rmfs::scenario;

namespace {

std::vector<Sku> two_skus(double w0, double w1) {
  return {Sku{SkuId{0}, 1.0, w0}, Sku{SkuId{1}, 1.0, w1}};
}

StreamView view(double fill, std::size_t skus, long stock, int open_picks = 0, int open_repl = 0) {
  StreamView v;
  v.fill = fill;
  v.available.assign(skus, stock);
  v.open_pick_orders = open_picks;
  v.open_replenishment_orders = open_repl;
  return v;
}

int count_picks(const std::vector<Emission>& e) {
  return static_cast<int>(std::count_if(e.begin(), e.end(), [](const Emission& x) {
    return std::holds_alternative<PickOrder>(x.order);
  }));
}

}  // namespace

TEST(Scenario, ConstantPopularityGivesEqualWeights) {
  ScenarioConfig c;
  c.popularity = Distribution::constant(3.0);
  Rng rng(1);
  for (const auto& s : generate_sku_catalog(c, 50, rng)) EXPECT_DOUBLE_EQ(s.popularity_weight, 3.0);
}

TEST(Scenario, GammaPopularityMean) {
  ScenarioConfig c;
  c.popularity = Distribution::gamma(2.0, 1.0);
  Rng rng(11);
  const auto cat = generate_sku_catalog(c, 1000, rng);
  double sum = 0.0;
  for (const auto& s : cat) {
    EXPECT_GE(s.popularity_weight, 0.0);
    sum += s.popularity_weight;
  }
  // gamma(k, theta) variance k * theta^2
  const double sigma_mean = std::sqrt(2.0 / 1000.0);
  EXPECT_NEAR(sum / 1000.0, 2.0, 3.0 * sigma_mean);
}

TEST(Scenario, NormalPopularityNeverNegative) {
  ScenarioConfig c;
  c.popularity = Distribution::normal(0.5, 1.0);
  Rng rng(4);
  for (const auto& s : generate_sku_catalog(c, 500, rng)) EXPECT_GE(s.popularity_weight, 0.0);
}

TEST(Scenario, CatalogIsDeterministic) {
  ScenarioConfig c;
  Rng a(99), b(99);
  const auto x = generate_sku_catalog(c, 100, a);
  const auto y = generate_sku_catalog(c, 100, b);
  for (std::size_t i = 0; i < x.size(); ++i) {
    EXPECT_DOUBLE_EQ(x[i].popularity_weight, y[i].popularity_weight);
    EXPECT_DOUBLE_EQ(x[i].unit_space, y[i].unit_space);
  }
}

TEST(Scenario, SingleInStockSkuIsForced) {
  ScenarioConfig c;
  c.lines_per_order = Distribution::constant(3.0);
  const auto cat = two_skus(1.0, 1.0);
  Rng rng(2);
  for (int i = 0; i < 50; ++i) {
    const auto o = sample_pick_order(c, cat, {0, 100}, 0.0, rng);
    ASSERT_EQ(o.lines.size(), 1u);  // same-SKU lines merge
    EXPECT_EQ(o.lines[0].sku, SkuId{1});
    EXPECT_EQ(o.lines[0].requested, 3);
  }
}

TEST(Scenario, WeightedDrawFollowsPopularity) {
  const auto cat = two_skus(9.0, 1.0);
  Rng rng(3);
  const int n = 100000;
  int first = 0;
  for (int i = 0; i < n; ++i) first += *draw_weighted(cat, {true, true}, rng) == 0 ? 1 : 0;
  const double sigma = std::sqrt(0.9 * 0.1 / n);
  EXPECT_NEAR(static_cast<double>(first) / n, 0.9, 3.0 * sigma);
}

TEST(Scenario, NoStockIsAnError) {
  ScenarioConfig c;
  Rng rng(1);
  try {
    (void)sample_pick_order(c, two_skus(1, 1), {0, 0}, 0.0, rng);
    FAIL();
  } catch (const ScenarioError& e) {
    EXPECT_EQ(e.kind(), ScenarioError::Kind::no_stock);
  }
}

TEST(Scenario, ReturnOrdersAreSingleUnit) {
  ScenarioConfig c;
  c.return_order_fraction = 0.3;
  const auto cat = two_skus(1, 1);
  Rng rng(5);
  const int n = 20000;
  int returns = 0;
  for (int i = 0; i < n; ++i) {
    const auto r = sample_replenishment_order(c, cat, 0.0, rng);
    if (r.is_return) {
      ++returns;
      EXPECT_EQ(r.units, 1);
    } else {
      EXPECT_GE(r.units, 4);
      EXPECT_LE(r.units, 10);
    }
  }
  EXPECT_NEAR(static_cast<double>(returns) / n, 0.3, 3.0 * std::sqrt(0.3 * 0.7 / n));
}

TEST(Scenario, ReplenishmentRespectsSpaceCap) {
  ScenarioConfig c;
  c.replenishment_order_size = Distribution::constant(40.0);
  Rng rng(5);
  const auto r = sample_replenishment_order(c, two_skus(1, 1), 0.0, rng, 12.0);
  EXPECT_LE(r.units, 12);
}

TEST(Scenario, HomogeneousPoissonCount) {
  ThinnedPoissonProcess p(PiecewiseRate({{0.0, 60.0}}));
  Rng rng(8);
  const double horizon = 100 * 3600.0;
  long n = 0;
  for (double t = p.next(0.0, rng); t <= horizon; t = p.next(t, rng)) ++n;
  EXPECT_NEAR(static_cast<double>(n), 6000.0, 3.0 * std::sqrt(6000.0));
}

TEST(Scenario, PiecewiseRateCounts) {
  ThinnedPoissonProcess p(PiecewiseRate({{0.0, 30.0}, {50 * 3600.0, 90.0}, {100 * 3600.0, 0.0}}));
  Rng rng(9);
  long first = 0, second = 0;
  double t = p.next(0.0, rng);
  for (; std::isfinite(t); t = p.next(t, rng)) {
    if (t < 50 * 3600.0) ++first;
    else ++second;
    ASSERT_LT(t, 100 * 3600.0);
  }
  EXPECT_NEAR(static_cast<double>(first), 1500.0, 3.0 * std::sqrt(1500.0));
  EXPECT_NEAR(static_cast<double>(second), 4500.0, 3.0 * std::sqrt(4500.0));
}

TEST(Scenario, RateLookup) {
  PiecewiseRate r({{0.0, 36.0}, {100.0, 72.0}});
  EXPECT_DOUBLE_EQ(r.per_second(50.0), 0.01);
  EXPECT_DOUBLE_EQ(r.per_second(1e6), 0.02);
  EXPECT_DOUBLE_EQ(r.supremum_per_second(), 0.02);
}

TEST(Scenario, ConstantBacklogTopsUpToTarget) {
  ScenarioConfig c;
  const auto cat = two_skus(1, 1);
  OrderStream s(c, cat, 50.0, 1);
  auto e = s.step(view(0.6, 2, 1000), 0.0);
  EXPECT_EQ(count_picks(e), 10);
  EXPECT_EQ(static_cast<int>(e.size()) - count_picks(e), 4);
  e = s.step(view(0.6, 2, 1000, 9, 4), 10.0);
  ASSERT_EQ(e.size(), 1u);
  EXPECT_TRUE(std::holds_alternative<PickOrder>(e[0].order));
  EXPECT_FALSE(s.next_event_time().has_value());
}

TEST(Scenario, PausesUseHysteresis) {
  ScenarioConfig c;
  OrderStream s(c, two_skus(1, 1), 50.0, 1);
  (void)s.step(view(0.97, 2, 1000, 10, 4), 0.0);
  EXPECT_TRUE(s.replenishment_paused());
  (void)s.step(view(0.7, 2, 1000, 10, 4), 1.0);
  EXPECT_TRUE(s.replenishment_paused());
  (void)s.step(view(0.4, 2, 1000, 10, 4), 2.0);
  EXPECT_FALSE(s.replenishment_paused());
  (void)s.step(view(0.04, 2, 1000, 10, 4), 3.0);
  EXPECT_TRUE(s.picks_paused());
  const auto e = s.step(view(0.04, 2, 1000, 0, 4), 4.0);
  EXPECT_EQ(count_picks(e), 0);
  (void)s.step(view(0.6, 2, 1000, 10, 4), 5.0);
  EXPECT_FALSE(s.picks_paused());
}

TEST(Scenario, PoissonStreamCountsArrivals) {
  ScenarioConfig c;
  PoissonRegime p;
  p.pick_rate = {{0.0, 60.0}};
  p.replenishment_rate = {{0.0, 0.0}};
  c.regime = p;
  OrderStream s(c, two_skus(1, 1), 50.0, 3);
  const double horizon = 100 * 3600.0;
  while (auto t = s.next_event_time()) {
    if (*t > horizon) break;
    (void)s.step(view(0.6, 2, 1000000), *t);
  }
  EXPECT_NEAR(static_cast<double>(s.pick_arrivals()), 6000.0, 3.0 * std::sqrt(6000.0));
  EXPECT_EQ(s.dropped_arrivals(), 0);
}

TEST(Scenario, BatchesArriveOnSchedule) {
  ScenarioConfig c;
  PoissonRegime p;
  p.pick_rate = {{0.0, 0.0}};
  p.replenishment_rate = {{0.0, 0.0}};
  c.regime = p;
  c.batches = BatchSchedule{600.0, 5, 2};
  OrderStream s(c, two_skus(1, 1), 50.0, 3);
  const auto e = s.step(view(0.6, 2, 1000), 1200.0);
  EXPECT_EQ(count_picks(e), 15);
  EXPECT_EQ(static_cast<int>(e.size()), 21);
}

TEST(Scenario, OrderFileParsing) {
  const auto recs = parse_order_text("# comment\nP, 10.5, 3:2;4:1\nR, 20, 7:5\n");
  ASSERT_EQ(recs.size(), 2u);
  EXPECT_EQ(recs[0].type, 'P');
  EXPECT_DOUBLE_EQ(recs[0].submit_time, 10.5);
  ASSERT_EQ(recs[0].lines.size(), 2u);
  EXPECT_EQ(recs[0].lines[1].first, SkuId{4});
  EXPECT_EQ(recs[1].lines[0].second, 5);
  try {
    (void)parse_order_text("P, 1, 3:2\nX, nope\n", "orders.csv");
    FAIL();
  } catch (const ScenarioError& e) {
    EXPECT_EQ(e.kind(), ScenarioError::Kind::malformed_order_file);
    EXPECT_NE(std::string(e.what()).find("orders.csv:2"), std::string::npos);
  }
}

TEST(Scenario, ConfigValidationAndRoundTrip) {
  ScenarioConfig c;
  c.pause_low = 0.96;
  EXPECT_THROW(c.validate(), ScenarioError);
  ScenarioConfig d;
  PoissonRegime p;
  p.pick_rate = {{0.0, 10.0}, {3600.0, 20.0}};
  d.regime = p;
  d.batches = BatchSchedule{900.0, 3, 1};
  d.popularity = Distribution::normal(1.0, 0.2);
  const auto j = scenario_config_to_json(d);
  EXPECT_EQ(scenario_config_to_json(scenario_config_from_json(j)).dump(), j.dump());
  auto bad = j;
  bad["popularity"]["type"] = "zipf";
  EXPECT_THROW(scenario_config_from_json(bad), ScenarioError);
}

TEST(Scenario, UnknownFieldIsRejected) {
  auto j = scenario_config_to_json(ScenarioConfig{});
  j["duraton_s"] = 5.0;
  EXPECT_THROW(scenario_config_from_json(j), ScenarioError);
  auto k = scenario_config_to_json(ScenarioConfig{});
  k["regime"]["pick_rate"] = 3.0;  // belongs to the poisson regime only
  EXPECT_THROW(scenario_config_from_json(k), ScenarioError);
}

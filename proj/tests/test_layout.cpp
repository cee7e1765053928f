#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <set>

#include "rmfs/layout.hpp"

using namespace rmfs;
using namespace rmfs::layout;

namespace {

const std::filesystem::path kConfigs = RMFS_CONFIG_DIR;

bool has_code(const std::vector<Diagnostic>& d, const std::string& code) {
  return std::any_of(d.begin(), d.end(), [&](const Diagnostic& x) { return x.code == code; });
}

// Waypoints reachable from `start` over directed edges.
std::set<int> reachable(const WaypointGraph& g, WaypointId start) {
  std::set<int> seen{start.value};
  std::vector<WaypointId> stack{start};
  while (!stack.empty()) {
    const WaypointId w = stack.back();
    stack.pop_back();
    for (int e : g.out_edges(w)) {
      const WaypointId to = g.edges()[static_cast<std::size_t>(e)].to;
      if (seen.insert(to.value).second) stack.push_back(to);
    }
  }
  return seen;
}

LayoutConfig two_floor_config() {
  LayoutConfig c;
  c.west = {0, 0};
  c.floors = 2;
  c.elevators = {ElevatorPlacement{Side::west, 10.0}};
  c.robots = 4;
  return c;
}

}  // namespace

TEST(Layout, DefaultLayoutHasFourStationsAndValidates) {
  const World w = generate_default_layout(LayoutConfig{}, 1);
  EXPECT_EQ(w.stations.size(), 4u);
  const auto picks = std::count_if(w.stations.begin(), w.stations.end(),
                                   [](const Station& s) { return s.kind == StationKind::pick; });
  EXPECT_EQ(picks, 2);
  EXPECT_TRUE(validate_layout(w).empty());
  EXPECT_EQ(static_cast<int>(w.robots.size()), 8);
  EXPECT_EQ(w.dwelling_points.size(), 8u);
}

TEST(Layout, EveryWaypointLiesOnACycle) {
  // strong connectivity implies every aisle waypoint is on a directed cycle
  const World w = generate_default_layout(LayoutConfig{}, 3);
  const auto all = reachable(w.graph, WaypointId{0});
  EXPECT_EQ(all.size(), w.graph.size());
  for (const auto& wp : w.graph.waypoints()) {
    EXPECT_TRUE(reachable(w.graph, wp.id).count(0)) << "waypoint " << wp.id.value;
  }
}

TEST(Layout, QueueZonesAreChainsEndingAtTheStation) {
  const World w = generate_default_layout(LayoutConfig{}, 1);
  for (const auto& s : w.stations) {
    ASSERT_FALSE(s.queue_zone.slots.empty());
    EXPECT_EQ(s.queue_zone.end(), s.input_waypoint);
    for (std::size_t i = 0; i + 1 < s.queue_zone.slots.size(); ++i) {
      EXPECT_NE(w.graph.find_edge(s.queue_zone.slots[i], s.queue_zone.slots[i + 1]), nullptr);
    }
    EXPECT_NE(w.graph.find_edge(s.input_waypoint, s.output_waypoint), nullptr);
  }
}

TEST(Layout, GenerationIsDeterministic) {
  const auto a = layout_to_json(generate_default_layout(LayoutConfig{}, 42)).dump();
  const auto b = layout_to_json(generate_default_layout(LayoutConfig{}, 42)).dump();
  EXPECT_EQ(a, b);
}

TEST(Layout, SaturatedPodsFillEveryLocation) {
  LayoutConfig c;
  const World probe = generate_default_layout(c, 1);
  c.pods = static_cast<int>(probe.storage_locations.size());
  const World w = generate_default_layout(c, 1);
  for (WaypointId s : w.storage_locations) EXPECT_FALSE(w.location_free(s));
  c.pods += 1;
  EXPECT_THROW(generate_default_layout(c, 1), LayoutError);
}

TEST(Layout, InfeasibleConfigRejected) {
  LayoutConfig c;
  c.north = {40, 0};
  EXPECT_THROW(generate_default_layout(c, 1), LayoutError);
  LayoutConfig d;
  d.vertical_aisles = 1;
  EXPECT_THROW(generate_default_layout(d, 1), LayoutError);
}

TEST(Layout, FloorsJoinOnlyThroughElevators) {
  const World w = generate_default_layout(two_floor_config(), 1);
  EXPECT_EQ(w.graph.floor_count(), 2);
  EXPECT_TRUE(validate_layout(w).empty());
  for (const auto& e : w.graph.edges()) {
    EXPECT_EQ(w.graph.waypoint(e.from).floor, w.graph.waypoint(e.to).floor);
  }
  ASSERT_EQ(w.elevators.size(), 1u);
  std::set<int> floors;
  for (const auto& pp : w.elevators[0].port_pairs) {
    EXPECT_NE(w.graph.waypoint(pp.from).floor, w.graph.waypoint(pp.to).floor);
    floors.insert(w.graph.waypoint(pp.from).floor);
  }
  EXPECT_EQ(floors.size(), 2u);
}

TEST(Layout, RoundTripPreservesTheWorld) {
  for (const auto& cfg : {LayoutConfig{}, two_floor_config()}) {
    const World a = generate_default_layout(cfg, 5);
    const auto j = layout_to_json(a);
    const World b = layout_from_json(j);
    EXPECT_EQ(layout_to_json(b).dump(), j.dump());
    EXPECT_EQ(a.graph.size(), b.graph.size());
    EXPECT_EQ(a.graph.edges().size(), b.graph.edges().size());
    for (std::size_t i = 0; i < a.graph.edges().size(); ++i) {
      EXPECT_EQ(a.graph.edges()[i].from, b.graph.edges()[i].from);
      EXPECT_EQ(a.graph.edges()[i].to, b.graph.edges()[i].to);
    }
  }
}

TEST(Layout, ConfigRoundTrip) {
  const auto c = two_floor_config();
  EXPECT_EQ(layout_config_to_json(layout_config_from_json(layout_config_to_json(c))).dump(),
            layout_config_to_json(c).dump());
}

TEST(Layout, EdgeLengthMismatchIsReported) {
  auto j = layout_to_json(generate_default_layout(LayoutConfig{}, 1));
  j["edges"][0]["length"] = 9.0;
  const World w = layout_from_json(j);
  EXPECT_TRUE(has_code(validate_layout(w), "edge-length-mismatch"));
}

TEST(Layout, DeletedQueueEdgeMakesStationUnreachable) {
  World w = generate_default_layout(LayoutConfig{}, 1);
  const auto& z = w.stations[0].queue_zone.slots;
  ASSERT_GE(z.size(), 2u);
  ASSERT_TRUE(w.graph.remove_edge(z[z.size() - 2], z.back()));
  // remove shortcuts into the end slot as well
  for (WaypointId s : z) w.graph.remove_edge(s, z.back());
  const auto d = validate_layout(w);
  EXPECT_TRUE(has_code(d, "unreachable-station"));
}

TEST(Layout, SameFloorElevatorIsReported) {
  World w = generate_default_layout(two_floor_config(), 1);
  auto& pp = w.elevators[0].port_pairs[0];
  pp.to = pp.from == WaypointId{0} ? WaypointId{1} : WaypointId{0};
  EXPECT_TRUE(has_code(validate_layout(w), "same-floor-elevator"));
}

TEST(Layout, ParseErrorsNameTheField) {
  auto j = layout_to_json(generate_default_layout(LayoutConfig{}, 1));
  j["waypoints"][3]["id"] = 77;
  try {
    (void)layout_from_json(j);
    FAIL();
  } catch (const LayoutError& e) {
    EXPECT_EQ(e.kind(), LayoutError::Kind::parse_error);
    EXPECT_NE(std::string(e.what()).find("waypoints[3]"), std::string::npos);
  }
}

TEST(Layout, DemonstratorWorldLoads) {
  const World w = load_layout(kConfigs / "demonstrator_layout.json", 1);
  EXPECT_EQ(w.graph.size(), 36u);
  EXPECT_EQ(w.robots.size(), 4u);
  EXPECT_EQ(w.pods.size(), 6u);
  ASSERT_EQ(w.stations.size(), 2u);
  EXPECT_NE(w.stations[0].kind, w.stations[1].kind);
  EXPECT_DOUBLE_EQ(w.cell_size, 0.45);
  EXPECT_DOUBLE_EQ(w.robots[0].kinematics.top_speed, 0.21);
  EXPECT_TRUE(validate_layout(w).empty());
}

TEST(Layout, ShippedConfigsValidate) {
  for (const char* f : {"default_layout.json", "two_floor_layout.json", "demonstrator_layout.json"}) {
    const World w = load_layout(kConfigs / f, 1);
    EXPECT_TRUE(validate_layout(w).empty()) << f;
  }
}

TEST(Layout, UnknownGeneratorFieldIsRejected) {
  nlohmann::json j = layout_config_to_json(LayoutConfig{});
  j["elevators"] = nlohmann::json::array({{{"side", "west"}, {"transit_time", 10.0}}});
  try {
    (void)layout_config_from_json(j);
    FAIL();
  } catch (const LayoutError& e) {
    EXPECT_NE(std::string(e.what()).find("transit_time"), std::string::npos);
  }
  auto k = layout_config_to_json(LayoutConfig{});
  k["north"] = {{"pick", 1}};
  EXPECT_THROW(layout_config_from_json(k), LayoutError);
}

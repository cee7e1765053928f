#include <gtest/gtest.h>

#include <cmath>

#include "rmfs/model.hpp"

using namespace rmfs;

namespace {

// Two waypoints, one storage location, one station, one pod, two SKUs.
World tiny_world() {
  World w;
  const auto a = w.graph.add_waypoint(0, 0.0, 0.0, kStorageLocation);
  const auto b = w.graph.add_waypoint(0, 0.45, 0.0, kStationEndpoint | kQueueMember);
  w.graph.add_edge(a, b);
  w.graph.add_edge(b, a);
  w.storage_locations = {a};
  Station st;
  st.id = StationId{0};
  st.input_waypoint = b;
  st.output_waypoint = a;
  st.queue_zone.slots = {b};
  w.stations.push_back(st);
  w.skus = {Sku{SkuId{0}, 1.0, 1.0}, Sku{SkuId{1}, 2.0, 1.0}};
  w.ledger.resize(w.skus.size());
  w.reset_occupancy();
  Pod p;
  p.id = PodId{0};
  p.capacity = 10.0;
  w.pods.push_back(p);
  w.store_pod_at(PodId{0}, a);
  return w;
}

void dock(World& w) { w.pod(PodId{0}).place = PodPlace{PodPlaceKind::station, 0}; }

OrderId add_pick_order(World& w, SkuId sku, int units) {
  PickOrder o;
  o.id = OrderId{static_cast<int>(w.pick_orders.size())};
  o.lines.push_back(OrderLine{sku, units, 0, 0});
  o.assigned_station = StationId{0};
  w.pick_orders.push_back(o);
  return o.id;
}

}  // namespace

TEST(Model, GraphEdgesAndDistances) {
  World w = tiny_world();
  EXPECT_EQ(w.graph.size(), 2u);
  ASSERT_NE(w.graph.find_edge(WaypointId{0}, WaypointId{1}), nullptr);
  EXPECT_NEAR(w.graph.find_edge(WaypointId{0}, WaypointId{1})->length, 0.45, 1e-12);
  EXPECT_TRUE(w.graph.remove_edge(WaypointId{0}, WaypointId{1}));
  EXPECT_EQ(w.graph.find_edge(WaypointId{0}, WaypointId{1}), nullptr);
  EXPECT_EQ(w.graph.floor_count(), 1);
}

TEST(Model, QueueZoneIndexing) {
  QueueZone z;
  z.slots = {WaypointId{3}, WaypointId{4}, WaypointId{5}};
  EXPECT_EQ(z.entry(), WaypointId{3});
  EXPECT_EQ(z.end(), WaypointId{5});
  EXPECT_EQ(z.index_of(WaypointId{4}), 1);
  EXPECT_FALSE(z.contains(WaypointId{9}));
  EXPECT_EQ(z.capacity(), 3);
}

TEST(Model, SeedingRespectsCapacityAndLedger) {
  World w = tiny_world();
  seed_units(w, PodId{0}, SkuId{0}, 4);
  seed_units(w, PodId{0}, SkuId{1}, 3);  // 6 space units
  EXPECT_NEAR(w.pod(PodId{0}).occupied, 10.0, 1e-12);
  EXPECT_THROW(seed_units(w, PodId{0}, SkuId{0}, 1), ModelError);
  EXPECT_EQ(w.ledger.initial[0], 4);
  EXPECT_EQ(w.ledger.initial[1], 3);
  EXPECT_TRUE(check_model_invariants(w).empty());
}

TEST(Model, PickRequiresDockedPodAndReservation) {
  World w = tiny_world();
  seed_units(w, PodId{0}, SkuId{0}, 5);
  const OrderId o = add_pick_order(w, SkuId{0}, 2);
  w.pod(PodId{0}).reserved_picks[SkuId{0}] = 2;
  try {
    apply_pick(w, PodId{0}, SkuId{0}, 2, o, StationId{0});
    FAIL() << "pick from a stored pod must fail";
  } catch (const ModelError& e) {
    EXPECT_EQ(e.code(), ModelErrc::pod_not_at_station);
  }
  dock(w);
  try {
    apply_pick(w, PodId{0}, SkuId{0}, 3, o, StationId{0});
    FAIL() << "pick beyond the reservation must fail";
  } catch (const ModelError& e) {
    EXPECT_EQ(e.code(), ModelErrc::reservation_underflow);
  }
  w.now = 12.0;
  apply_pick(w, PodId{0}, SkuId{0}, 2, o, StationId{0});
  EXPECT_EQ(w.pod(PodId{0}).units(SkuId{0}), 3);
  EXPECT_EQ(w.pod(PodId{0}).reserved(SkuId{0}), 0);
  EXPECT_TRUE(w.pick_order(o).filled());
  ASSERT_TRUE(w.pick_order(o).completion_time.has_value());
  EXPECT_DOUBLE_EQ(*w.pick_order(o).completion_time, 12.0);
  EXPECT_EQ(w.ledger.picked[0], 2);
}

TEST(Model, PickCannotOverfillOrder) {
  World w = tiny_world();
  seed_units(w, PodId{0}, SkuId{0}, 5);
  const OrderId o = add_pick_order(w, SkuId{0}, 1);
  w.pod(PodId{0}).reserved_picks[SkuId{0}] = 2;
  dock(w);
  try {
    apply_pick(w, PodId{0}, SkuId{0}, 2, o, StationId{0});
    FAIL();
  } catch (const ModelError& e) {
    EXPECT_EQ(e.code(), ModelErrc::order_overfill);
  }
}

TEST(Model, StoreChecksAssignmentAndCapacity) {
  World w = tiny_world();
  seed_units(w, PodId{0}, SkuId{0}, 8);
  ReplenishmentOrder r;
  r.id = OrderId{0};
  r.sku = SkuId{1};
  r.units = 2;  // 4 space units, 2 available
  w.repl_orders.push_back(r);
  dock(w);
  try {
    apply_store(w, PodId{0}, OrderId{0}, StationId{0});
    FAIL();
  } catch (const ModelError& e) {
    EXPECT_EQ(e.code(), ModelErrc::unassigned_order);
  }
  w.repl_order(OrderId{0}).assigned_station = StationId{0};
  w.repl_order(OrderId{0}).assigned_pod = PodId{0};
  try {
    apply_store(w, PodId{0}, OrderId{0}, StationId{0});
    FAIL();
  } catch (const ModelError& e) {
    EXPECT_EQ(e.code(), ModelErrc::capacity_exceeded);
  }
  w.repl_order(OrderId{0}).units = 1;
  apply_store(w, PodId{0}, OrderId{0}, StationId{0});
  EXPECT_EQ(w.pod(PodId{0}).units(SkuId{1}), 1);
  EXPECT_EQ(w.ledger.stored[1], 1);
  EXPECT_NEAR(w.pod(PodId{0}).occupied, 10.0, 1e-12);
}

TEST(Model, LocationExclusivity) {
  World w = tiny_world();
  EXPECT_FALSE(w.location_free(WaypointId{0}));
  Pod extra;
  extra.id = PodId{1};
  w.pods.push_back(extra);
  EXPECT_THROW(w.store_pod_at(PodId{1}, WaypointId{0}), ModelError);
  EXPECT_EQ(w.pod_waypoint(PodId{0}), WaypointId{0});
}

TEST(Model, InvariantCheckerFlagsBrokenLedger) {
  World w = tiny_world();
  seed_units(w, PodId{0}, SkuId{0}, 3);
  w.pod(PodId{0}).contents[SkuId{0}] = 4;  // units appear from nowhere
  EXPECT_FALSE(check_model_invariants(w).empty());
}

TEST(Model, FillFraction) {
  World w = tiny_world();
  seed_units(w, PodId{0}, SkuId{0}, 5);
  EXPECT_NEAR(inventory_fill_fraction(w), 0.5, 1e-12);
  EXPECT_EQ(stock_by_sku(w)[0], 5);
}

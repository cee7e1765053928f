#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "rmfs/control.hpp"
#include "rmfs/rng.hpp"

using namespace rmfs;
using namespace rmfs::control;

namespace {

struct Builder {
  World w;

  WaypointId point(double x, double y, unsigned flags = kNoFlags) { return w.graph.add_waypoint(0, x, y, flags); }

  StationId station(StationKind kind, double x, double y) {
    Station s;
    s.id = StationId{static_cast<int>(w.stations.size())};
    s.kind = kind;
    s.input_waypoint = point(x, y, kStationEndpoint | kQueueMember);
    s.output_waypoint = s.input_waypoint;
    s.queue_zone.slots = {s.input_waypoint};
    w.stations.push_back(s);
    return s.id;
  }

  PodId pod(double x, double y, double capacity = 50.0) {
    const WaypointId loc = point(x, y, kStorageLocation);
    w.storage_locations.push_back(loc);
    w.reset_occupancy();
    Pod p;
    p.id = PodId{static_cast<int>(w.pods.size())};
    p.capacity = capacity;
    w.pods.push_back(p);
    w.store_pod_at(p.id, loc);
    return p.id;
  }

  void skus(int n) {
    for (int i = 0; i < n; ++i) w.skus.push_back(Sku{SkuId{i}, 1.0, 1.0});
    w.ledger.resize(w.skus.size());
  }

  OrderId order(StationId st, std::vector<std::pair<int, int>> lines) {
    PickOrder o;
    o.id = OrderId{static_cast<int>(w.pick_orders.size())};
    for (auto [sku, n] : lines) o.lines.push_back(OrderLine{SkuId{sku}, n, 0, 0});
    o.assigned_station = st;
    w.pick_orders.push_back(o);
    w.station(st).assigned_orders.push_back(o.id);
    return o.id;
  }
};

template <class T>
std::unique_ptr<T> make(Problem p, const std::string& name, const nlohmann::json& params = nlohmann::json::object()) {
  auto c = make_controller(p, name, params);
  auto* raw = dynamic_cast<T*>(c.get());
  EXPECT_NE(raw, nullptr);
  c.release();
  return std::unique_ptr<T>(raw);
}

}  // namespace

TEST(Rps, EmptiestFittingPod) {
  Builder b;
  b.skus(1);
  for (double free : {2.0, 7.0, 4.0}) {
    const PodId p = b.pod(b.w.pods.size() * 1.0, 0.0, 10.0);
    b.w.pod(p).occupied = 10.0 - free;
  }
  auto rps = make<ReplenishmentPodSelector>(Problem::rps, "emptiest_fit");
  ReplenishmentOrder r;
  r.sku = SkuId{0};
  r.units = 3;
  EXPECT_EQ(rps->select(b.w, r, StationId{0}), PodId{1});
  r.units = 8;
  EXPECT_FALSE(rps->select(b.w, r, StationId{0}).has_value());
}

TEST(Poa, FewestAssignedLowestIdOnTie) {
  Builder b;
  b.skus(1);
  for (int i = 0; i < 3; ++i) b.station(StationKind::pick, i, 5.0);
  const std::vector<int> loads{3, 1, 1};
  for (int s = 0; s < 3; ++s) {
    for (int k = 0; k < loads[static_cast<std::size_t>(s)]; ++k) b.order(StationId{s}, {{0, 1}});
  }
  auto poa = make<PickOrderAssigner>(Problem::poa, "fewest_assigned");
  EXPECT_EQ(poa->assign(b.w, PickOrder{}), StationId{1});
  b.w.station(StationId{1}).active = false;
  EXPECT_EQ(poa->assign(b.w, PickOrder{}), StationId{2});
}

TEST(Poa, MatchesExhaustiveArgmin) {
  Rng rng(5);
  auto poa = make<PickOrderAssigner>(Problem::poa, "fewest_assigned");
  for (int trial = 0; trial < 200; ++trial) {
    Builder b;
    b.skus(1);
    const int n = 2 + static_cast<int>(uniform01(rng) * 4);
    for (int i = 0; i < n; ++i) b.station(StationKind::pick, i, 0.0);
    for (int i = 0; i < n; ++i) {
      const int load = static_cast<int>(uniform01(rng) * 9);
      for (int k = 0; k < load; ++k) b.order(StationId{i}, {{0, 1}});
      b.w.station(StationId{i}).active = uniform01(rng) < 0.8;
    }
    std::optional<StationId> expect;
    for (const auto& s : b.w.stations) {
      if (!s.active || static_cast<int>(s.assigned_orders.size()) >= s.order_capacity) continue;
      if (!expect || s.assigned_orders.size() < b.w.station(*expect).assigned_orders.size()) expect = s.id;
    }
    EXPECT_EQ(poa->assign(b.w, PickOrder{}), expect);
  }
}

TEST(Poa, BatchAssignmentOnSnapshot) {
  Builder b;
  b.skus(3);
  const StationId s0 = b.station(StationKind::pick, 0, 0);
  const StationId s1 = b.station(StationKind::pick, 5, 0);
  b.order(s0, {{0, 1}});
  b.order(s1, {{1, 1}});
  PickOrder o;
  o.id = OrderId{2};
  o.lines.push_back(OrderLine{SkuId{1}, 1, 0, 0});
  b.w.pick_orders.push_back(o);
  auto poa = make<PickOrderAssigner>(Problem::poa, "batch_similarity");
  EXPECT_TRUE(poa->buffering());
  const auto out = poa->assign_batch(b.w, {OrderId{2}});
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].second, s1);  // shares SKU 1 with the order already there
  EXPECT_FALSE(b.w.pick_order(OrderId{2}).assigned_station.has_value());  // snapshot untouched

  auto failing = make<PickOrderAssigner>(Problem::poa, "batch_similarity", {{"fail", true}});
  EXPECT_THROW(failing->assign_batch(b.w, {OrderId{2}}), std::runtime_error);
}

TEST(Pps, MaxPileOnMatchesBruteForce) {
  Rng rng(23);
  auto pps = make<PodSelector>(Problem::pps, "max_pile_on");
  for (int trial = 0; trial < 200; ++trial) {
    Builder b;
    const int skus = 6;
    b.skus(skus);
    const StationId st = b.station(StationKind::pick, 0.0, 0.0);
    const int pods = 2 + static_cast<int>(uniform01(rng) * 5);
    for (int i = 0; i < pods; ++i) {
      const PodId p = b.pod(1.0 + static_cast<int>(uniform01(rng) * 4), 1.0 + i);
      for (int s = 0; s < skus; ++s) {
        if (uniform01(rng) < 0.4) b.w.pod(p).contents[SkuId{s}] = 1 + static_cast<int>(uniform01(rng) * 3);
      }
    }
    const int orders = 1 + static_cast<int>(uniform01(rng) * 4);
    for (int o = 0; o < orders; ++o) {
      std::vector<std::pair<int, int>> lines;
      for (int s = 0; s < skus; ++s) {
        if (uniform01(rng) < 0.3) lines.push_back({s, 1 + static_cast<int>(uniform01(rng) * 3)});
      }
      if (!lines.empty()) b.order(st, lines);
    }
    // brute force: units a pod can serve are sum over SKUs of min(demand, stock)
    std::map<SkuId, int> demand;
    for (const auto& o : b.w.pick_orders) {
      for (const auto& l : o.lines) demand[l.sku] += l.requested;
    }
    std::optional<PodId> best;
    int best_units = 0;
    double best_d = 0.0;
    std::vector<PodId> cands;
    for (const auto& pod : b.w.pods) {
      cands.push_back(pod.id);
      int u = 0;
      for (const auto& [sku, n] : demand) u += std::min(n, pod.units(sku));
      const auto& a = b.w.graph.waypoint(b.w.pod_waypoint(pod.id));
      const double d = std::hypot(a.x, a.y);
      if (u > 0 && (!best || u > best_units || (u == best_units && d < best_d - 1e-12))) {
        best = pod.id;
        best_units = u;
        best_d = d;
      }
    }
    const auto plan = pps->select(b.w, st, cands);
    ASSERT_EQ(plan.has_value(), best.has_value());
    if (!plan) continue;
    EXPECT_EQ(plan->pod, *best);
    EXPECT_EQ(plan->units(), best_units);
  }
}

TEST(Pps, TieBrokenByDistance) {
  Builder b;
  b.skus(1);
  const StationId st = b.station(StationKind::pick, 0.0, 0.0);
  const PodId far = b.pod(5.0, 0.0);
  const PodId near = b.pod(2.0, 0.0);
  b.w.pod(far).contents[SkuId{0}] = 3;
  b.w.pod(near).contents[SkuId{0}] = 3;
  b.order(st, {{0, 2}});
  auto pps = make<PodSelector>(Problem::pps, "max_pile_on");
  const std::vector<PodId> c{far, near};
  const auto plan = pps->select(b.w, st, c);
  ASSERT_TRUE(plan.has_value());
  EXPECT_EQ(plan->pod, near);
  ASSERT_EQ(plan->picks.size(), 1u);
  EXPECT_EQ(plan->picks[0].units, 2);
}

TEST(Psa, NearestFreeLocation) {
  Builder b;
  b.skus(1);
  const WaypointId from = b.point(0.0, 0.0);
  std::vector<WaypointId> locs;
  for (double d : {4.2, 1.3, 2.0}) {
    locs.push_back(b.point(d, 0.0, kStorageLocation));
    b.w.storage_locations.push_back(locs.back());
  }
  b.w.reset_occupancy();
  auto psa = make<PodStorageAssigner>(Problem::psa, "nearest");
  Rng rng(1);
  EXPECT_EQ(psa->assign(b.w, PodId{0}, from, rng), locs[1]);
}

TEST(Psa, RandomIsReproducibleAndOnlyUsesFreeLocations) {
  Builder b;
  b.skus(1);
  for (int i = 0; i < 6; ++i) b.pod(i, 0.0);
  // free three locations by lifting their pods
  for (int i : {1, 3, 4}) {
    const WaypointId loc = b.w.pod_waypoint(PodId{i});
    b.w.stored_pod[loc.index()] = PodId{};
  }
  auto psa1 = make<PodStorageAssigner>(Problem::psa, "random");
  auto psa2 = make<PodStorageAssigner>(Problem::psa, "random");
  Rng r1(9), r2(9);
  for (int i = 0; i < 50; ++i) {
    const WaypointId a = psa1->assign(b.w, PodId{0}, WaypointId{0}, r1);
    EXPECT_EQ(a, psa2->assign(b.w, PodId{0}, WaypointId{0}, r2));
    EXPECT_TRUE(b.w.location_free(a));
  }
}

TEST(Ta, NearestWithinTopClass) {
  Builder b;
  b.skus(1);
  Robot r;
  r.id = RobotId{0};
  auto ta = make<TaskAllocator>(Problem::ta, "nearest");
  std::vector<TaskOption> opts;
  opts.push_back({TaskKind::extraction, StationId{0}, std::nullopt, WaypointId{1}, 8.0, false, {}});
  opts.push_back({TaskKind::extraction, StationId{1}, std::nullopt, WaypointId{2}, 3.0, false, {}});
  opts.push_back({TaskKind::rest, std::nullopt, std::nullopt, WaypointId{3}, 0.5, false, {}});
  EXPECT_EQ(ta->choose(b.w, r, opts), 1u);
  // a follow-up at the current station beats storing the pod
  std::vector<TaskOption> carry;
  carry.push_back({TaskKind::store, std::nullopt, PodId{0}, WaypointId{}, 0.0, false, {}});
  carry.push_back({TaskKind::extraction, StationId{0}, PodId{0}, WaypointId{1}, 0.0, true, {}});
  EXPECT_EQ(ta->choose(b.w, r, carry), 1u);
}

TEST(Ta, RestAtNearestDwellingPointWhenIdle) {
  Builder b;
  b.skus(1);
  const WaypointId here = b.point(0.0, 0.0);
  const WaypointId d_far = b.point(6.0, 0.0, kDwellingPoint);
  const WaypointId d_near = b.point(2.0, 0.0, kDwellingPoint);
  b.w.dwelling_points = {d_far, d_near};
  b.w.reset_occupancy();
  Robot r;
  r.id = RobotId{0};
  r.waypoint = here;
  b.w.robots.push_back(r);
  const auto opts = enumerate_task_options(b.w, b.w.robots[0], 3);
  ASSERT_EQ(opts.size(), 1u);
  EXPECT_EQ(opts[0].kind, TaskKind::rest);
  EXPECT_EQ(opts[0].first_destination, d_near);
}

TEST(Ta, CarriedPodAtStationOffersFollowUp) {
  Builder b;
  b.skus(1);
  const StationId st = b.station(StationKind::pick, 0.0, 0.0);
  const PodId p = b.pod(3.0, 0.0);
  b.w.pod(p).contents[SkuId{0}] = 4;
  b.w.stored_pod[b.w.pod_waypoint(p).index()] = PodId{};
  b.w.pod(p).place = PodPlace{PodPlaceKind::robot, 0};
  b.order(st, {{0, 2}});
  Robot r;
  r.id = RobotId{0};
  r.waypoint = b.w.station(st).input_waypoint;
  r.carried_pod = p;
  b.w.robots.push_back(r);
  const auto opts = enumerate_task_options(b.w, b.w.robots[0], 3);
  ASSERT_EQ(opts.size(), 2u);
  EXPECT_TRUE(opts[0].follow_up);
  EXPECT_EQ(opts[1].kind, TaskKind::store);
}

TEST(Helpers, FloorChangesDominateDistance) {
  World w;
  const auto a = w.graph.add_waypoint(0, 0.0, 0.0);
  const auto b = w.graph.add_waypoint(1, 0.0, 0.0);
  const auto c = w.graph.add_waypoint(0, 30.0, 40.0);
  EXPECT_DOUBLE_EQ(estimate_distance(w, a, c), 50.0);
  EXPECT_GT(estimate_distance(w, a, b), estimate_distance(w, a, c));
}

TEST(DecisionLog, PairingDetectsMissingAndStrayDecisions) {
  DecisionLog log;
  for (Trigger t : kEventTriggers) {
    const auto i = log.fire(1.0, t, 0);
    for (Problem p : subscribers(t)) log.decide(i, p, "x", "", "");
  }
  EXPECT_TRUE(log.check_pairing().empty());
  const auto i = log.fire(2.0, Trigger::new_pick_order, 1);
  EXPECT_EQ(log.check_pairing().size(), 1u);
  log.decide(i, Problem::poa, "x", "", "");
  log.decide(i, Problem::psa, "x", "", "");
  EXPECT_EQ(log.check_pairing().size(), 1u);
}

TEST(DecisionLog, SubscriptionTable) {
  EXPECT_TRUE(is_subscribed(Problem::roa, Trigger::new_replenishment_order));
  EXPECT_TRUE(is_subscribed(Problem::rps, Trigger::sku_unit_picked));
  EXPECT_TRUE(is_subscribed(Problem::pps, Trigger::task_assigned_to_robot));
  EXPECT_TRUE(is_subscribed(Problem::psa, Trigger::pod_needs_storage));
  EXPECT_TRUE(is_subscribed(Problem::ta, Trigger::robot_needs_task));
  EXPECT_TRUE(is_subscribed(Problem::pp, Trigger::robot_new_destination));
  EXPECT_FALSE(is_subscribed(Problem::psa, Trigger::new_pick_order));
  for (Trigger t : kEventTriggers) EXPECT_FALSE(subscribers(t).empty());
}

TEST(Schedules, DueInTimeOrder) {
  StationActivator sa({{20.0, StationId{1}, true}, {10.0, StationId{1}, false}});
  EXPECT_EQ(sa.next_event_time(), 10.0);
  EXPECT_TRUE(sa.due(5.0).empty());
  const auto d = sa.due(25.0);
  ASSERT_EQ(d.size(), 2u);
  EXPECT_FALSE(d[0].active);
  EXPECT_FALSE(sa.next_event_time().has_value());
  MethodManager mm({});
  EXPECT_FALSE(mm.next_event_time().has_value());
}

TEST(Config, RegistryAndRoundTrip) {
  for (Problem p : kAllProblems) {
    for (const auto& n : controller_names(p)) {
      if (p == Problem::sa || p == Problem::mm) continue;
      auto c = make_controller(p, n, nlohmann::json::object());
      ASSERT_NE(c, nullptr);
      EXPECT_EQ(c->name(), n);
      EXPECT_EQ(c->problem(), p);
    }
  }
  try {
    (void)make_controller(Problem::psa, "teleport", nlohmann::json::object());
    FAIL();
  } catch (const ControlError& e) {
    EXPECT_EQ(e.kind(), ControlError::Kind::unknown_controller);
  }
  ControllerConfig c;
  c.choices[Problem::psa] = {"nearest", nlohmann::json::object()};
  c.mm_schedule.push_back({100.0, Problem::psa, "random", nlohmann::json::object()});
  c.sa_schedule.push_back({50.0, StationId{0}, false});
  const auto j = controller_config_to_json(c);
  EXPECT_EQ(controller_config_to_json(controller_config_from_json(j)).dump(), j.dump());
  auto bad = j;
  bad["psa"]["name"] = "teleport";
  EXPECT_THROW(controller_config_from_json(bad), ControlError);
}

TEST(Config, SwapReplacesActiveController) {
  ControllerSet set(ControllerConfig{});
  EXPECT_EQ(set.active_name(Problem::psa), "random");
  set.swap(Problem::psa, "nearest", nlohmann::json::object());
  EXPECT_EQ(set.active_name(Problem::psa), "nearest");
  EXPECT_EQ(set.psa().name(), "nearest");
}

TEST(Config, UnknownFieldIsRejected) {
  auto j = controller_config_to_json(ControllerConfig{});
  j["psa"]["nmae"] = "nearest";
  EXPECT_THROW(controller_config_from_json(j), ControlError);
  auto k = controller_config_to_json(ControllerConfig{});
  k["optimiser_time_scale"] = 2.0;
  EXPECT_THROW(controller_config_from_json(k), ControlError);
}

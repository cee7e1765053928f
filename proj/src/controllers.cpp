// Baseline controllers and the shared request/task helpers.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <set>
#include <thread>

#include <fmt/format.h>

#include "rmfs/control.hpp"

namespace rmfs::control {

using nlohmann::json;

namespace {

constexpr double kFloorPenalty = 1000.0;  // m per floor change, ranking only

bool pick_station_open(const Station& s) {
  return s.kind == StationKind::pick && s.active && static_cast<int>(s.assigned_orders.size()) < s.order_capacity;
}

}  // namespace

int ExtractionPlan::units() const {
  int n = 0;
  for (const auto& p : picks) n += p.units;
  return n;
}

std::vector<std::pair<OrderId, StationId>> PickOrderAssigner::assign_batch(const World& snapshot,
                                                                           const std::vector<OrderId>& backlog) {
  World w = snapshot;
  std::vector<std::pair<OrderId, StationId>> out;
  for (OrderId id : backlog) {
    const auto s = assign(w, w.pick_order(id));
    if (!s) continue;
    w.station(*s).assigned_orders.push_back(id);
    w.pick_order(id).assigned_station = *s;
    out.emplace_back(id, *s);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Helpers

double estimate_distance(const World& world, WaypointId a, WaypointId b) {
  const auto& wa = world.graph.waypoint(a);
  const auto& wb = world.graph.waypoint(b);
  return std::hypot(wa.x - wb.x, wa.y - wb.y) + kFloorPenalty * std::abs(wa.floor - wb.floor);
}

std::map<SkuId, int> unbound_demand(const World& world, StationId station) {
  std::map<SkuId, int> demand;
  const Station& s = world.station(station);
  if (s.kind != StationKind::pick) return demand;
  for (OrderId id : s.assigned_orders) {
    for (const auto& l : world.pick_order(id).lines) {
      if (l.unbound() > 0) demand[l.sku] += l.unbound();
    }
  }
  return demand;
}

ExtractionPlan bind_pod(const World& world, StationId station, PodId pod_id) {
  ExtractionPlan plan;
  plan.pod = pod_id;
  const Station& s = world.station(station);
  if (s.kind != StationKind::pick) return plan;
  const Pod& pod = world.pod(pod_id);
  std::map<SkuId, int> left;
  for (const auto& [sku, n] : pod.contents) left[sku] = pod.unreserved(sku);
  std::vector<OrderId> orders = s.assigned_orders;
  std::sort(orders.begin(), orders.end());
  for (OrderId id : orders) {
    for (const auto& l : world.pick_order(id).lines) {
      const int need = l.unbound();
      if (need <= 0) continue;
      auto it = left.find(l.sku);
      if (it == left.end() || it->second <= 0) continue;
      const int take = std::min(need, it->second);
      it->second -= take;
      plan.picks.push_back({id, l.sku, take});
    }
  }
  return plan;
}

std::vector<PodId> servable_pods(const World& world, StationId station) {
  std::vector<PodId> out;
  const auto demand = unbound_demand(world, station);
  if (demand.empty()) return out;
  for (const auto& pod : world.pods) {
    if (pod.place.kind != PodPlaceKind::storage || pod.claimed) continue;
    for (const auto& [sku, n] : demand) {
      if (pod.unreserved(sku) > 0) {
        out.push_back(pod.id);
        break;
      }
    }
  }
  return out;
}

int robots_bound_to(const World& world, StationId station) {
  int n = 0;
  for (const auto& r : world.robots) {
    if (r.task && r.task->station == station &&
        (r.task->kind == TaskKind::extraction || r.task->kind == TaskKind::insertion)) {
      ++n;
    }
  }
  return n;
}

std::vector<InsertionGroup> insertion_groups(const World& world) {
  std::vector<InsertionGroup> out;
  for (const auto& r : world.insertion_requests) {
    if (r.kind != RequestKind::insertion || !r.pod || !r.station) continue;
    auto it = std::find_if(out.begin(), out.end(),
                           [&](const InsertionGroup& g) { return g.pod == *r.pod && g.station == *r.station; });
    if (it == out.end()) {
      out.push_back({*r.pod, *r.station, r.orders});
    } else {
      it->orders.insert(it->orders.end(), r.orders.begin(), r.orders.end());
    }
  }
  return out;
}

std::vector<TaskOption> enumerate_task_options(const World& world, const Robot& robot, int max_robots_per_station) {
  std::vector<TaskOption> options;
  if (robot.carried_pod) {
    const PodId pod = *robot.carried_pod;
    for (const auto& s : world.stations) {
      if (s.input_waypoint != robot.waypoint) continue;
      if (s.kind == StationKind::pick) {
        if (bind_pod(world, s.id, pod).units() > 0) {
          options.push_back({TaskKind::extraction, s.id, pod, robot.waypoint, 0.0, true, {}});
        }
      } else {
        for (const auto& g : insertion_groups(world)) {
          if (g.pod == pod && g.station == s.id) {
            options.push_back({TaskKind::insertion, s.id, pod, robot.waypoint, 0.0, true, g.orders});
          }
        }
      }
    }
    options.push_back({TaskKind::store, std::nullopt, pod, WaypointId{}, 0.0, false, {}});
    return options;
  }

  for (const auto& s : world.stations) {
    if (s.kind != StationKind::pick || !s.active) continue;
    if (robots_bound_to(world, s.id) >= max_robots_per_station) continue;
    const auto pods = servable_pods(world, s.id);
    if (pods.empty()) continue;
    TaskOption o{TaskKind::extraction, s.id, std::nullopt, WaypointId{}, std::numeric_limits<double>::infinity(),
                 false, {}};
    for (PodId p : pods) {
      const WaypointId w = world.pod_waypoint(p);
      const double d = estimate_distance(world, robot.waypoint, w);
      if (d < o.distance) {
        o.distance = d;
        o.first_destination = w;
      }
    }
    options.push_back(o);
  }
  for (const auto& g : insertion_groups(world)) {
    const Pod& pod = world.pod(g.pod);
    if (pod.place.kind != PodPlaceKind::storage || pod.claimed) continue;
    const Station& s = world.station(g.station);
    if (!s.active || robots_bound_to(world, s.id) >= max_robots_per_station) continue;
    const WaypointId w = world.pod_waypoint(g.pod);
    options.push_back({TaskKind::insertion, g.station, g.pod, w, estimate_distance(world, robot.waypoint, w), false,
                       g.orders});
  }

  std::set<int> claimed;
  for (const auto& r : world.robots) {
    if (r.id != robot.id && r.task && r.task->kind == TaskKind::rest && r.task->destination) {
      claimed.insert(r.task->destination->value);
    }
  }
  TaskOption rest{TaskKind::rest, std::nullopt, std::nullopt, robot.waypoint, std::numeric_limits<double>::infinity(),
                  false, {}};
  for (WaypointId d : world.dwelling_points) {
    if (claimed.count(d.value)) continue;
    const double dist = estimate_distance(world, robot.waypoint, d);
    if (dist < rest.distance) {
      rest.distance = dist;
      rest.first_destination = d;
    }
  }
  if (rest.distance == std::numeric_limits<double>::infinity()) rest.distance = 0.0;  // stay put
  options.push_back(rest);
  return options;
}

// ---------------------------------------------------------------------------
// Baselines

namespace {

class LeastBusyRoa final : public ReplenishmentOrderAssigner {
 public:
  [[nodiscard]] std::string name() const override { return "least_busy"; }
  std::optional<StationId> assign(const World& world, const ReplenishmentOrder&) override {
    std::optional<StationId> best;
    std::size_t load = 0;
    for (const auto& s : world.stations) {
      if (s.kind != StationKind::replenishment || !s.active) continue;
      if (static_cast<int>(s.assigned_orders.size()) >= s.order_capacity) continue;
      if (!best || s.assigned_orders.size() < load) {
        best = s.id;
        load = s.assigned_orders.size();
      }
    }
    return best;
  }
};

class FewestAssignedPoa final : public PickOrderAssigner {
 public:
  [[nodiscard]] std::string name() const override { return "fewest_assigned"; }
  std::optional<StationId> assign(const World& world, const PickOrder&) override {
    std::optional<StationId> best;
    std::size_t load = 0;
    for (const auto& s : world.stations) {
      if (!pick_station_open(s)) continue;
      if (!best || s.assigned_orders.size() < load) {
        best = s.id;
        load = s.assigned_orders.size();
      }
    }
    return best;
  }
};

/// Buffering POA: sends an order where the most of its SKUs are already
/// wanted, so that pods serve several orders per visit.
class BatchSimilarityPoa final : public PickOrderAssigner {
 public:
  explicit BatchSimilarityPoa(const json& params)
      : delay_ms_(params.value("delay_ms", 0)), fail_(params.value("fail", false)) {}
  [[nodiscard]] std::string name() const override { return "batch_similarity"; }
  [[nodiscard]] bool buffering() const override { return true; }

  std::optional<StationId> assign(const World& world, const PickOrder& order) override {
    std::optional<StationId> best;
    int best_score = -1;
    std::size_t best_load = 0;
    for (const auto& s : world.stations) {
      if (!pick_station_open(s)) continue;
      std::set<int> wanted;
      for (OrderId id : s.assigned_orders) {
        for (const auto& l : world.pick_order(id).lines) {
          if (l.outstanding() > 0) wanted.insert(l.sku.value);
        }
      }
      int score = 0;
      for (const auto& l : order.lines) score += wanted.count(l.sku.value) ? 1 : 0;
      if (!best || score > best_score || (score == best_score && s.assigned_orders.size() < best_load)) {
        best = s.id;
        best_score = score;
        best_load = s.assigned_orders.size();
      }
    }
    return best;
  }

  std::vector<std::pair<OrderId, StationId>> assign_batch(const World& snapshot,
                                                          const std::vector<OrderId>& backlog) override {
    if (delay_ms_ > 0) std::this_thread::sleep_for(std::chrono::milliseconds(delay_ms_));
    if (fail_) throw std::runtime_error("batch optimizer failed");
    return PickOrderAssigner::assign_batch(snapshot, backlog);
  }

 private:
  int delay_ms_;
  bool fail_;
};

class EmptiestFitRps final : public ReplenishmentPodSelector {
 public:
  [[nodiscard]] std::string name() const override { return "emptiest_fit"; }
  std::optional<PodId> select(const World& world, const ReplenishmentOrder& order, StationId) override {
    const double need = order.units * world.sku(order.sku).unit_space;
    std::optional<PodId> best;
    double space = -1.0;
    for (const auto& p : world.pods) {
      const double free = p.free_space();
      if (free + 1e-9 < need) continue;
      if (free > space + 1e-12) {
        best = p.id;
        space = free;
      }
    }
    return best;
  }
};

class MaxPileOnPps final : public PodSelector {
 public:
  [[nodiscard]] std::string name() const override { return "max_pile_on"; }
  std::optional<ExtractionPlan> select(const World& world, StationId station,
                                       std::span<const PodId> candidates) override {
    std::optional<ExtractionPlan> best;
    int best_units = 0;
    double best_dist = 0.0;
    const WaypointId input = world.station(station).input_waypoint;
    for (PodId p : candidates) {
      ExtractionPlan plan = bind_pod(world, station, p);
      const int u = plan.units();
      if (u <= 0) continue;
      const double d = estimate_distance(world, world.pod_waypoint(p), input);
      const bool better = !best || u > best_units || (u == best_units && d < best_dist - 1e-12) ||
                          (u == best_units && std::abs(d - best_dist) <= 1e-12 && p < best->pod);
      if (better) {
        best_units = u;
        best_dist = d;
        best = std::move(plan);
      }
    }
    return best;
  }
};

// Free locations without a robot standing on them; all free ones if none qualify.
// A robot waiting on a leaf would otherwise block the store trip indefinitely.
std::vector<WaypointId> free_locations(const World& world) {
  std::vector<WaypointId> out, blocked;
  for (WaypointId w : world.storage_locations) {
    if (!world.location_free(w)) continue;
    const bool occupied =
        std::any_of(world.robots.begin(), world.robots.end(), [&](const Robot& r) { return r.waypoint == w; });
    (occupied ? blocked : out).push_back(w);
  }
  if (out.empty()) out = std::move(blocked);
  std::sort(out.begin(), out.end());
  return out;
}

class RandomPsa final : public PodStorageAssigner {
 public:
  [[nodiscard]] std::string name() const override { return "random"; }
  WaypointId assign(const World& world, PodId, WaypointId, Rng& rng) override {
    const auto free = free_locations(world);
    if (free.empty()) throw std::runtime_error("no free storage location");
    auto i = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(free.size()));
    return free[std::min(i, free.size() - 1)];
  }
};

class NearestPsa final : public PodStorageAssigner {
 public:
  [[nodiscard]] std::string name() const override { return "nearest"; }
  WaypointId assign(const World& world, PodId, WaypointId from, Rng&) override {
    const auto free = free_locations(world);
    if (free.empty()) throw std::runtime_error("no free storage location");
    WaypointId best = free.front();
    double best_d = estimate_distance(world, from, best);
    for (WaypointId w : free) {
      const double d = estimate_distance(world, from, w);
      if (d < best_d) {
        best = w;
        best_d = d;
      }
    }
    return best;
  }
};

int task_rank(const TaskOption& o) {
  if (o.follow_up) return 0;
  switch (o.kind) {
    case TaskKind::store:
      return 1;
    case TaskKind::extraction:
    case TaskKind::insertion:
      return 2;  // work tasks compete by distance so neither station kind starves
    case TaskKind::rest:
    case TaskKind::charge:
      return 3;
  }
  return 4;
}

class NearestTa final : public TaskAllocator {
 public:
  explicit NearestTa(const json& params) : cap_(params.value("max_robots_per_station", 3)) {
    if (cap_ < 1) throw ControlError(ControlError::Kind::invalid_config, "max_robots_per_station must be >= 1");
  }
  [[nodiscard]] std::string name() const override { return "nearest"; }
  [[nodiscard]] int max_robots_per_station() const override { return cap_; }
  std::size_t choose(const World&, const Robot&, std::span<const TaskOption> options) override {
    std::size_t best = 0;
    for (std::size_t i = 1; i < options.size(); ++i) {
      const auto& a = options[i];
      const auto& b = options[best];
      const int ra = task_rank(a);
      const int rb = task_rank(b);
      if (ra != rb) {
        if (ra < rb) best = i;
        continue;
      }
      if (a.distance < b.distance - 1e-12) best = i;
    }
    return best;
  }

 private:
  int cap_;
};

class SippPp final : public PathPlanningController {
 public:
  [[nodiscard]] std::string name() const override { return "sipp"; }
  std::optional<pathplan::TimedPath> plan(const pathplan::Planner& planner, const pathplan::ReservationTable& table,
                                          const Robot& robot, WaypointId goal, double t) override {
    return planner.plan(table, robot.id, robot.waypoint, robot.pose.heading, goal, t, robot.kinematics);
  }
};

}  // namespace

std::vector<std::string> controller_names(Problem p) {
  switch (p) {
    case Problem::roa:
      return {"least_busy"};
    case Problem::poa:
      return {"fewest_assigned", "batch_similarity"};
    case Problem::rps:
      return {"emptiest_fit"};
    case Problem::pps:
      return {"max_pile_on"};
    case Problem::psa:
      return {"random", "nearest"};
    case Problem::ta:
      return {"nearest"};
    case Problem::pp:
      return {"sipp"};
    case Problem::sa:
    case Problem::mm:
      return {"schedule"};
  }
  return {};
}

std::unique_ptr<Controller> make_controller(Problem p, const std::string& name, const json& params) {
  const json& prm = params.is_object() ? params : json::object();
  switch (p) {
    case Problem::roa:
      if (name == "least_busy") return std::make_unique<LeastBusyRoa>();
      break;
    case Problem::poa:
      if (name == "fewest_assigned") return std::make_unique<FewestAssignedPoa>();
      if (name == "batch_similarity") return std::make_unique<BatchSimilarityPoa>(prm);
      break;
    case Problem::rps:
      if (name == "emptiest_fit") return std::make_unique<EmptiestFitRps>();
      break;
    case Problem::pps:
      if (name == "max_pile_on") return std::make_unique<MaxPileOnPps>();
      break;
    case Problem::psa:
      if (name == "random") return std::make_unique<RandomPsa>();
      if (name == "nearest") return std::make_unique<NearestPsa>();
      break;
    case Problem::ta:
      if (name == "nearest") return std::make_unique<NearestTa>(prm);
      break;
    case Problem::pp:
      if (name == "sipp") return std::make_unique<SippPp>();
      break;
    case Problem::sa:
      if (name == "schedule") return std::make_unique<StationActivator>(std::vector<StationSwitch>{});
      break;
    case Problem::mm:
      if (name == "schedule") return std::make_unique<MethodManager>(std::vector<ControllerSwap>{});
      break;
  }
  throw ControlError(ControlError::Kind::unknown_controller,
                     fmt::format("unknown {} controller '{}'", to_string(p), name));
}

}  // namespace rmfs::control

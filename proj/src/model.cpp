#include "rmfs/model.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace rmfs {

WaypointId WaypointGraph::add_waypoint(int floor, double x, double y, unsigned flags) {
  const WaypointId id{static_cast<int>(waypoints_.size())};
  waypoints_.push_back(Waypoint{id, floor, x, y, flags});
  out_.emplace_back();
  in_.emplace_back();
  return id;
}

void WaypointGraph::add_edge(WaypointId from, WaypointId to, bool shortcut) {
  add_edge(from, to, distance(from, to), shortcut);
}

void WaypointGraph::add_edge(WaypointId from, WaypointId to, double length, bool shortcut) {
  if (!from.valid() || !to.valid() || from.index() >= size() || to.index() >= size()) {
    throw ModelError(ModelErrc::unknown_entity, fmt::format("edge {}->{} references unknown waypoint", from.value, to.value));
  }
  const int idx = static_cast<int>(edges_.size());
  edges_.push_back(Edge{from, to, length, shortcut});
  out_[from.index()].push_back(idx);
  in_[to.index()].push_back(idx);
}

bool WaypointGraph::remove_edge(WaypointId from, WaypointId to) {
  auto it = std::find_if(edges_.begin(), edges_.end(), [&](const Edge& e) { return e.from == from && e.to == to; });
  if (it == edges_.end()) return false;
  edges_.erase(it);
  for (auto& v : out_) v.clear();
  for (auto& v : in_) v.clear();
  for (int i = 0; i < static_cast<int>(edges_.size()); ++i) {
    out_[edges_[i].from.index()].push_back(i);
    in_[edges_[i].to.index()].push_back(i);
  }
  return true;
}

const Edge* WaypointGraph::find_edge(WaypointId from, WaypointId to) const {
  for (int idx : out_edges(from)) {
    if (edges_[idx].to == to) return &edges_[idx];
  }
  return nullptr;
}

double WaypointGraph::distance(WaypointId a, WaypointId b) const {
  const auto& wa = waypoint(a);
  const auto& wb = waypoint(b);
  return std::hypot(wa.x - wb.x, wa.y - wb.y);
}

int WaypointGraph::floor_count() const {
  int floors = 0;
  for (const auto& w : waypoints_) floors = std::max(floors, w.floor + 1);
  return floors;
}

int QueueZone::index_of(WaypointId w) const {
  for (int i = 0; i < static_cast<int>(slots.size()); ++i) {
    if (slots[i] == w) return i;
  }
  return -1;
}

int Pod::units(SkuId sku) const {
  auto it = contents.find(sku);
  return it == contents.end() ? 0 : it->second;
}

int Pod::reserved(SkuId sku) const {
  auto it = reserved_picks.find(sku);
  return it == reserved_picks.end() ? 0 : it->second;
}

const char* to_string(TaskKind kind) {
  switch (kind) {
    case TaskKind::extraction: return "extraction";
    case TaskKind::insertion: return "insertion";
    case TaskKind::store: return "store";
    case TaskKind::rest: return "rest";
    case TaskKind::charge: return "charge";
  }
  return "?";
}

bool PickOrder::filled() const {
  return std::all_of(lines.begin(), lines.end(), [](const OrderLine& l) { return l.picked == l.requested; });
}

int PickOrder::total_units() const {
  int n = 0;
  for (const auto& l : lines) n += l.requested;
  return n;
}

OrderLine* PickOrder::line_for(SkuId sku) {
  for (auto& l : lines) {
    if (l.sku == sku) return &l;
  }
  return nullptr;
}

void InventoryLedger::resize(std::size_t skus) {
  initial.resize(skus, 0);
  stored.resize(skus, 0);
  picked.resize(skus, 0);
}

void World::reset_occupancy() {
  stored_pod.assign(graph.size(), PodId{});
  inbound_pod.assign(graph.size(), PodId{});
}

void World::store_pod_at(PodId pod_id, WaypointId location) {
  if (stored_pod.size() != graph.size()) reset_occupancy();
  if (stored_pod[location.index()].valid()) {
    throw ModelError(ModelErrc::unknown_entity, fmt::format("storage location {} already holds a pod", location.value));
  }
  stored_pod[location.index()] = pod_id;
  if (inbound_pod[location.index()] == pod_id) inbound_pod[location.index()] = PodId{};
  pod(pod_id).place = PodPlace{PodPlaceKind::storage, location.value};
}

bool World::location_free(WaypointId location) const {
  return !stored_pod[location.index()].valid() && !inbound_pod[location.index()].valid();
}

WaypointId World::pod_waypoint(PodId pod_id) const {
  const Pod& p = pod(pod_id);
  switch (p.place.kind) {
    case PodPlaceKind::storage:
      return WaypointId{p.place.ref};
    case PodPlaceKind::robot:
      return robot(RobotId{p.place.ref}).waypoint;
    case PodPlaceKind::station:
      return station(StationId{p.place.ref}).input_waypoint;
  }
  return WaypointId{};
}

double occupied_space(const World& world, const Pod& pod) {
  double s = 0.0;
  for (const auto& [sku, n] : pod.contents) s += n * world.sku(sku).unit_space;
  return s;
}

void apply_pick(World& world, PodId pod_id, SkuId sku, int units, OrderId order_id, StationId station_id) {
  Pod& pod = world.pod(pod_id);
  if (!(pod.place.kind == PodPlaceKind::station && pod.place.ref == station_id.value)) {
    throw ModelError(ModelErrc::pod_not_at_station,
                     fmt::format("pod {} is not docked at station {}", pod_id.value, station_id.value));
  }
  if (units <= 0 || pod.reserved(sku) < units || pod.units(sku) < units) {
    throw ModelError(ModelErrc::reservation_underflow,
                     fmt::format("pod {} has {} reserved units of sku {}, pick of {} requested", pod_id.value,
                                 pod.reserved(sku), sku.value, units));
  }
  PickOrder& order = world.pick_order(order_id);
  OrderLine* line = order.line_for(sku);
  if (line == nullptr || line->outstanding() < units) {
    throw ModelError(ModelErrc::order_overfill,
                     fmt::format("order {} has no remaining demand of {} for sku {}", order_id.value, units, sku.value));
  }
  pod.contents[sku] -= units;
  pod.reserved_picks[sku] -= units;
  if (pod.reserved_picks[sku] == 0) pod.reserved_picks.erase(sku);
  pod.occupied -= units * world.sku(sku).unit_space;
  if (std::abs(pod.occupied) < 1e-9) pod.occupied = 0.0;
  line->picked += units;
  line->bound = std::max(0, line->bound - units);
  world.ledger.picked.at(sku.index()) += units;
  if (order.filled() && !order.completion_time) order.completion_time = world.now;
}

void apply_store(World& world, PodId pod_id, OrderId repl_id, StationId station_id) {
  Pod& pod = world.pod(pod_id);
  if (!(pod.place.kind == PodPlaceKind::station && pod.place.ref == station_id.value)) {
    throw ModelError(ModelErrc::pod_not_at_station,
                     fmt::format("pod {} is not docked at station {}", pod_id.value, station_id.value));
  }
  ReplenishmentOrder& order = world.repl_order(repl_id);
  if (!order.assigned_station || !order.assigned_pod) {
    throw ModelError(ModelErrc::unassigned_order,
                     fmt::format("replenishment order {} lacks a station or pod assignment", repl_id.value));
  }
  const double space = order.units * world.sku(order.sku).unit_space;
  // Space promised to this very order is already counted in reserved_space.
  const double promised = std::min(space, pod.reserved_space);
  if (pod.occupied + space > pod.capacity + 1e-9) {
    throw ModelError(ModelErrc::capacity_exceeded,
                     fmt::format("pod {} cannot take {} space units (occupied {} of {})", pod_id.value, space,
                                 pod.occupied, pod.capacity));
  }
  pod.contents[order.sku] += order.units;
  pod.occupied += space;
  pod.reserved_space -= promised;
  if (pod.reserved_space < 1e-9) pod.reserved_space = 0.0;
  world.ledger.stored.at(order.sku.index()) += order.units;
  order.stored_time = world.now;
}

void seed_units(World& world, PodId pod_id, SkuId sku, int units) {
  Pod& pod = world.pod(pod_id);
  const double space = units * world.sku(sku).unit_space;
  if (pod.occupied + space > pod.capacity + 1e-9) {
    throw ModelError(ModelErrc::capacity_exceeded, fmt::format("seeding overfills pod {}", pod_id.value));
  }
  pod.contents[sku] += units;
  pod.occupied += space;
  world.ledger.initial.at(sku.index()) += units;
}

double inventory_fill_fraction(const World& world) {
  double used = 0.0;
  double cap = 0.0;
  for (const auto& p : world.pods) {
    used += p.occupied;
    cap += p.capacity;
  }
  return cap > 0.0 ? used / cap : 0.0;
}

std::vector<long> stock_by_sku(const World& world) {
  std::vector<long> stock(world.skus.size(), 0);
  for (const auto& p : world.pods) {
    for (const auto& [sku, n] : p.contents) stock.at(sku.index()) += n;
  }
  return stock;
}

std::vector<std::string> check_model_invariants(const World& world) {
  std::vector<std::string> out;
  for (const auto& p : world.pods) {
    const double occ = occupied_space(world, p);
    if (std::abs(occ - p.occupied) > 1e-6) {
      out.push_back(fmt::format("pod {} cached occupancy {} differs from contents {}", p.id.value, p.occupied, occ));
    }
    if (occ > p.capacity + 1e-9) out.push_back(fmt::format("pod {} over capacity: {} > {}", p.id.value, occ, p.capacity));
    for (const auto& [sku, n] : p.contents) {
      if (n < 0) out.push_back(fmt::format("pod {} holds negative units of sku {}", p.id.value, sku.value));
    }
    for (const auto& [sku, n] : p.reserved_picks) {
      if (n < 0 || n > p.units(sku)) {
        out.push_back(fmt::format("pod {} reserves {} of sku {} but holds {}", p.id.value, n, sku.value, p.units(sku)));
      }
    }
    switch (p.place.kind) {
      case PodPlaceKind::storage:
        if (p.place.ref < 0 || world.stored_pod.at(p.place.ref) != p.id) {
          out.push_back(fmt::format("pod {} claims storage location {} it does not occupy", p.id.value, p.place.ref));
        }
        break;
      case PodPlaceKind::robot:
      case PodPlaceKind::station: {
        int carriers = 0;
        for (const auto& r : world.robots) carriers += (r.carried_pod == p.id) ? 1 : 0;
        if (carriers != 1) out.push_back(fmt::format("pod {} off storage has {} carriers", p.id.value, carriers));
        break;
      }
    }
  }
  for (std::size_t w = 0; w < world.stored_pod.size(); ++w) {
    const PodId id = world.stored_pod[w];
    if (id.valid()) {
      const auto& place = world.pod(id).place;
      if (place.kind != PodPlaceKind::storage || place.ref != static_cast<int>(w)) {
        out.push_back(fmt::format("storage location {} lists pod {} located elsewhere", w, id.value));
      }
    }
  }
  for (const auto& r : world.robots) {
    if (r.carried_pod) {
      const auto& place = world.pod(*r.carried_pod).place;
      if (place.kind == PodPlaceKind::storage) {
        out.push_back(fmt::format("robot {} carries pod {} that is stored", r.id.value, r.carried_pod->value));
      }
    }
  }
  const auto stock = stock_by_sku(world);
  for (std::size_t s = 0; s < world.skus.size(); ++s) {
    const long expected = world.ledger.initial.at(s) + world.ledger.stored.at(s) - world.ledger.picked.at(s);
    if (expected != stock[s]) {
      out.push_back(fmt::format("sku {} ledger {} != stock {}", s, expected, stock[s]));
    }
  }
  for (const auto& o : world.pick_orders) {
    for (const auto& l : o.lines) {
      if (l.picked < 0 || l.picked > l.requested || l.bound < 0 || l.picked + l.bound > l.requested) {
        out.push_back(fmt::format("order {} line sku {} inconsistent", o.id.value, l.sku.value));
      }
    }
    if (o.completion_time.has_value() != o.filled()) {
      out.push_back(fmt::format("order {} completion flag inconsistent", o.id.value));
    }
  }
  for (const auto& s : world.stations) {
    if (static_cast<int>(s.assigned_orders.size()) > s.order_capacity) {
      out.push_back(fmt::format("station {} exceeds order capacity", s.id.value));
    }
  }
  return out;
}

}  // namespace rmfs

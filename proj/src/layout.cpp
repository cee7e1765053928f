#include "rmfs/layout.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <queue>
#include <random>
#include <set>
#include <tuple>

#include <fmt/format.h>

namespace rmfs::layout {

const char* to_string(Side side) {
  switch (side) {
    case Side::north: return "north";
    case Side::south: return "south";
    case Side::east: return "east";
    case Side::west: return "west";
  }
  return "?";
}

Side side_from_string(const std::string& s) {
  if (s == "north") return Side::north;
  if (s == "south") return Side::south;
  if (s == "east") return Side::east;
  if (s == "west") return Side::west;
  throw LayoutError(LayoutError::Kind::parse_error, "unknown side '" + s + "'");
}

namespace {

using Cell = std::tuple<int, int, int>;  // floor, col, row

class GridBuilder {
 public:
  GridBuilder(World& world, double cell) : world_(world), cell_(cell) {}

  WaypointId at(int floor, int col, int row, unsigned flags = kNoFlags) {
    const Cell key{floor, col, row};
    auto it = cells_.find(key);
    if (it != cells_.end()) {
      world_.graph.waypoint(it->second).flags |= flags;
      return it->second;
    }
    const WaypointId id = world_.graph.add_waypoint(floor, col * cell_, row * cell_, flags);
    cells_.emplace(key, id);
    return id;
  }

  [[nodiscard]] bool exists(int floor, int col, int row) const { return cells_.count(Cell{floor, col, row}) > 0; }

  void edge(WaypointId a, WaypointId b, bool shortcut = false) {
    if (world_.graph.find_edge(a, b) == nullptr) world_.graph.add_edge(a, b, shortcut);
  }

 private:
  World& world_;
  double cell_;
  std::map<Cell, WaypointId> cells_;
};

enum class ItemKind { pick, replenishment, elevator };

struct SideItem {
  ItemKind kind;
  int elevator_index = -1;
};

void check_config(const LayoutConfig& c) {
  auto fail = [](const std::string& msg) { throw LayoutError(LayoutError::Kind::infeasible_config, msg); };
  if (c.vertical_aisles < 2 || c.horizontal_aisles < 2) fail("at least 2 vertical and 2 horizontal aisles required");
  if (c.block_width < 1 || c.block_height < 1) fail("block dimensions must be >= 1");
  if (c.block_width > 2 && c.block_height > 2) {
    fail("blocks wider and taller than 2 cells would contain storage locations without aisle access");
  }
  if (c.floors < 1) fail("at least one floor required");
  if (c.floors > 1 && c.elevators.empty()) fail("multi-floor layouts need at least one elevator");
  if (c.floors == 1 && !c.elevators.empty()) fail("elevators need at least two floors");
  if (c.cell_size <= 0.0) fail("cell_size must be positive");
  if (c.robots < 0) fail("robot count must be non-negative");
  if (c.queue_length < 1) fail("queue_length must be >= 1");
  if (c.hallway_width < 1) fail("hallway_width must be >= 1");
  if (c.pod_capacity <= 0.0) fail("pod_capacity must be positive");
  if (c.pick_order_capacity < 1 || c.replenishment_order_capacity < 1) fail("order capacities must be >= 1");
  for (const auto* s : {&c.north, &c.south, &c.east, &c.west}) {
    if (s->pick < 0 || s->replenishment < 0) fail("station counts must be non-negative");
  }
  for (const auto& e : c.elevators) {
    if (e.transit_time <= 0.0) fail("elevator transit time must be positive");
  }
  c.robot_kinematics.validate();
}

}  // namespace

World generate_default_layout(const LayoutConfig& cfg, std::uint64_t seed) {
  check_config(cfg);
  const int bw = cfg.block_width;
  const int bh = cfg.block_height;
  const int width = cfg.vertical_aisles + (cfg.vertical_aisles - 1) * bw;
  const int height = cfg.horizontal_aisles + (cfg.horizontal_aisles - 1) * bh;
  const int k = cfg.hallway_width;
  const int qlen = cfg.queue_length;

  World world;
  world.cell_size = cfg.cell_size;
  GridBuilder grid(world, cfg.cell_size);

  auto is_aisle_col = [&](int col) { return col % (bw + 1) == 0; };
  auto is_aisle_row = [&](int row) { return row % (bh + 1) == 0; };

  // Side items, identical on every floor except that stations exist on floor 0 only.
  std::map<Side, std::vector<SideItem>> items;
  for (Side side : {Side::north, Side::south, Side::east, Side::west}) {
    const SideStations& s = side == Side::north ? cfg.north : side == Side::south ? cfg.south
                            : side == Side::east ? cfg.east : cfg.west;
    for (int i = 0; i < s.pick; ++i) items[side].push_back({ItemKind::pick});
    for (int i = 0; i < s.replenishment; ++i) items[side].push_back({ItemKind::replenishment});
  }
  for (int e = 0; e < static_cast<int>(cfg.elevators.size()); ++e) {
    items[cfg.elevators[e].side].push_back({ItemKind::elevator, e});
  }

  struct StorageCell {
    WaypointId id;
    int floor, col, row;
  };
  std::vector<StorageCell> storage_cells;

  for (int f = 0; f < cfg.floors; ++f) {
    // Storage rectangle: aisles and storage cells, row-major.
    for (int row = 0; row < height; ++row) {
      for (int col = 0; col < width; ++col) {
        if (is_aisle_col(col) || is_aisle_row(row)) {
          grid.at(f, col, row);
        } else {
          storage_cells.push_back({grid.at(f, col, row, kStorageLocation), f, col, row});
        }
      }
    }
    // Hallway rings around the storage rectangle.
    for (int r = 0; r < k; ++r) {
      const int x0 = -1 - r, x1 = width + r, y0 = -1 - r, y1 = height + r;
      std::vector<std::pair<int, int>> ring;  // clockwise with north up
      for (int x = x0; x <= x1; ++x) ring.emplace_back(x, y1);
      for (int y = y1 - 1; y >= y0; --y) ring.emplace_back(x1, y);
      for (int x = x1 - 1; x >= x0; --x) ring.emplace_back(x, y0);
      for (int y = y0 + 1; y <= y1 - 1; ++y) ring.emplace_back(x0, y);
      std::vector<WaypointId> ids;
      for (auto [x, y] : ring) ids.push_back(grid.at(f, x, y));
      for (std::size_t i = 0; i < ids.size(); ++i) {
        const WaypointId a = ids[i];
        const WaypointId b = ids[(i + 1) % ids.size()];
        if (r % 2 == 0) grid.edge(a, b); else grid.edge(b, a);
      }
      if (r > 0) {
        // lane changes between ring r-1 and r
        for (auto [x, y] : ring) {
          const WaypointId outer = grid.at(f, x, y);
          const int ix = std::clamp(x, x0 + 1, x1 - 1);
          const int iy = std::clamp(y, y0 + 1, y1 - 1);
          if ((ix == x) != (iy == y) && grid.exists(f, ix, iy)) {
            const WaypointId inner = grid.at(f, ix, iy);
            grid.edge(outer, inner);
            grid.edge(inner, outer);
          }
        }
      }
    }
    // One-way aisles with alternating directions, joined to the inner hallway ring.
    for (int v = 0; v < cfg.vertical_aisles; ++v) {
      const int col = v * (bw + 1);
      const bool north = v % 2 == 0;
      for (int row = -1; row < height; ++row) {
        const WaypointId a = grid.at(f, col, row);
        const WaypointId b = grid.at(f, col, row + 1);
        if (north) grid.edge(a, b); else grid.edge(b, a);
      }
    }
    for (int h = 0; h < cfg.horizontal_aisles; ++h) {
      const int row = h * (bh + 1);
      const bool east = h % 2 == 0;
      for (int col = -1; col < width; ++col) {
        const WaypointId a = grid.at(f, col, row);
        const WaypointId b = grid.at(f, col + 1, row);
        if (east) grid.edge(a, b); else grid.edge(b, a);
      }
    }
  }

  // Storage cells are leaves hanging off the adjacent aisle.
  for (const auto& sc : storage_cells) {
    const int lx = sc.col % (bw + 1) - 1;
    const int ly = sc.row % (bh + 1) - 1;
    int ac = sc.col, ar = sc.row;
    if (lx == 0) ac = sc.col - 1;
    else if (lx == bw - 1) ac = sc.col + 1;
    else if (ly == 0) ar = sc.row - 1;
    else ar = sc.row + 1;
    const WaypointId aisle = grid.at(sc.floor, ac, ar);
    grid.edge(sc.id, aisle);
    grid.edge(aisle, sc.id);
  }

  // Stations and elevator shafts as U-shaped chains outside the hallway.
  auto side_cell = [&](Side side, int along, int out) -> std::pair<int, int> {
    switch (side) {
      case Side::north: return {along, height - 1 + k + out};
      case Side::south: return {along, -k - out};
      case Side::east: return {width - 1 + k + out, along};
      case Side::west: return {-k - out, along};
    }
    return {0, 0};
  };

  struct PendingStation {
    StationKind kind;
    WaypointId dock, output;
    QueueZone zone;
  };
  std::vector<PendingStation> pending_stations;
  world.elevators.resize(cfg.elevators.size());
  std::vector<std::vector<WaypointId>> in_ports(cfg.elevators.size()), out_ports(cfg.elevators.size());

  for (Side side : {Side::north, Side::south, Side::east, Side::west}) {
    const auto& list = items[side];
    if (list.empty()) continue;
    const bool horizontal = side == Side::north || side == Side::south;
    const int lo = -k;
    const int span = (horizontal ? width : height) + 2 * k;
    const int n = static_cast<int>(list.size());
    if (3 * n - 1 > span) {
      throw LayoutError(LayoutError::Kind::infeasible_config,
                        fmt::format("{} stations/elevators do not fit on the {} side (span {} cells)", n,
                                    to_string(side), span));
    }
    int prev_out = lo - 2;
    for (int i = 0; i < n; ++i) {
      int a_in = lo + static_cast<int>(std::floor(span * (i + 0.5) / n)) - 1;
      a_in = std::max({a_in, lo, prev_out + 2});
      const int a_out = a_in + 1;
      if (a_out > lo + span - 1) {
        throw LayoutError(LayoutError::Kind::infeasible_config,
                          fmt::format("station placement overflows the {} side", to_string(side)));
      }
      prev_out = a_out;
      const SideItem& item = list[i];
      const int floors = item.kind == ItemKind::elevator ? cfg.floors : 1;
      for (int f = 0; f < floors; ++f) {
        auto cell = [&](int along, int out, unsigned flags = kNoFlags) {
          auto [c, r] = side_cell(side, along, out);
          return grid.at(f, c, r, flags);
        };
        const WaypointId h_in = cell(a_in, 0);
        const WaypointId h_out = cell(a_out, 0);
        QueueZone zone;
        for (int o = 1; o <= qlen; ++o) zone.slots.push_back(cell(a_in, o, kQueueMember));
        grid.edge(h_in, zone.slots.front());
        for (int o = 0; o + 1 < qlen; ++o) grid.edge(zone.slots[o], zone.slots[o + 1]);
        if (cfg.queue_shortcuts) {
          for (int o = 0; o + 2 < qlen; ++o) grid.edge(zone.slots[o], zone.slots[o + 2], true);
        }
        // exit lane back to the hallway
        std::vector<WaypointId> exit_lane;
        for (int o = qlen - 1; o >= 1; --o) exit_lane.push_back(cell(a_out, o));
        exit_lane.push_back(h_out);
        for (std::size_t e = 0; e + 1 < exit_lane.size(); ++e) grid.edge(exit_lane[e], exit_lane[e + 1]);

        const WaypointId top_out = cell(a_out, qlen);
        grid.edge(top_out, exit_lane.front());
        if (item.kind == ItemKind::elevator) {
          world.graph.waypoint(zone.end()).flags |= kElevatorPort;
          world.graph.waypoint(top_out).flags |= kElevatorPort;
          in_ports[item.elevator_index].push_back(zone.end());
          out_ports[item.elevator_index].push_back(top_out);
          world.elevators[item.elevator_index].queues.push_back(zone);
        } else {
          world.graph.waypoint(top_out).flags |= kStationEndpoint | kQueueMember;
          grid.edge(zone.slots.back(), top_out);
          zone.slots.push_back(top_out);
          pending_stations.push_back(
              {item.kind == ItemKind::pick ? StationKind::pick : StationKind::replenishment, top_out,
               exit_lane.front(), zone});
        }
      }
    }
  }

  for (std::size_t e = 0; e < world.elevators.size(); ++e) {
    auto& el = world.elevators[e];
    el.id = ElevatorId{static_cast<int>(e)};
    for (std::size_t a = 0; a < in_ports[e].size(); ++a) {
      for (std::size_t b = 0; b < out_ports[e].size(); ++b) {
        if (a == b) continue;
        el.port_pairs.push_back(PortPair{in_ports[e][a], out_ports[e][b], cfg.elevators[e].transit_time});
      }
    }
  }

  // Stations: pick stations first, then replenishment, each in side order.
  for (StationKind kind : {StationKind::pick, StationKind::replenishment}) {
    for (const auto& ps : pending_stations) {
      if (ps.kind != kind) continue;
      Station st;
      st.id = StationId{static_cast<int>(world.stations.size())};
      st.kind = kind;
      st.input_waypoint = ps.dock;
      st.output_waypoint = ps.output;
      st.queue_zone = ps.zone;
      st.order_capacity = kind == StationKind::pick ? cfg.pick_order_capacity : cfg.replenishment_order_capacity;
      st.handling_time = kind == StationKind::pick ? cfg.pick_handling_time : cfg.replenishment_handling_time;
      world.stations.push_back(st);
    }
  }

  // Dwelling points: floor-0 storage cells closest to the storage centre.
  const int dwelling = cfg.dwelling_points < 0 ? cfg.robots : cfg.dwelling_points;
  if (dwelling < cfg.robots) {
    throw LayoutError(LayoutError::Kind::infeasible_config, "fewer dwelling points than robots");
  }
  std::vector<std::size_t> ground;
  for (std::size_t i = 0; i < storage_cells.size(); ++i) {
    if (storage_cells[i].floor == 0) ground.push_back(i);
  }
  const double cx = (width - 1) / 2.0, cy = (height - 1) / 2.0;
  std::stable_sort(ground.begin(), ground.end(), [&](std::size_t a, std::size_t b) {
    const auto& A = storage_cells[a];
    const auto& B = storage_cells[b];
    return std::hypot(A.col - cx, A.row - cy) < std::hypot(B.col - cx, B.row - cy) - 1e-12;
  });
  if (dwelling > static_cast<int>(ground.size())) {
    throw LayoutError(LayoutError::Kind::infeasible_config, "not enough storage cells for dwelling points");
  }
  std::set<int> dwelling_ids;
  for (int i = 0; i < dwelling; ++i) {
    const WaypointId id = storage_cells[ground[i]].id;
    auto& w = world.graph.waypoint(id);
    w.flags = (w.flags & ~kStorageLocation) | kDwellingPoint;
    world.dwelling_points.push_back(id);
    dwelling_ids.insert(id.value);
  }
  for (const auto& sc : storage_cells) {
    if (!dwelling_ids.count(sc.id.value)) world.storage_locations.push_back(sc.id);
  }
  std::sort(world.storage_locations.begin(), world.storage_locations.end());

  const int locations = static_cast<int>(world.storage_locations.size());
  const int pods = cfg.pods < 0 ? static_cast<int>(std::floor(0.8 * locations)) : cfg.pods;
  if (pods > locations) {
    throw LayoutError(LayoutError::Kind::infeasible_config,
                      fmt::format("{} pods exceed {} storage locations", pods, locations));
  }

  world.reset_occupancy();
  std::mt19937_64 rng(seed);
  std::vector<WaypointId> shuffled = world.storage_locations;
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  for (int i = 0; i < pods; ++i) {
    Pod pod;
    pod.id = PodId{i};
    pod.capacity = cfg.pod_capacity;
    world.pods.push_back(pod);
    world.store_pod_at(pod.id, shuffled[i]);
  }
  for (int i = 0; i < cfg.robots; ++i) {
    Robot r;
    r.id = RobotId{i};
    r.waypoint = world.dwelling_points[i];
    const auto& w = world.graph.waypoint(r.waypoint);
    r.floor = w.floor;
    r.pose = Pose{w.x, w.y, 0.0};
    r.kinematics = cfg.robot_kinematics;
    world.robots.push_back(r);
  }
  return world;
}

namespace {

std::vector<bool> reachable_from(const World& world, WaypointId start, bool via_elevators,
                                 const std::vector<std::vector<WaypointId>>& extra) {
  std::vector<bool> seen(world.graph.size(), false);
  std::queue<WaypointId> q;
  seen[start.index()] = true;
  q.push(start);
  while (!q.empty()) {
    const WaypointId u = q.front();
    q.pop();
    auto visit = [&](WaypointId v) {
      if (!seen[v.index()]) {
        seen[v.index()] = true;
        q.push(v);
      }
    };
    for (int e : world.graph.out_edges(u)) visit(world.graph.edges()[e].to);
    for (WaypointId v : extra[u.index()]) visit(v);
    if (via_elevators) {
      for (const auto& el : world.elevators) {
        for (const auto& pp : el.port_pairs) {
          if (pp.from == u) visit(pp.to);
        }
      }
    }
  }
  return seen;
}

}  // namespace

std::vector<Diagnostic> validate_layout(const World& world) {
  std::vector<Diagnostic> out;
  const auto& g = world.graph;
  const std::size_t n = g.size();
  auto valid_wp = [&](WaypointId w) { return w.valid() && w.index() < n; };

  for (std::size_t i = 0; i < n; ++i) {
    if (g.waypoints()[i].id.value != static_cast<int>(i)) {
      out.push_back({"non-contiguous-ids", fmt::format("waypoint at index {} has id {}", i, g.waypoints()[i].id.value)});
    }
  }
  for (const auto& e : g.edges()) {
    if (!valid_wp(e.from) || !valid_wp(e.to)) {
      out.push_back({"dangling-edge", fmt::format("edge {}->{} references unknown waypoint", e.from.value, e.to.value)});
      continue;
    }
    const auto& a = g.waypoint(e.from);
    const auto& b = g.waypoint(e.to);
    if (a.floor != b.floor) {
      out.push_back({"cross-floor-edge", fmt::format("edge {}->{} spans floors", e.from.value, e.to.value)});
    }
    const double d = g.distance(e.from, e.to);
    if (std::abs(d - e.length) > 1e-6) {
      out.push_back({"edge-length-mismatch",
                     fmt::format("edge {}->{} has length {} but endpoints are {} m apart", e.from.value, e.to.value,
                                 e.length, d)});
    }
  }
  if (!out.empty()) return out;

  for (WaypointId w : world.storage_locations) {
    if (!valid_wp(w) || !g.waypoint(w).has(kStorageLocation)) {
      out.push_back({"storage-location-flag", fmt::format("storage location {} is not a flagged waypoint", w.value)});
    }
  }
  for (WaypointId w : world.dwelling_points) {
    if (!valid_wp(w) || !g.waypoint(w).has(kDwellingPoint)) {
      out.push_back({"dwelling-point-flag", fmt::format("dwelling point {} is not a flagged waypoint", w.value)});
    }
  }

  // Elevators
  std::vector<std::vector<WaypointId>> loopback(n);
  for (const auto& el : world.elevators) {
    for (const auto& pp : el.port_pairs) {
      if (!valid_wp(pp.from) || !valid_wp(pp.to)) {
        out.push_back({"elevator-port", fmt::format("elevator {} references unknown waypoint", el.id.value)});
        continue;
      }
      if (g.waypoint(pp.from).floor == g.waypoint(pp.to).floor) {
        out.push_back({"same-floor-elevator",
                       fmt::format("elevator {} connects waypoints {} and {} on the same floor", el.id.value,
                                   pp.from.value, pp.to.value)});
      }
      if (!(pp.transit_time > 0.0)) {
        out.push_back({"elevator-transit", fmt::format("elevator {} has non-positive transit time", el.id.value)});
      }
    }
    // For the per-floor connectivity check the shaft is bypassed: every in-port
    // on a floor feeds every out-port on that floor.
    for (const auto& a : el.port_pairs) {
      for (const auto& b : el.port_pairs) {
        if (valid_wp(a.from) && valid_wp(b.to) && g.waypoint(a.from).floor == g.waypoint(b.to).floor) {
          loopback[a.from.index()].push_back(b.to);
        }
      }
    }
  }

  // Queue zones are chains ending at the station endpoint.
  auto check_chain = [&](const QueueZone& z, const std::string& owner) {
    if (z.slots.empty()) {
      out.push_back({"queue-broken", owner + " has an empty queue zone"});
      return;
    }
    for (std::size_t i = 0; i + 1 < z.slots.size(); ++i) {
      if (!valid_wp(z.slots[i]) || !valid_wp(z.slots[i + 1]) || g.find_edge(z.slots[i], z.slots[i + 1]) == nullptr) {
        out.push_back({"queue-broken", fmt::format("{} queue lacks edge {}->{}", owner, z.slots[i].value,
                                                   z.slots[i + 1].value)});
      }
    }
  };
  for (const auto& st : world.stations) {
    if (!valid_wp(st.input_waypoint) || !valid_wp(st.output_waypoint)) {
      out.push_back({"station-waypoint", fmt::format("station {} references unknown waypoint", st.id.value)});
      continue;
    }
    if (st.queue_zone.slots.empty() || st.queue_zone.end() != st.input_waypoint) {
      out.push_back({"queue-end", fmt::format("station {} queue does not end at its input waypoint", st.id.value)});
    }
    check_chain(st.queue_zone, fmt::format("station {}", st.id.value));
  }
  for (const auto& el : world.elevators) {
    for (const auto& z : el.queues) check_chain(z, fmt::format("elevator {}", el.id.value));
  }

  // Strong connectivity per floor (shaft bypassed).
  const int floors = g.floor_count();
  for (int f = 0; f < floors; ++f) {
    WaypointId root{};
    for (const auto& w : g.waypoints()) {
      if (w.floor == f) {
        root = w.id;
        break;
      }
    }
    if (!root.valid()) continue;
    const auto fwd = reachable_from(world, root, false, loopback);
    // reverse reachability via in-edges
    std::vector<bool> back(n, false);
    std::queue<WaypointId> q;
    back[root.index()] = true;
    q.push(root);
    std::vector<std::vector<WaypointId>> rev_loop(n);
    for (std::size_t u = 0; u < n; ++u) {
      for (WaypointId v : loopback[u]) rev_loop[v.index()].push_back(WaypointId{static_cast<int>(u)});
    }
    while (!q.empty()) {
      const WaypointId u = q.front();
      q.pop();
      auto visit = [&](WaypointId v) {
        if (!back[v.index()]) {
          back[v.index()] = true;
          q.push(v);
        }
      };
      for (int e : g.in_edges(u)) visit(g.edges()[e].from);
      for (WaypointId v : rev_loop[u.index()]) visit(v);
    }
    int missing = 0;
    WaypointId example{};
    for (const auto& w : g.waypoints()) {
      if (w.floor == f && !(fwd[w.id.index()] && back[w.id.index()])) {
        if (!example.valid()) example = w.id;
        ++missing;
      }
    }
    if (missing > 0) {
      out.push_back({"not-strongly-connected",
                     fmt::format("floor {}: {} waypoints (e.g. {}) are not mutually reachable", f, missing,
                                 example.value)});
    }
  }

  // Every station reachable from every storage location.
  const std::vector<std::vector<WaypointId>> none(n);
  for (WaypointId loc : world.storage_locations) {
    if (!valid_wp(loc)) continue;
    const auto seen = reachable_from(world, loc, true, none);
    for (const auto& st : world.stations) {
      if (valid_wp(st.input_waypoint) && !seen[st.input_waypoint.index()]) {
        out.push_back({"unreachable-station", fmt::format("station {} is unreachable from storage location {}",
                                                          st.id.value, loc.value)});
      }
    }
    const bool any_unreachable = std::any_of(world.stations.begin(), world.stations.end(), [&](const Station& st) {
      return valid_wp(st.input_waypoint) && !seen[st.input_waypoint.index()];
    });
    if (any_unreachable) break;  // one storage location is enough to report
  }

  // Entity placement.
  if (world.pods.size() > world.storage_locations.size()) {
    out.push_back({"pod-count", "more pods than storage locations"});
  }
  std::set<int> pod_places;
  for (const auto& p : world.pods) {
    if (p.place.kind == PodPlaceKind::storage) {
      if (!pod_places.insert(p.place.ref).second) {
        out.push_back({"pod-location", fmt::format("storage location {} holds several pods", p.place.ref)});
      }
      if (p.place.ref < 0 || static_cast<std::size_t>(p.place.ref) >= n ||
          !g.waypoint(WaypointId{p.place.ref}).has(kStorageLocation)) {
        out.push_back({"pod-location", fmt::format("pod {} is not on a storage location", p.id.value)});
      }
    }
  }
  std::set<int> robot_places;
  for (const auto& r : world.robots) {
    if (!valid_wp(r.waypoint)) {
      out.push_back({"robot-location", fmt::format("robot {} is on an unknown waypoint", r.id.value)});
    } else if (!robot_places.insert(r.waypoint.value).second) {
      out.push_back({"robot-location", fmt::format("waypoint {} hosts several robots", r.waypoint.value)});
    }
  }
  return out;
}

}  // namespace rmfs::layout

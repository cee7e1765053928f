#include "rmfs/pathplan.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

#include <fmt/format.h>

namespace rmfs::pathplan {

namespace {

constexpr double kEps = 1e-9;

}  // namespace

// ---------------------------------------------------------------------------
// ReservationTable

ReservationTable::ReservationTable(std::size_t waypoints, std::size_t elevators)
    : waypoints_(waypoints), elevators_(elevators) {}

bool ReservationTable::overlaps(const std::vector<Reservation>& list, RobotId robot, double start, double end) {
  for (const auto& r : list) {
    if (r.robot == robot) continue;
    if (r.start < end - kEps && start < r.end - kEps) return true;
  }
  return false;
}

void ReservationTable::insert_sorted(std::vector<Reservation>& list, Reservation r) {
  const auto it = std::upper_bound(list.begin(), list.end(), r.start,
                                   [](double s, const Reservation& x) { return s < x.start; });
  list.insert(it, r);
}

bool ReservationTable::reserve(WaypointId w, RobotId robot, double start, double end) {
  auto& list = waypoints_.at(w.index());
  const bool clash = overlaps(list, robot, start, end);
  if (clash) ++violations_;
  insert_sorted(list, {robot, start, end});
  auto& touched = touched_[robot.value];
  if (std::find(touched.begin(), touched.end(), w.value) == touched.end()) touched.push_back(w.value);
  return !clash;
}

bool ReservationTable::reserve_elevator(ElevatorId e, RobotId robot, double start, double end) {
  auto& list = elevators_.at(e.index());
  const bool clash = overlaps(list, robot, start, end);
  if (clash) ++violations_;
  insert_sorted(list, {robot, start, end});
  return !clash;
}

void ReservationTable::release_from(RobotId robot, double t) {
  auto it = touched_.find(robot.value);
  if (it == touched_.end()) return;
  std::vector<int> keep;
  for (int w : it->second) {
    auto& list = waypoints_[static_cast<std::size_t>(w)];
    bool any = false;
    for (std::size_t i = 0; i < list.size();) {
      auto& r = list[i];
      if (r.robot != robot) {
        ++i;
        continue;
      }
      if (r.start >= t) {
        list.erase(list.begin() + static_cast<std::ptrdiff_t>(i));
        continue;
      }
      if (r.end > t) r.end = t;
      // Intervals entirely in the past no longer matter to anyone.
      if (r.end < t - 1.0) {
        list.erase(list.begin() + static_cast<std::ptrdiff_t>(i));
        continue;
      }
      any = true;
      ++i;
    }
    if (any) keep.push_back(w);
  }
  it->second = std::move(keep);
}

std::vector<Interval> ReservationTable::safe_intervals(WaypointId w, RobotId robot, double pad) const {
  std::vector<Interval> out;
  double cursor = 0.0;
  bool open = true;
  for (const auto& r : waypoints_.at(w.index())) {
    if (r.robot == robot) continue;
    const double blocked_start = std::max(0.0, r.start - pad);
    const double blocked_end = r.end == kForever ? kForever : r.end + pad;
    if (blocked_start > cursor + kEps) out.push_back({cursor, blocked_start});
    cursor = std::max(cursor, blocked_end);
    if (cursor == kForever) {
      open = false;
      break;
    }
  }
  if (open) out.push_back({cursor, kForever});
  return out;
}

bool ReservationTable::free_for(WaypointId w, RobotId robot, double start, double end, double pad) const {
  for (const auto& r : waypoints_.at(w.index())) {
    if (r.robot == robot) continue;
    if (r.start - pad < end - kEps && start < r.end + pad - kEps) return false;
  }
  return true;
}

std::optional<RobotId> ReservationTable::occupant(WaypointId w, double t) const {
  for (const auto& r : waypoints_.at(w.index())) {
    if (r.start <= t && t < r.end) return r.robot;
  }
  return std::nullopt;
}

std::vector<std::string> ReservationTable::audit() const {
  std::vector<std::string> out;
  auto scan = [&](const std::vector<Reservation>& list, const char* what, std::size_t idx) {
    for (std::size_t i = 0; i < list.size(); ++i) {
      for (std::size_t j = i + 1; j < list.size(); ++j) {
        const auto& a = list[i];
        const auto& b = list[j];
        if (b.start >= a.end - kEps) break;  // sorted by start
        if (a.robot == b.robot) continue;
        out.push_back(fmt::format("{} {}: robots {} [{:.3f},{:.3f}) and {} [{:.3f},{:.3f}) overlap", what, idx,
                                  a.robot.value, a.start, a.end, b.robot.value, b.start, b.end));
      }
    }
  };
  for (std::size_t w = 0; w < waypoints_.size(); ++w) scan(waypoints_[w], "waypoint", w);
  for (std::size_t e = 0; e < elevators_.size(); ++e) scan(elevators_[e], "elevator", e);
  return out;
}

// ---------------------------------------------------------------------------
// TimedPath

const char* to_string(Action a) {
  switch (a) {
    case Action::go:
      return "go";
    case Action::turn:
      return "turn";
    case Action::wait:
      return "wait";
    case Action::elevator:
      return "elevator";
  }
  return "?";
}

double TimedPath::final_heading() const { return segments.empty() ? start_heading : segments.back().heading; }

std::vector<WaypointId> TimedPath::waypoints() const {
  std::vector<WaypointId> out{origin};
  for (const auto& s : segments) {
    if (s.action == Action::go || s.action == Action::elevator) out.push_back(s.to);
  }
  return out;
}

double TimedPath::distance(const WaypointGraph& graph) const {
  double d = 0.0;
  for (const auto& s : segments) {
    if (s.action != Action::go) continue;
    const Edge* e = graph.find_edge(s.from, s.to);
    d += e ? e->length : graph.distance(s.from, s.to);
  }
  return d;
}

Pose TimedPath::pose_at(const WaypointGraph& graph, const kinematics::KinematicsParams& params, double t) const {
  const auto& o = graph.waypoint(origin);
  Pose pose{o.x, o.y, start_heading};
  for (const auto& s : segments) {
    if (t < s.start) break;
    const auto& a = graph.waypoint(s.from);
    const auto& b = graph.waypoint(s.to);
    if (t >= s.end) {
      pose = Pose{b.x, b.y, s.heading};
      if (s.action != Action::go) pose = Pose{a.x, a.y, s.heading};
      continue;
    }
    switch (s.action) {
      case Action::go: {
        const double len = std::hypot(b.x - a.x, b.y - a.y);
        const auto prof = kinematics::motion_profile(params, 0.0, len);
        const double f = len > 0 ? std::clamp(prof.distance_at(t - s.start) / len, 0.0, 1.0) : 1.0;
        return Pose{a.x + f * (b.x - a.x), a.y + f * (b.y - a.y), s.heading};
      }
      case Action::turn:
      case Action::wait:
      case Action::elevator:
        return Pose{a.x, a.y, pose.heading};
    }
  }
  return pose;
}

// ---------------------------------------------------------------------------
// Zones

ZoneIndex ZoneIndex::build(const World& world) {
  ZoneIndex z;
  z.zone_of.assign(world.graph.size(), -1);
  z.slot_of.assign(world.graph.size(), -1);
  auto add = [&](const QueueZone& q, Owner owner) {
    const int id = static_cast<int>(z.zones.size());
    z.zones.push_back(q);
    z.owners.push_back(owner);
    for (std::size_t i = 0; i < q.slots.size(); ++i) {
      z.zone_of.at(q.slots[i].index()) = id;
      z.slot_of.at(q.slots[i].index()) = static_cast<int>(i);
    }
  };
  for (const auto& s : world.stations) {
    if (!s.queue_zone.slots.empty()) add(s.queue_zone, {Owner::Kind::station, s.id.value, 0});
  }
  for (const auto& e : world.elevators) {
    for (std::size_t q = 0; q < e.queues.size(); ++q) {
      if (!e.queues[q].slots.empty()) add(e.queues[q], {Owner::Kind::elevator, e.id.value, static_cast<int>(q)});
    }
  }
  return z;
}

// ---------------------------------------------------------------------------
// Planner

Planner::Planner(const World& world, PlannerOptions options)
    : world_(world), options_(options), zones_(ZoneIndex::build(world)) {}

double Planner::edge_heading(const Edge& e) const {
  const auto& a = world_.graph.waypoint(e.from);
  const auto& b = world_.graph.waypoint(e.to);
  return kinematics::normalize_heading(std::atan2(b.y - a.y, b.x - a.x));
}

double Planner::edge_duration(const Edge& e, double heading, const kinematics::KinematicsParams& params) const {
  const double turn = kinematics::turn_time(params, kinematics::heading_delta(heading, edge_heading(e)));
  return turn + kinematics::cruise_time(params, 0.0, e.length);
}

bool Planner::allowed(WaypointId w, WaypointId start, WaypointId goal) const {
  if (w == start || w == goal) return true;
  const auto& wp = world_.graph.waypoint(w);
  if (wp.has(kStorageLocation) || wp.has(kDwellingPoint)) return false;
  const int z = zones_.zone(w);
  if (z < 0) return true;
  return z == zones_.zone(start) || z == zones_.zone(goal);
}

const std::vector<double>& Planner::heuristic(WaypointId goal, const kinematics::KinematicsParams& params) const {
  const bool same = params.acc == cached_params_.acc && params.dec_mag == cached_params_.dec_mag &&
                    params.top_speed == cached_params_.top_speed;
  if (!same) {
    heuristic_cache_.clear();
    cached_params_ = params;
  }
  auto it = heuristic_cache_.find(goal.value);
  if (it != heuristic_cache_.end()) return it->second;
  // Backward Dijkstra on cruise times from rest; turns and waits ignored.
  std::vector<double> h(world_.graph.size(), kForever);
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  h[goal.index()] = 0.0;
  pq.push({0.0, goal.value});
  const auto& edges = world_.graph.edges();
  while (!pq.empty()) {
    const auto [d, v] = pq.top();
    pq.pop();
    if (d > h[static_cast<std::size_t>(v)]) continue;
    for (int ei : world_.graph.in_edges(WaypointId(v))) {
      const Edge& e = edges[static_cast<std::size_t>(ei)];
      const double nd = d + kinematics::cruise_time(params, 0.0, e.length);
      if (nd < h[e.from.index()]) {
        h[e.from.index()] = nd;
        pq.push({nd, e.from.value});
      }
    }
  }
  return heuristic_cache_.emplace(goal.value, std::move(h)).first->second;
}

std::optional<TimedPath> Planner::plan(const ReservationTable& table, RobotId robot, WaypointId start,
                                       double start_heading, WaypointId goal, double t,
                                       const kinematics::KinematicsParams& params) const {
  ++searches_;
  const double pad = options_.safety_margin;
  const auto& h = heuristic(goal, params);
  if (h[start.index()] == kForever) return std::nullopt;

  struct Node {
    int wp;
    int interval;
    int prev;  ///< incoming waypoint, -1 at the start
    double arrival;
    double depart;  ///< departure from the parent
    double turn;
    double heading;
    int parent;
    int edge;  ///< edge index used to get here
  };
  std::vector<Node> nodes;
  std::unordered_map<int, std::vector<Interval>> intervals;
  auto safe = [&](int w) -> const std::vector<Interval>& {
    auto it = intervals.find(w);
    if (it != intervals.end()) return it->second;
    return intervals.emplace(w, table.safe_intervals(WaypointId(w), robot, pad)).first->second;
  };

  const auto& start_iv = safe(start.value);
  int start_idx = -1;
  for (std::size_t i = 0; i < start_iv.size(); ++i) {
    if (start_iv[i].start <= t + kEps && t < start_iv[i].end) {
      start_idx = static_cast<int>(i);
      break;
    }
  }
  if (start_idx < 0) {
    // The padding may cover t right after another robot left; fall back to
    // the unpadded gap.
    const auto raw = table.safe_intervals(start, robot, 0.0);
    for (std::size_t i = 0; i < raw.size(); ++i) {
      if (raw[i].start <= t + kEps && t < raw[i].end) {
        auto& iv = intervals[start.value];
        iv.insert(iv.begin(), Interval{t, raw[i].end});
        start_idx = 0;
        break;
      }
    }
  }
  if (start_idx < 0) return std::nullopt;

  auto key = [](int wp, int iv, int prev) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(wp)) << 40) ^
           (static_cast<std::uint64_t>(static_cast<std::uint32_t>(iv)) << 24) ^
           static_cast<std::uint64_t>(static_cast<std::uint32_t>(prev + 1));
  };
  std::unordered_map<std::uint64_t, double> best;
  using Item = std::tuple<double, double, int>;  // f, arrival, node
  std::priority_queue<Item, std::vector<Item>, std::greater<>> open;

  nodes.push_back({start.value, start_idx, -1, t, t, 0.0, kinematics::normalize_heading(start_heading), -1, -1});
  best[key(start.value, start_idx, -1)] = t;
  open.push({t + h[start.index()], t, 0});

  const auto& edges = world_.graph.edges();
  int found = -1;
  int expansions = 0;
  while (!open.empty()) {
    const auto [f, g, idx] = open.top();
    open.pop();
    const Node n = nodes[static_cast<std::size_t>(idx)];
    if (g > best[key(n.wp, n.interval, n.prev)] + kEps) continue;
    const Interval here = safe(n.wp)[static_cast<std::size_t>(n.interval)];
    if (n.wp == goal.value && here.end == kForever) {
      found = idx;
      break;
    }
    if (++expansions > options_.max_expansions) break;
    ++expansions_;
    for (int ei : world_.graph.out_edges(WaypointId(n.wp))) {
      const Edge& e = edges[static_cast<std::size_t>(ei)];
      if (!allowed(e.to, start, goal)) continue;
      if (h[e.to.index()] == kForever) continue;
      const double heading = edge_heading(e);
      const double turn = kinematics::turn_time(params, kinematics::heading_delta(n.heading, heading));
      const double dur = turn + kinematics::cruise_time(params, 0.0, e.length);
      // Slots skipped by a queue shortcut must stay free during the move.
      std::vector<WaypointId> skipped;
      if (e.shortcut) {
        const int z = zones_.zone(e.from);
        if (z >= 0 && z == zones_.zone(e.to)) {
          const int a = zones_.slot_of[e.from.index()];
          const int b = zones_.slot_of[e.to.index()];
          for (int s = std::min(a, b) + 1; s < std::max(a, b); ++s) {
            skipped.push_back(zones_.zones[static_cast<std::size_t>(z)].slots[static_cast<std::size_t>(s)]);
          }
        }
      }
      const auto& ivs = safe(e.to.value);
      for (std::size_t j = 0; j < ivs.size(); ++j) {
        const Interval& iv = ivs[j];
        if (iv.start > here.end) break;
        const double depart = std::max(n.arrival, iv.start);
        const double arrive = depart + dur;
        if (arrive > std::min(here.end, iv.end) + kEps) continue;
        bool skip_ok = true;
        for (WaypointId s : skipped) {
          if (!table.free_for(s, robot, depart, arrive, pad)) {
            skip_ok = false;
            break;
          }
        }
        if (!skip_ok) continue;
        const auto k = key(e.to.value, static_cast<int>(j), n.wp);
        auto bit = best.find(k);
        if (bit != best.end() && bit->second <= arrive + kEps) continue;
        best[k] = arrive;
        nodes.push_back({e.to.value, static_cast<int>(j), n.wp, arrive, depart, turn, heading, idx, ei});
        open.push({arrive + h[e.to.index()], arrive, static_cast<int>(nodes.size() - 1)});
      }
    }
  }
  if (found < 0) return std::nullopt;

  std::vector<int> chain;
  for (int i = found; i >= 0; i = nodes[static_cast<std::size_t>(i)].parent) chain.push_back(i);
  std::reverse(chain.begin(), chain.end());

  TimedPath path;
  path.robot = robot;
  path.origin = start;
  path.destination = goal;
  path.start_time = t;
  path.start_heading = kinematics::normalize_heading(start_heading);
  double clock = t;
  double heading = path.start_heading;
  double occupied_since = t;
  for (std::size_t c = 1; c < chain.size(); ++c) {
    const Node& n = nodes[static_cast<std::size_t>(chain[c])];
    const Edge& e = edges[static_cast<std::size_t>(n.edge)];
    if (n.depart > clock + kEps) path.segments.push_back({Action::wait, e.from, e.from, clock, n.depart, heading});
    double go_start = n.depart;
    if (n.turn > kEps) {
      path.segments.push_back({Action::turn, e.from, e.from, n.depart, n.depart + n.turn, n.heading});
      go_start += n.turn;
    }
    path.segments.push_back({Action::go, e.from, e.to, go_start, n.arrival, n.heading});
    heading = n.heading;
    clock = n.arrival;
    path.occupancy.push_back({e.from, occupied_since, n.arrival});
    occupied_since = n.depart;
    if (e.shortcut) {
      const int z = zones_.zone(e.from);
      if (z >= 0 && z == zones_.zone(e.to)) {
        const int a = zones_.slot_of[e.from.index()];
        const int b = zones_.slot_of[e.to.index()];
        for (int s = std::min(a, b) + 1; s < std::max(a, b); ++s) {
          path.occupancy.push_back(
              {zones_.zones[static_cast<std::size_t>(z)].slots[static_cast<std::size_t>(s)], n.depart, n.arrival});
        }
      }
    }
  }
  path.occupancy.push_back({goal, occupied_since, kForever});
  path.end_time = clock;
  return path;
}

bool Planner::commit(ReservationTable& table, const TimedPath& path) {
  table.release_from(path.robot, path.start_time);
  bool ok = true;
  for (const auto& o : path.occupancy) ok = table.reserve(o.waypoint, path.robot, o.start, o.end) && ok;
  return ok;
}

// ---------------------------------------------------------------------------
// Queues

std::optional<WaypointId> QueueManager::admit(RobotId robot) {
  if (contains(robot)) return target(robot);
  if (!has_room()) return std::nullopt;
  order_.push_back(robot);
  return target(robot);
}

void QueueManager::leave(RobotId robot) {
  const auto it = std::find(order_.begin(), order_.end(), robot);
  if (it != order_.end()) order_.erase(it);
}

bool QueueManager::contains(RobotId robot) const {
  return std::find(order_.begin(), order_.end(), robot) != order_.end();
}

std::optional<WaypointId> QueueManager::target(RobotId robot) const {
  const auto it = std::find(order_.begin(), order_.end(), robot);
  if (it == order_.end()) return std::nullopt;
  const auto k = static_cast<int>(it - order_.begin());
  return zone_.slots[static_cast<std::size_t>(zone_.capacity() - 1 - k)];
}

std::vector<TimedPath> advance_queue(const Planner& planner, ReservationTable& table, const QueueManager& queue,
                                     const std::vector<ParkedRobot>& parked, double t) {
  std::vector<TimedPath> moves;
  for (RobotId r : queue.order()) {
    const auto it = std::find_if(parked.begin(), parked.end(), [&](const ParkedRobot& p) { return p.robot == r; });
    if (it == parked.end()) continue;
    const WaypointId target = *queue.target(r);
    if (it->waypoint == target) continue;
    // Never move backwards inside the zone.
    const auto& zi = planner.zones();
    if (zi.zone(it->waypoint) >= 0 && zi.slot_of[it->waypoint.index()] > zi.slot_of[target.index()]) continue;
    auto path = planner.plan(table, r, it->waypoint, it->heading, target, t, it->params);
    if (!path) continue;
    Planner::commit(table, *path);
    moves.push_back(std::move(*path));
  }
  return moves;
}

// ---------------------------------------------------------------------------
// Elevators

void ElevatorManager::request(RobotId robot, const PortPair& ports, double t) {
  for (const auto& q : queue_) {
    if (q.robot == robot) return;
  }
  queue_.push_back({robot, ports, t});
}

std::optional<RobotId> ElevatorManager::front() const {
  if (queue_.empty()) return std::nullopt;
  return queue_.front().robot;
}

std::optional<TransitRecord> ElevatorManager::try_start(ReservationTable& table, double t) {
  if (queue_.empty() || t + kEps < free_at_) return std::nullopt;
  const TransitRequest req = queue_.front();
  if (!table.free_for(req.ports.to, req.robot, t, kForever)) return std::nullopt;
  queue_.pop_front();
  const double arrival = t + req.ports.transit_time;
  table.release_from(req.robot, t);
  table.reserve_elevator(id_, req.robot, t, arrival);
  table.reserve(req.ports.to, req.robot, t, kForever);
  free_at_ = arrival;
  TransitRecord rec{req.robot, req.request_time, t, arrival, req.ports.from, req.ports.to};
  log_.push_back(rec);
  return rec;
}

}  // namespace rmfs::pathplan

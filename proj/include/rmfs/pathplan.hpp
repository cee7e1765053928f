#pragma once

#include <cstdint>
#include <deque>
#include <limits>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "rmfs/kinematics.hpp"
#include "rmfs/model.hpp"

namespace rmfs::pathplan {

inline constexpr double kForever = std::numeric_limits<double>::infinity();

struct Interval {
  double start = 0.0;
  double end = kForever;
};

struct Reservation {
  RobotId robot;
  double start = 0.0;
  double end = kForever;
};

/// Time intervals during which robots hold waypoints and elevators.
/// Overlap is strict: [a, b) and [b, c) do not conflict.
class ReservationTable {
 public:
  ReservationTable() = default;
  ReservationTable(std::size_t waypoints, std::size_t elevators);

  /// Inserts an interval; an overlap with another robot is still recorded
  /// but counted as a violation and reported by the return value.
  bool reserve(WaypointId w, RobotId robot, double start, double end);
  bool reserve_elevator(ElevatorId e, RobotId robot, double start, double end);

  /// Drops the robot's intervals from t on and truncates those spanning t.
  void release_from(RobotId robot, double t);

  /// Gaps between other robots' intervals, each padded by `pad` on both sides.
  [[nodiscard]] std::vector<Interval> safe_intervals(WaypointId w, RobotId robot, double pad) const;
  [[nodiscard]] bool free_for(WaypointId w, RobotId robot, double start, double end, double pad = 0.0) const;
  [[nodiscard]] std::optional<RobotId> occupant(WaypointId w, double t) const;

  [[nodiscard]] const std::vector<Reservation>& at(WaypointId w) const { return waypoints_.at(w.index()); }
  [[nodiscard]] const std::vector<Reservation>& elevator(ElevatorId e) const { return elevators_.at(e.index()); }
  [[nodiscard]] long violations() const { return violations_; }
  [[nodiscard]] std::size_t waypoint_count() const { return waypoints_.size(); }

  /// Full pairwise audit; one message per overlapping pair.
  [[nodiscard]] std::vector<std::string> audit() const;

 private:
  static bool overlaps(const std::vector<Reservation>& list, RobotId robot, double start, double end);
  static void insert_sorted(std::vector<Reservation>& list, Reservation r);

  std::vector<std::vector<Reservation>> waypoints_;
  std::vector<std::vector<Reservation>> elevators_;
  std::unordered_map<int, std::vector<int>> touched_;  ///< robot -> waypoints
  long violations_ = 0;
};

enum class Action { go, turn, wait, elevator };

const char* to_string(Action a);

struct PathSegment {
  Action action = Action::go;
  WaypointId from;
  WaypointId to;
  double start = 0.0;
  double end = 0.0;
  double heading = 0.0;  ///< heading held during and after the segment
};

/// Reserved occupancy of a single waypoint along a path.
struct Occupancy {
  WaypointId waypoint;
  double start = 0.0;
  double end = kForever;
};

struct TimedPath {
  RobotId robot;
  WaypointId origin;
  WaypointId destination;
  double start_time = 0.0;
  double end_time = 0.0;
  double start_heading = 0.0;
  std::vector<PathSegment> segments;
  std::vector<Occupancy> occupancy;

  [[nodiscard]] bool empty() const { return segments.empty(); }
  [[nodiscard]] double duration() const { return end_time - start_time; }
  [[nodiscard]] double final_heading() const;
  /// Waypoints visited in order, origin included.
  [[nodiscard]] std::vector<WaypointId> waypoints() const;
  [[nodiscard]] double distance(const WaypointGraph& graph) const;
  /// Interpolated pose at t (clamped to the path's time span).
  [[nodiscard]] Pose pose_at(const WaypointGraph& graph, const kinematics::KinematicsParams& params, double t) const;
};

/// Queue zones of stations and elevators indexed by waypoint.
struct ZoneIndex {
  struct Owner {
    enum class Kind { station, elevator } kind = Kind::station;
    int id = -1;     ///< station or elevator id
    int queue = 0;   ///< elevator queue index
  };
  std::vector<QueueZone> zones;
  std::vector<Owner> owners;
  std::vector<int> zone_of;  ///< per waypoint, -1 outside zones
  std::vector<int> slot_of;  ///< per waypoint, slot index inside its zone

  static ZoneIndex build(const World& world);
  [[nodiscard]] int zone(WaypointId w) const { return zone_of.at(w.index()); }
};

struct PlannerOptions {
  double safety_margin = 0.1;   ///< s, padding around other robots' intervals
  double replan_window = 30.0;  ///< s, wait before retrying after a failed search
  int max_expansions = 400000;
};

/// Safe-interval path planning over (waypoint, safe interval, incoming
/// heading). Every edge is driven from rest: turn on the spot, then cruise.
/// The destination is held open-ended after arrival.
class Planner {
 public:
  Planner(const World& world, PlannerOptions options = {});

  [[nodiscard]] std::optional<TimedPath> plan(const ReservationTable& table, RobotId robot, WaypointId start,
                                              double start_heading, WaypointId goal, double t,
                                              const kinematics::KinematicsParams& params) const;

  /// Releases the robot's reservations from the path start and reserves the
  /// path. Returns false when any interval conflicted.
  static bool commit(ReservationTable& table, const TimedPath& path);

  /// Duration of one edge from rest including the turn toward it.
  [[nodiscard]] double edge_duration(const Edge& e, double heading, const kinematics::KinematicsParams& params) const;
  [[nodiscard]] double edge_heading(const Edge& e) const;

  [[nodiscard]] const ZoneIndex& zones() const { return zones_; }
  [[nodiscard]] const PlannerOptions& options() const { return options_; }
  [[nodiscard]] const World& world() const { return world_; }
  [[nodiscard]] long searches() const { return searches_; }
  [[nodiscard]] long expansions() const { return expansions_; }

 private:
  [[nodiscard]] bool allowed(WaypointId w, WaypointId start, WaypointId goal) const;
  const std::vector<double>& heuristic(WaypointId goal, const kinematics::KinematicsParams& params) const;

  const World& world_;
  PlannerOptions options_;
  ZoneIndex zones_;
  mutable std::unordered_map<int, std::vector<double>> heuristic_cache_;
  mutable kinematics::KinematicsParams cached_params_;
  mutable long searches_ = 0;
  mutable long expansions_ = 0;
};

/// FIFO order of robots inside one queue zone. The robot at position k
/// (0 = front) targets slot capacity-1-k, i.e. one behind the robot ahead.
class QueueManager {
 public:
  explicit QueueManager(QueueZone zone) : zone_(std::move(zone)) {}

  [[nodiscard]] bool has_room() const { return static_cast<int>(order_.size()) < zone_.capacity(); }
  /// Appends the robot; nullopt when the zone is full.
  std::optional<WaypointId> admit(RobotId robot);
  /// Removes the robot (normally the front one leaving the end waypoint).
  void leave(RobotId robot);
  [[nodiscard]] bool contains(RobotId robot) const;
  [[nodiscard]] std::optional<WaypointId> target(RobotId robot) const;
  [[nodiscard]] const std::deque<RobotId>& order() const { return order_; }
  [[nodiscard]] const QueueZone& zone() const { return zone_; }

 private:
  QueueZone zone_;
  std::deque<RobotId> order_;
};

/// Robot state the queue advance needs.
struct ParkedRobot {
  RobotId robot;
  WaypointId waypoint;
  double heading = 0.0;
  kinematics::KinematicsParams params;
};

/// Moves parked robots front-to-back toward their target slots. Paths are
/// committed to the table; robots whose move cannot be planned stay put.
std::vector<TimedPath> advance_queue(const Planner& planner, ReservationTable& table, const QueueManager& queue,
                                     const std::vector<ParkedRobot>& parked, double t);

struct TransitRequest {
  RobotId robot;
  PortPair ports;
  double request_time = 0.0;
};

struct TransitRecord {
  RobotId robot;
  double request_time = 0.0;
  double start_time = 0.0;
  double arrival_time = 0.0;
  WaypointId from;
  WaypointId to;
};

/// One-robot-at-a-time elevator served in request order.
class ElevatorManager {
 public:
  explicit ElevatorManager(ElevatorId id) : id_(id) {}

  void request(RobotId robot, const PortPair& ports, double t);
  /// Starts the front request if the car is free at t and its exit port is
  /// free from t on. Reserves the car and the exit port.
  std::optional<TransitRecord> try_start(ReservationTable& table, double t);

  [[nodiscard]] ElevatorId id() const { return id_; }
  [[nodiscard]] double free_at() const { return free_at_; }
  [[nodiscard]] bool idle() const { return queue_.empty(); }
  [[nodiscard]] std::optional<RobotId> front() const;
  [[nodiscard]] const std::vector<TransitRecord>& log() const { return log_; }

 private:
  ElevatorId id_;
  std::deque<TransitRequest> queue_;
  double free_at_ = 0.0;
  std::vector<TransitRecord> log_;
};

}  // namespace rmfs::pathplan

#pragma once

#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "rmfs/ids.hpp"
#include "rmfs/kinematics.hpp"

namespace rmfs {

struct Sku {
  SkuId id;
  double unit_space = 1.0;
  double popularity_weight = 1.0;
};

enum WaypointFlag : unsigned {
  kNoFlags = 0,
  kStorageLocation = 1u << 0,
  kStationEndpoint = 1u << 1,
  kQueueMember = 1u << 2,
  kDwellingPoint = 1u << 3,
  kElevatorPort = 1u << 4,
};

struct Waypoint {
  WaypointId id;
  int floor = 0;
  double x = 0.0;  ///< m
  double y = 0.0;  ///< m
  unsigned flags = kNoFlags;

  [[nodiscard]] bool has(WaypointFlag f) const { return (flags & f) != 0; }
};

struct Edge {
  WaypointId from;
  WaypointId to;
  double length = 0.0;  ///< m
  bool shortcut = false;
};

/// Directed multi-floor waypoint graph. Edges never cross floors; floors are
/// joined only through elevator port pairs.
class WaypointGraph {
 public:
  WaypointId add_waypoint(int floor, double x, double y, unsigned flags = kNoFlags);
  /// Adds an edge whose length is the Euclidean distance of its endpoints.
  void add_edge(WaypointId from, WaypointId to, bool shortcut = false);
  /// Adds an edge with an explicit length (explicit layouts); validation
  /// reports mismatches against the endpoint distance.
  void add_edge(WaypointId from, WaypointId to, double length, bool shortcut);
  bool remove_edge(WaypointId from, WaypointId to);

  [[nodiscard]] const Waypoint& waypoint(WaypointId id) const { return waypoints_.at(id.index()); }
  Waypoint& waypoint(WaypointId id) { return waypoints_.at(id.index()); }
  [[nodiscard]] const std::vector<Waypoint>& waypoints() const { return waypoints_; }
  [[nodiscard]] const std::vector<Edge>& edges() const { return edges_; }
  [[nodiscard]] std::size_t size() const { return waypoints_.size(); }

  /// Indices into edges().
  [[nodiscard]] std::span<const int> out_edges(WaypointId id) const { return out_.at(id.index()); }
  [[nodiscard]] std::span<const int> in_edges(WaypointId id) const { return in_.at(id.index()); }
  [[nodiscard]] const Edge* find_edge(WaypointId from, WaypointId to) const;

  [[nodiscard]] double distance(WaypointId a, WaypointId b) const;
  [[nodiscard]] int floor_count() const;

 private:
  std::vector<Waypoint> waypoints_;
  std::vector<Edge> edges_;
  std::vector<std::vector<int>> out_;
  std::vector<std::vector<int>> in_;
};

/// FIFO chain of waypoints in front of a station or elevator port. The last
/// slot is the end waypoint where the station docks or the elevator loads.
struct QueueZone {
  std::vector<WaypointId> slots;

  [[nodiscard]] WaypointId end() const { return slots.back(); }
  [[nodiscard]] WaypointId entry() const { return slots.front(); }
  [[nodiscard]] int index_of(WaypointId w) const;
  [[nodiscard]] bool contains(WaypointId w) const { return index_of(w) >= 0; }
  [[nodiscard]] int capacity() const { return static_cast<int>(slots.size()); }
};

struct PortPair {
  WaypointId from;
  WaypointId to;
  double transit_time = 10.0;  ///< s
};

struct Elevator {
  ElevatorId id;
  std::vector<PortPair> port_pairs;
  std::vector<QueueZone> queues;  ///< one per loading port
  std::optional<RobotId> occupant;
};

enum class StationKind { pick, replenishment };

struct Station {
  StationId id;
  StationKind kind = StationKind::pick;
  WaypointId input_waypoint;   ///< docking waypoint, end of the queue zone
  WaypointId output_waypoint;  ///< first waypoint after leaving the station
  QueueZone queue_zone;
  std::vector<OrderId> assigned_orders;
  int order_capacity = 8;
  double handling_time = 10.0;  ///< s per unit
  bool active = true;
};

enum class PodPlaceKind { storage, robot, station };

struct PodPlace {
  PodPlaceKind kind = PodPlaceKind::storage;
  int ref = -1;  ///< storage waypoint, robot or station id depending on kind

  friend bool operator==(const PodPlace&, const PodPlace&) = default;
};

struct Pod {
  PodId id;
  double capacity = 50.0;
  std::map<SkuId, int> contents;
  std::map<SkuId, int> reserved_picks;
  double occupied = 0.0;        ///< cached sum of contents * unit_space
  double reserved_space = 0.0;  ///< promised to pending replenishments
  PodPlace place;
  bool claimed = false;  ///< bound to a robot task

  [[nodiscard]] int units(SkuId sku) const;
  [[nodiscard]] int reserved(SkuId sku) const;
  [[nodiscard]] int unreserved(SkuId sku) const { return units(sku) - reserved(sku); }
  [[nodiscard]] double free_space() const { return capacity - occupied - reserved_space; }
};

struct Pose {
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;  ///< radians in [0, 2pi)
};

enum class TaskKind { extraction, insertion, store, rest, charge };

const char* to_string(TaskKind kind);

struct PickAssignment {
  OrderId order;
  SkuId sku;
  int units = 0;
};

/// A bundle of requests executed by one robot. Extraction and insertion tasks
/// target a single pod and station.
struct Task {
  TaskKind kind = TaskKind::rest;
  std::optional<PodId> pod;
  std::optional<StationId> station;
  std::optional<WaypointId> destination;  ///< storage location or dwelling point
  std::vector<PickAssignment> picks;
  std::vector<OrderId> replenishments;
};

enum class RequestKind { extraction, insertion, store };

struct Request {
  RequestKind kind = RequestKind::insertion;
  std::optional<PodId> pod;
  std::optional<StationId> station;
  std::optional<WaypointId> storage_location;
  std::vector<OrderId> orders;
};

struct Robot {
  RobotId id;
  int floor = 0;
  WaypointId waypoint;  ///< current or last passed waypoint
  Pose pose;
  double speed = 0.0;
  std::optional<PodId> carried_pod;
  std::optional<Task> task;
  kinematics::KinematicsParams kinematics;
};

struct OrderLine {
  SkuId sku;
  int requested = 0;
  int picked = 0;
  int bound = 0;  ///< units reserved on pods by extraction tasks, not yet picked

  [[nodiscard]] int unbound() const { return requested - picked - bound; }
  [[nodiscard]] int outstanding() const { return requested - picked; }
};

struct PickOrder {
  OrderId id;
  std::vector<OrderLine> lines;
  double submit_time = 0.0;
  std::optional<StationId> assigned_station;
  std::optional<double> completion_time;

  [[nodiscard]] bool filled() const;
  [[nodiscard]] int total_units() const;
  OrderLine* line_for(SkuId sku);
};

struct ReplenishmentOrder {
  OrderId id;
  SkuId sku;
  int units = 1;
  bool is_return = false;
  double submit_time = 0.0;
  std::optional<StationId> assigned_station;
  std::optional<PodId> assigned_pod;
  std::optional<double> stored_time;
};

/// Per-SKU unit ledger backing the conservation invariant.
struct InventoryLedger {
  std::vector<long> initial;
  std::vector<long> stored;
  std::vector<long> picked;

  void resize(std::size_t skus);
};

enum class ModelErrc {
  reservation_underflow,
  pod_not_at_station,
  order_overfill,
  capacity_exceeded,
  unassigned_order,
  unknown_entity,
};

class ModelError : public std::runtime_error {
 public:
  ModelError(ModelErrc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  [[nodiscard]] ModelErrc code() const { return code_; }

 private:
  ModelErrc code_;
};

/// The mutable simulated state.
struct World {
  double cell_size = 0.45;
  WaypointGraph graph;
  std::vector<Station> stations;
  std::vector<Elevator> elevators;
  std::vector<WaypointId> storage_locations;
  std::vector<WaypointId> dwelling_points;
  std::vector<Pod> pods;
  std::vector<Robot> robots;
  std::vector<Sku> skus;
  std::vector<PickOrder> pick_orders;
  std::vector<ReplenishmentOrder> repl_orders;
  std::vector<Request> insertion_requests;
  InventoryLedger ledger;
  double now = 0.0;

  /// Indexed by waypoint: pod stored there / pod inbound to it.
  std::vector<PodId> stored_pod;
  std::vector<PodId> inbound_pod;

  Pod& pod(PodId id) { return pods.at(id.index()); }
  [[nodiscard]] const Pod& pod(PodId id) const { return pods.at(id.index()); }
  Robot& robot(RobotId id) { return robots.at(id.index()); }
  [[nodiscard]] const Robot& robot(RobotId id) const { return robots.at(id.index()); }
  Station& station(StationId id) { return stations.at(id.index()); }
  [[nodiscard]] const Station& station(StationId id) const { return stations.at(id.index()); }
  [[nodiscard]] const Sku& sku(SkuId id) const { return skus.at(id.index()); }
  PickOrder& pick_order(OrderId id) { return pick_orders.at(id.index()); }
  [[nodiscard]] const PickOrder& pick_order(OrderId id) const { return pick_orders.at(id.index()); }
  ReplenishmentOrder& repl_order(OrderId id) { return repl_orders.at(id.index()); }
  [[nodiscard]] const ReplenishmentOrder& repl_order(OrderId id) const { return repl_orders.at(id.index()); }

  /// Sizes the storage-location occupancy tables to the graph.
  void reset_occupancy();
  /// Places a pod on a free storage location.
  void store_pod_at(PodId pod, WaypointId location);
  [[nodiscard]] bool location_free(WaypointId location) const;
  /// Waypoint at which a pod currently is (storage location, carrier or station dock).
  [[nodiscard]] WaypointId pod_waypoint(PodId pod) const;
};

/// Moves picked units out of a docked pod into an order line.
void apply_pick(World& world, PodId pod, SkuId sku, int units, OrderId order, StationId station);

/// Stores a replenishment order's units into a docked pod.
void apply_store(World& world, PodId pod, OrderId repl_order, StationId station);

/// Adds units to a pod outside of any station (initial seeding). Counted in the
/// ledger's initial column.
void seed_units(World& world, PodId pod, SkuId sku, int units);

double inventory_fill_fraction(const World& world);

double occupied_space(const World& world, const Pod& pod);

/// Total physical units per SKU across all pods.
std::vector<long> stock_by_sku(const World& world);

/// Checks the model invariants (space, SKU conservation, location
/// exclusivity, order lifecycle, station capacity). Returns one message per
/// violation.
std::vector<std::string> check_model_invariants(const World& world);

}  // namespace rmfs

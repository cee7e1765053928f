#pragma once

#include <array>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "rmfs/model.hpp"
#include "rmfs/pathplan.hpp"
#include "rmfs/rng.hpp"

namespace rmfs::control {

enum class Problem { roa, poa, rps, pps, psa, ta, pp, sa, mm };

inline constexpr std::array<Problem, 9> kAllProblems{Problem::roa, Problem::poa, Problem::rps,
                                                     Problem::pps, Problem::psa, Problem::ta,
                                                     Problem::pp,  Problem::sa,  Problem::mm};

const char* to_string(Problem p);
Problem problem_from_string(const std::string& s);

/// World state changes that call event-driven controllers.
enum class Trigger {
  new_replenishment_order,
  replenishment_order_stored,
  new_pick_order,
  pick_order_completed,
  sku_unit_picked,
  task_assigned_to_robot,
  pod_needs_storage,
  robot_needs_task,
  robot_new_destination,
  schedule,  ///< SA and MM, which are not event-driven
};

inline constexpr std::array<Trigger, 9> kEventTriggers{
    Trigger::new_replenishment_order, Trigger::replenishment_order_stored, Trigger::new_pick_order,
    Trigger::pick_order_completed,    Trigger::sku_unit_picked,            Trigger::task_assigned_to_robot,
    Trigger::pod_needs_storage,       Trigger::robot_needs_task,           Trigger::robot_new_destination};

const char* to_string(Trigger t);

/// Controllers called, in order, when the trigger fires.
std::span<const Problem> subscribers(Trigger t);
bool is_subscribed(Problem p, Trigger t);

class ControlError : public std::runtime_error {
 public:
  enum class Kind { unknown_controller, invalid_config };
  ControlError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  [[nodiscard]] Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

struct TriggerRecord {
  double time = 0.0;
  Trigger trigger = Trigger::schedule;
  int subject = -1;  ///< order, robot or pod id the trigger concerns
};

struct DecisionRecord {
  std::size_t trigger_index = 0;
  double time = 0.0;
  Trigger trigger = Trigger::schedule;
  Problem problem = Problem::roa;
  std::string controller;
  std::string input;
  std::string output;
};

/// Trigger firings and the decisions taken under them.
class DecisionLog {
 public:
  std::size_t fire(double time, Trigger trigger, int subject);
  void decide(std::size_t trigger_index, Problem problem, std::string controller, std::string input,
              std::string output);

  [[nodiscard]] const std::vector<TriggerRecord>& triggers() const { return triggers_; }
  [[nodiscard]] const std::vector<DecisionRecord>& decisions() const { return decisions_; }
  void set_keep_details(bool keep) { keep_details_ = keep; }

  /// Empty iff every decision maps to a subscribed trigger and every
  /// event-driven trigger produced one decision per subscriber.
  [[nodiscard]] std::vector<std::string> check_pairing() const;

 private:
  std::vector<TriggerRecord> triggers_;
  std::vector<DecisionRecord> decisions_;
  bool keep_details_ = true;
};

// ---------------------------------------------------------------------------
// Controller interfaces

class Controller {
 public:
  virtual ~Controller() = default;
  [[nodiscard]] virtual std::string name() const = 0;
  [[nodiscard]] virtual Problem problem() const = 0;
  /// Controllers may expose a time to be woken at.
  [[nodiscard]] virtual std::optional<double> next_event_time() const { return std::nullopt; }
  virtual void update(const World&, double) {}
};

/// ROA: replenishment order to replenishment station.
class ReplenishmentOrderAssigner : public Controller {
 public:
  [[nodiscard]] Problem problem() const override { return Problem::roa; }
  virtual std::optional<StationId> assign(const World& world, const ReplenishmentOrder& order) = 0;
};

/// POA: pick order to pick station.
class PickOrderAssigner : public Controller {
 public:
  [[nodiscard]] Problem problem() const override { return Problem::poa; }
  virtual std::optional<StationId> assign(const World& world, const PickOrder& order) = 0;
  /// Buffering assigners compute a whole backlog at once on a snapshot,
  /// possibly on another thread.
  [[nodiscard]] virtual bool buffering() const { return false; }
  virtual std::vector<std::pair<OrderId, StationId>> assign_batch(const World& snapshot,
                                                                  const std::vector<OrderId>& backlog);
};

/// RPS: replenishment order to pod.
class ReplenishmentPodSelector : public Controller {
 public:
  [[nodiscard]] Problem problem() const override { return Problem::rps; }
  virtual std::optional<PodId> select(const World& world, const ReplenishmentOrder& order, StationId station) = 0;
};

struct ExtractionPlan {
  PodId pod;
  std::vector<PickAssignment> picks;
  [[nodiscard]] int units() const;
};

/// PPS: pod to pick order lines at one station.
class PodSelector : public Controller {
 public:
  [[nodiscard]] Problem problem() const override { return Problem::pps; }
  virtual std::optional<ExtractionPlan> select(const World& world, StationId station,
                                               std::span<const PodId> candidates) = 0;
};

/// PSA: pod to free storage location.
class PodStorageAssigner : public Controller {
 public:
  [[nodiscard]] Problem problem() const override { return Problem::psa; }
  virtual WaypointId assign(const World& world, PodId pod, WaypointId from, Rng& rng) = 0;
};

/// One candidate the task allocator may hand to a robot.
struct TaskOption {
  TaskKind kind = TaskKind::rest;
  std::optional<StationId> station;
  std::optional<PodId> pod;
  WaypointId first_destination;
  double distance = 0.0;  ///< m, estimate from the robot to first_destination
  bool follow_up = false;  ///< robot already docked at the station with the pod
  std::vector<OrderId> replenishments;
};

/// TA: task to robot.
class TaskAllocator : public Controller {
 public:
  [[nodiscard]] Problem problem() const override { return Problem::ta; }
  /// Chooses one of the options (never empty: a rest option is always present).
  virtual std::size_t choose(const World& world, const Robot& robot, std::span<const TaskOption> options) = 0;
  [[nodiscard]] virtual int max_robots_per_station() const { return 3; }
};

/// PP: timed path for a robot with a new destination.
class PathPlanningController : public Controller {
 public:
  [[nodiscard]] Problem problem() const override { return Problem::pp; }
  virtual std::optional<pathplan::TimedPath> plan(const pathplan::Planner& planner,
                                                  const pathplan::ReservationTable& table, const Robot& robot,
                                                  WaypointId goal, double t) = 0;
};

struct StationSwitch {
  double time = 0.0;
  StationId station;
  bool active = true;
};

struct ControllerSwap {
  double time = 0.0;
  Problem problem = Problem::psa;
  std::string controller;
  nlohmann::json params = nlohmann::json::object();
};

/// SA: timed schedule of station activity.
class StationActivator : public Controller {
 public:
  explicit StationActivator(std::vector<StationSwitch> schedule);
  [[nodiscard]] std::string name() const override { return "schedule"; }
  [[nodiscard]] Problem problem() const override { return Problem::sa; }
  [[nodiscard]] std::optional<double> next_event_time() const override;
  /// Switches due at or before t, in schedule order.
  std::vector<StationSwitch> due(double t);

 private:
  std::vector<StationSwitch> schedule_;
  std::size_t cursor_ = 0;
};

/// MM: timed schedule of controller swaps.
class MethodManager : public Controller {
 public:
  explicit MethodManager(std::vector<ControllerSwap> schedule);
  [[nodiscard]] std::string name() const override { return "schedule"; }
  [[nodiscard]] Problem problem() const override { return Problem::mm; }
  [[nodiscard]] std::optional<double> next_event_time() const override;
  std::vector<ControllerSwap> due(double t);

 private:
  std::vector<ControllerSwap> schedule_;
  std::size_t cursor_ = 0;
};

// ---------------------------------------------------------------------------
// Configuration and registry

struct ControllerChoice {
  std::string name;
  nlohmann::json params = nlohmann::json::object();
};

struct ControllerConfig {
  std::map<Problem, ControllerChoice> choices{
      {Problem::roa, {"least_busy"}},   {Problem::poa, {"fewest_assigned"}}, {Problem::rps, {"emptiest_fit"}},
      {Problem::pps, {"max_pile_on"}},  {Problem::psa, {"random"}},          {Problem::ta, {"nearest"}},
      {Problem::pp, {"sipp"}},
  };
  std::vector<StationSwitch> sa_schedule;
  std::vector<ControllerSwap> mm_schedule;
  double optimizer_time_scale = 1.0;

  void validate() const;
};

ControllerConfig controller_config_from_json(const nlohmann::json& j);
nlohmann::json controller_config_to_json(const ControllerConfig& config);
ControllerConfig load_controller_config(const std::filesystem::path& file);

/// Names accepted for a problem.
std::vector<std::string> controller_names(Problem p);
std::unique_ptr<Controller> make_controller(Problem p, const std::string& name, const nlohmann::json& params);

/// One active controller per problem; swaps happen between events only.
class ControllerSet {
 public:
  explicit ControllerSet(const ControllerConfig& config);

  ReplenishmentOrderAssigner& roa() { return *roa_; }
  PickOrderAssigner& poa() { return *poa_; }
  ReplenishmentPodSelector& rps() { return *rps_; }
  PodSelector& pps() { return *pps_; }
  PodStorageAssigner& psa() { return *psa_; }
  TaskAllocator& ta() { return *ta_; }
  PathPlanningController& pp() { return *pp_; }
  StationActivator& sa() { return *sa_; }
  MethodManager& mm() { return *mm_; }
  [[nodiscard]] std::string active_name(Problem p) const;

  void swap(Problem p, const std::string& name, const nlohmann::json& params);

 private:
  std::unique_ptr<ReplenishmentOrderAssigner> roa_;
  std::unique_ptr<PickOrderAssigner> poa_;
  std::unique_ptr<ReplenishmentPodSelector> rps_;
  std::unique_ptr<PodSelector> pps_;
  std::unique_ptr<PodStorageAssigner> psa_;
  std::unique_ptr<TaskAllocator> ta_;
  std::unique_ptr<PathPlanningController> pp_;
  std::unique_ptr<StationActivator> sa_;
  std::unique_ptr<MethodManager> mm_;
};

// ---------------------------------------------------------------------------
// Shared helpers of the request/task pipeline

/// Planar distance plus a fixed penalty per floor change.
double estimate_distance(const World& world, WaypointId a, WaypointId b);

/// Units per SKU still needed by the orders assigned to a pick station and
/// not yet bound to a pod.
std::map<SkuId, int> unbound_demand(const World& world, StationId station);

/// Greedy binding of a pod's unreserved units to the station's unbound lines
/// (orders by id, lines in order; partial lines allowed).
ExtractionPlan bind_pod(const World& world, StationId station, PodId pod);

/// Stored, unclaimed pods able to serve at least one unbound unit at the station.
std::vector<PodId> servable_pods(const World& world, StationId station);

/// Robots whose current task targets the station.
int robots_bound_to(const World& world, StationId station);

/// Insertion requests grouped by (pod, station).
struct InsertionGroup {
  PodId pod;
  StationId station;
  std::vector<OrderId> orders;
};
std::vector<InsertionGroup> insertion_groups(const World& world);

/// Candidate tasks for a robot in class order; always ends with a rest option.
std::vector<TaskOption> enumerate_task_options(const World& world, const Robot& robot, int max_robots_per_station);

}  // namespace rmfs::control

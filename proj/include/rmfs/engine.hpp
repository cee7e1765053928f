#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <future>
#include <map>
#include <memory>
#include <optional>
#include <queue>
#include <stdexcept>
#include <string>
#include <vector>

#include "rmfs/control.hpp"
#include "rmfs/model.hpp"
#include "rmfs/pathplan.hpp"
#include "rmfs/rng.hpp"
#include "rmfs/scenario.hpp"

namespace rmfs::engine {

enum class EventKind {
  start,
  order_tick,
  path_done,
  retry,
  handling_done,
  elevator_arrival,
  elevator_retry,
  zone_retry,
  sample,
  schedule,
  buffered_decision,
};

const char* to_string(EventKind k);

struct Event {
  double time = 0.0;
  std::uint64_t seq = 0;
  int agent = -1;
  EventKind kind = EventKind::start;
  std::uint64_t token = 0;  ///< stale-event guard for robot events
  int payload = 0;
};

/// Min-queue ordered by (time, insertion sequence).
class EventQueue {
 public:
  std::uint64_t push(double time, int agent, EventKind kind, std::uint64_t token = 0, int payload = 0);
  Event pop();
  [[nodiscard]] const Event& top() const { return heap_.top(); }
  [[nodiscard]] bool empty() const { return heap_.empty(); }
  [[nodiscard]] std::size_t size() const { return heap_.size(); }

 private:
  struct Later {
    bool operator()(const Event& a, const Event& b) const {
      return a.time != b.time ? a.time > b.time : a.seq > b.seq;
    }
  };
  std::priority_queue<Event, std::vector<Event>, Later> heap_;
  std::uint64_t next_seq_ = 0;
};

/// Keeps simulated time from running ahead of buffered computations: while a
/// computation runs, the clock may reach at most start + convert(elapsed wall).
class Pacer {
 public:
  using WallClock = std::function<double()>;
  using Convert = std::function<double(double)>;

  explicit Pacer(double time_scale = 1.0, WallClock clock = {}, Convert convert = {});

  int begin(double sim_start);
  /// Marks the computation finished; returns the simulation time at which its
  /// decision becomes visible.
  double finish(int handle);
  /// Smallest clock bound over running computations, if any.
  [[nodiscard]] std::optional<double> bound() const;
  [[nodiscard]] bool running(int handle) const;
  [[nodiscard]] std::size_t active() const { return running_.size(); }

  static double steady_seconds();

 private:
  struct Job {
    double sim_start;
    double wall_start;
  };
  double scale_;
  WallClock clock_;
  Convert convert_;
  std::map<int, Job> running_;
  int next_ = 0;
};

struct TraceEntry {
  double time = 0.0;
  int agent = -1;
  const char* kind = "";
};

struct StationStats {
  long orders = 0;  ///< pick orders completed / replenishment orders stored
  long units = 0;
};

struct Bucket {
  long orders_picked = 0;
  double distance = 0.0;
  long orders_stored = 0;
  long units_picked = 0;
  long pod_visits = 0;
};

struct Metrics {
  double bucket_width = 3600.0;
  std::vector<Bucket> buckets;
  long pick_orders_completed = 0;
  long repl_orders_stored = 0;
  long units_picked = 0;
  long pod_visits = 0;  ///< pod arrivals at pick stations
  std::vector<StationStats> stations;
  double turnover_sum = 0.0;
  long elevator_transits = 0;
  long cross_floor_tasks = 0;
  long tasks_completed = 0;
  long plans = 0;
  long failed_plans = 0;
  long position_violations = 0;
  long buffered_fallbacks = 0;

  [[nodiscard]] double distance() const;
  [[nodiscard]] double pile_on() const;
  [[nodiscard]] double average_turnover() const;
  Bucket& at(double t);
};

/// Raw per-cell visit counts on one floor.
struct HeatmapGrid {
  int floor = 0;
  double origin_x = 0.0;
  double origin_y = 0.0;
  double cell = 1.0;
  int width = 0;
  int height = 0;
  std::vector<long> counts;
  long samples = 0;

  void add(double x, double y);
  [[nodiscard]] long count(int ix, int iy) const { return counts[static_cast<std::size_t>(iy * width + ix)]; }
  [[nodiscard]] double rendered(int ix, int iy) const;
  [[nodiscard]] std::pair<int, int> cell_of(double x, double y) const;
};

std::vector<HeatmapGrid> make_heatmaps(const World& world);

class InvariantViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SimulationOptions {
  std::uint64_t seed = 1;
  std::optional<double> horizon;  ///< overrides the scenario duration
  bool assert_invariants = false;
  bool record_trace = true;
  bool record_decision_details = true;
  Pacer::WallClock wall_clock;      ///< defaults to a steady clock
  Pacer::Convert pacing_convert;    ///< wall seconds -> sim seconds; defaults to scale
  pathplan::PlannerOptions planner;
};

struct Footprint {
  std::string run_id;
  std::uint64_t seed = 0;
  double horizon = 0.0;
  long pick_orders_completed = 0;
  long replenishment_orders_stored = 0;
  long units_picked = 0;
  long pod_visits = 0;
  double pile_on = 0.0;
  double distance = 0.0;
  std::vector<StationStats> station_throughput;
  std::vector<std::string> station_kinds;
  double average_turnover = 0.0;
  std::map<std::string, std::string> config_digests;
  std::map<std::string, double> extras;
};

/// A sample of (time, open pick orders) taken right after each pick order
/// completion, used to check the constant-backlog contract.
struct BacklogSample {
  double time = 0.0;
  int open_pick_orders = 0;
  bool picks_paused = false;
};

class Simulation {
 public:
  Simulation(World world, scenario::ScenarioConfig scenario, control::ControllerConfig controllers,
             SimulationOptions options);
  ~Simulation();
  Simulation(const Simulation&) = delete;
  Simulation& operator=(const Simulation&) = delete;

  /// Processes events up to the horizon.
  void run();
  /// Processes one event; false once the horizon is reached.
  bool step();

  [[nodiscard]] Footprint footprint() const;

  [[nodiscard]] const World& world() const { return world_; }
  [[nodiscard]] double now() const { return world_.now; }
  [[nodiscard]] double horizon() const { return horizon_; }
  [[nodiscard]] const Metrics& metrics() const { return metrics_; }
  [[nodiscard]] const std::vector<TraceEntry>& trace() const { return trace_; }
  [[nodiscard]] const control::DecisionLog& decisions() const { return log_; }
  [[nodiscard]] const std::vector<HeatmapGrid>& heatmaps() const { return heatmaps_; }
  [[nodiscard]] const pathplan::ReservationTable& reservations() const { return table_; }
  [[nodiscard]] const std::vector<pathplan::ElevatorManager>& elevators() const { return elevators_; }
  [[nodiscard]] const std::vector<BacklogSample>& backlog_samples() const { return backlog_samples_; }
  [[nodiscard]] const scenario::OrderStream& order_stream() const { return *stream_; }
  [[nodiscard]] const control::ControllerSet& controllers() const { return *controllers_; }
  [[nodiscard]] const pathplan::ZoneIndex& zones() const { return planner_->zones(); }
  [[nodiscard]] const std::vector<pathplan::QueueManager>& queues() const { return queues_; }
  [[nodiscard]] long events_processed() const { return events_; }
  [[nodiscard]] std::vector<std::string> check_invariants() const;
  /// One line per robot: mode, stage, task and location.
  [[nodiscard]] std::vector<std::string> robot_states() const;

 private:
  struct Agent;
  struct BufferedJob;

  void dispatch(const Event& e);
  void on_start();
  void on_path_done(RobotId r);
  void on_handling_done(RobotId r);
  void on_elevator_arrival(RobotId r, int elevator);
  void on_sample();
  void on_schedule();
  void on_buffered_decision(int job);

  // orders and controllers
  void pump_orders();
  void schedule_order_tick();
  scenario::StreamView stream_view() const;
  void submit(scenario::Emission&& e);
  void invoke_roa(std::size_t trig);
  void invoke_poa(std::size_t trig);
  void invoke_rps(std::size_t trig);
  void fire_plain(control::Trigger t, int subject);
  void offer_work_to_idle_robots();
  void schedule_next_controller_wake();
  void apply_poa_assignments(const std::vector<std::pair<OrderId, StationId>>& a);

  // robots
  void need_task(RobotId r);
  void start_task(RobotId r, Task task, bool follow_up);
  void advance_route(RobotId r);
  void on_stage_reached(RobotId r);
  void begin_handling(RobotId r);
  void schedule_next_handling(RobotId r);
  void complete_task(RobotId r);
  bool plan_leg(RobotId r, WaypointId goal, int zone);
  std::optional<WaypointId> entry_slot(int zone, RobotId r) const;
  void start_path(RobotId r, pathplan::TimedPath path);
  void wait_retry(RobotId r, double delay);
  void advance_zone(int zone);
  void leave_zone(RobotId r);
  void try_elevator(int elevator);
  bool robot_idle(const Robot& robot) const;
  Pose robot_pose(RobotId r, double t) const;
  void credit_path(const pathplan::TimedPath& path, double until);
  void note(int agent, const char* kind);
  void pace_before(double next_time);
  void check_positions();

  World world_;
  scenario::ScenarioConfig scenario_;
  control::ControllerConfig controller_config_;
  SimulationOptions options_;
  double horizon_ = 0.0;

  std::unique_ptr<control::ControllerSet> controllers_;
  std::unique_ptr<scenario::OrderStream> stream_;
  std::unique_ptr<pathplan::Planner> planner_;
  pathplan::ReservationTable table_;
  std::vector<pathplan::QueueManager> queues_;
  std::vector<std::vector<RobotId>> queue_waiters_;
  std::vector<std::uint64_t> zone_tokens_;  ///< stale guard for zone retries
  std::vector<pathplan::ElevatorManager> elevators_;
  std::vector<Agent> agents_;
  Rng controller_rng_;

  EventQueue events_queue_;
  std::uint64_t order_tick_token_ = 0;
  std::uint64_t wake_token_ = 0;
  Metrics metrics_;
  std::vector<HeatmapGrid> heatmaps_;
  std::vector<TraceEntry> trace_;
  control::DecisionLog log_;
  std::vector<BacklogSample> backlog_samples_;

  std::deque<OrderId> pick_backlog_;
  std::deque<OrderId> repl_unassigned_;
  std::deque<OrderId> repl_without_pod_;
  int open_picks_ = 0;
  int open_repls_ = 0;
  bool work_changed_ = false;
  bool started_ = false;
  bool finished_ = false;
  long events_ = 0;
  double last_event_time_ = 0.0;

  Pacer pacer_;
  std::map<int, std::unique_ptr<BufferedJob>> jobs_;
  std::map<control::Problem, control::ControllerChoice> active_choice_;
  std::vector<long> outstanding_;  ///< per SKU, requested minus picked over open pick orders
};

}  // namespace rmfs::engine

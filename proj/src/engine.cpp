#include "rmfs/engine.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include <fmt/format.h>

namespace rmfs::engine {

using control::Problem;
using control::Trigger;
using pathplan::TimedPath;

namespace {
constexpr double kEps = 1e-9;
constexpr double kBlockedRetry = 1.0;  // s, elevator exit or queue slot blocked
}  // namespace

const char* to_string(EventKind k) {
  switch (k) {
    case EventKind::start:
      return "start";
    case EventKind::order_tick:
      return "order_tick";
    case EventKind::path_done:
      return "path_done";
    case EventKind::retry:
      return "retry";
    case EventKind::handling_done:
      return "handling_done";
    case EventKind::elevator_arrival:
      return "elevator_arrival";
    case EventKind::elevator_retry:
      return "elevator_retry";
    case EventKind::zone_retry:
      return "zone_retry";
    case EventKind::sample:
      return "sample";
    case EventKind::schedule:
      return "schedule";
    case EventKind::buffered_decision:
      return "buffered_decision";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// EventQueue

std::uint64_t EventQueue::push(double time, int agent, EventKind kind, std::uint64_t token, int payload) {
  const std::uint64_t seq = next_seq_++;
  heap_.push(Event{time, seq, agent, kind, token, payload});
  return seq;
}

Event EventQueue::pop() {
  Event e = heap_.top();
  heap_.pop();
  return e;
}

// ---------------------------------------------------------------------------
// Pacer

Pacer::Pacer(double time_scale, WallClock clock, Convert convert)
    : scale_(time_scale), clock_(std::move(clock)), convert_(std::move(convert)) {
  if (!clock_) clock_ = &Pacer::steady_seconds;
  if (!convert_) convert_ = [s = scale_](double wall) { return wall * s; };
}

double Pacer::steady_seconds() {
  using namespace std::chrono;
  return duration<double>(steady_clock::now().time_since_epoch()).count();
}

int Pacer::begin(double sim_start) {
  const int h = next_++;
  running_[h] = Job{sim_start, clock_()};
  return h;
}

double Pacer::finish(int handle) {
  const auto it = running_.find(handle);
  if (it == running_.end()) throw std::logic_error("pacer: unknown computation");
  const double t = it->second.sim_start + convert_(clock_() - it->second.wall_start);
  running_.erase(it);
  return t;
}

std::optional<double> Pacer::bound() const {
  if (running_.empty()) return std::nullopt;
  const double now = clock_();
  double b = std::numeric_limits<double>::infinity();
  for (const auto& [h, j] : running_) b = std::min(b, j.sim_start + convert_(now - j.wall_start));
  return b;
}

bool Pacer::running(int handle) const { return running_.count(handle) != 0; }

// ---------------------------------------------------------------------------
// Metrics and heatmaps

double Metrics::distance() const {
  double d = 0.0;
  for (const auto& b : buckets) d += b.distance;
  return d;
}

double Metrics::pile_on() const {
  return pod_visits == 0 ? 0.0 : static_cast<double>(units_picked) / static_cast<double>(pod_visits);
}

double Metrics::average_turnover() const {
  return pick_orders_completed == 0 ? 0.0 : turnover_sum / static_cast<double>(pick_orders_completed);
}

Bucket& Metrics::at(double t) {
  static thread_local Bucket scratch;
  if (buckets.empty()) {
    scratch = Bucket{};
    return scratch;
  }
  auto i = static_cast<std::size_t>(std::max(0.0, std::floor(t / bucket_width)));
  return buckets[std::min(i, buckets.size() - 1)];
}

std::pair<int, int> HeatmapGrid::cell_of(double x, double y) const {
  const int ix = static_cast<int>(std::lround((x - origin_x) / cell));
  const int iy = static_cast<int>(std::lround((y - origin_y) / cell));
  return {std::clamp(ix, 0, width - 1), std::clamp(iy, 0, height - 1)};
}

void HeatmapGrid::add(double x, double y) {
  const auto [ix, iy] = cell_of(x, y);
  ++counts[static_cast<std::size_t>(iy * width + ix)];
  ++samples;
}

double HeatmapGrid::rendered(int ix, int iy) const { return std::log1p(static_cast<double>(count(ix, iy))); }

std::vector<HeatmapGrid> make_heatmaps(const World& world) {
  const int floors = std::max(1, world.graph.floor_count());
  std::vector<HeatmapGrid> grids;
  for (int f = 0; f < floors; ++f) {
    double minx = 0, miny = 0, maxx = 0, maxy = 0;
    bool any = false;
    for (const auto& w : world.graph.waypoints()) {
      if (w.floor != f) continue;
      if (!any) {
        minx = maxx = w.x;
        miny = maxy = w.y;
        any = true;
      }
      minx = std::min(minx, w.x);
      maxx = std::max(maxx, w.x);
      miny = std::min(miny, w.y);
      maxy = std::max(maxy, w.y);
    }
    HeatmapGrid g;
    g.floor = f;
    g.cell = world.cell_size;
    g.origin_x = minx;
    g.origin_y = miny;
    g.width = static_cast<int>(std::lround((maxx - minx) / g.cell)) + 1;
    g.height = static_cast<int>(std::lround((maxy - miny) / g.cell)) + 1;
    g.counts.assign(static_cast<std::size_t>(g.width * g.height), 0);
    grids.push_back(std::move(g));
  }
  return grids;
}

// ---------------------------------------------------------------------------
// Simulation state

struct Simulation::Agent {
  enum class Mode { idle, moving, parked, handling, waiting, waiting_elevator, in_elevator };
  enum class Stage { none, to_pod, to_station, to_storage, to_dwelling, at_station };
  Mode mode = Mode::idle;
  Stage stage = Stage::none;
  std::uint64_t token = 0;
  std::optional<TimedPath> path;
  WaypointId target;
  int zone = -1;
  int elevator = -1;
  PortPair ports;
  std::size_t handling_index = 0;
  bool follow_up = false;
  bool used_elevator = false;
};

struct Simulation::BufferedJob {
  int handle = 0;
  std::vector<OrderId> backlog;
  std::future<std::vector<std::pair<OrderId, StationId>>> future;
  bool done = false;
};

Simulation::Simulation(World world, scenario::ScenarioConfig scenario, control::ControllerConfig controllers,
                       SimulationOptions options)
    : world_(std::move(world)),
      scenario_(std::move(scenario)),
      controller_config_(std::move(controllers)),
      options_(std::move(options)),
      pacer_(controller_config_.optimizer_time_scale, options_.wall_clock, options_.pacing_convert) {
  scenario_.validate();
  controller_config_.validate();
  horizon_ = options_.horizon.value_or(scenario_.duration);
  if (!(horizon_ >= 0.0) || !std::isfinite(horizon_)) throw std::invalid_argument("horizon must be finite and >= 0");
  for (const auto& sw : controller_config_.sa_schedule) {
    if (!sw.station.valid() || sw.station.index() >= world_.stations.size()) {
      throw control::ControlError(control::ControlError::Kind::invalid_config,
                                  fmt::format("station schedule names unknown station {}", sw.station.value));
    }
  }
  controllers_ = std::make_unique<control::ControllerSet>(controller_config_);
  active_choice_ = controller_config_.choices;
  log_.set_keep_details(options_.record_decision_details);

  Rng catalog_rng = make_rng(options_.seed, RngStream::catalog);
  world_.skus = scenario::generate_sku_catalog(scenario_, scenario_.sku_count, catalog_rng);
  world_.ledger.resize(world_.skus.size());
  if (world_.stored_pod.size() != world_.graph.size()) world_.reset_occupancy();
  Rng inventory_rng = make_rng(options_.seed, RngStream::inventory);
  scenario::seed_initial_inventory(world_, scenario_.initial_fill, inventory_rng);

  double max_space = 1e300;
  for (const auto& p : world_.pods) max_space = std::min(max_space, p.capacity);
  stream_ = std::make_unique<scenario::OrderStream>(scenario_, world_.skus, max_space,
                                                    derive_seed(options_.seed, RngStream::orders));
  controller_rng_ = make_rng(options_.seed, RngStream::controllers);

  planner_ = std::make_unique<pathplan::Planner>(world_, options_.planner);
  table_ = pathplan::ReservationTable(world_.graph.size(), world_.elevators.size());
  for (const auto& z : planner_->zones().zones) queues_.emplace_back(z);
  queue_waiters_.resize(queues_.size());
  zone_tokens_.assign(queues_.size(), 0);
  for (const auto& e : world_.elevators) elevators_.emplace_back(e.id);
  agents_.resize(world_.robots.size());
  for (auto& r : world_.robots) {
    const auto& w = world_.graph.waypoint(r.waypoint);
    r.floor = w.floor;
    r.pose.x = w.x;
    r.pose.y = w.y;
    table_.reserve(r.waypoint, r.id, 0.0, pathplan::kForever);
  }

  metrics_.bucket_width = scenario_.bucket;
  metrics_.buckets.resize(static_cast<std::size_t>(std::ceil(horizon_ / scenario_.bucket - kEps)));
  metrics_.stations.resize(world_.stations.size());
  heatmaps_ = make_heatmaps(world_);
  outstanding_.assign(world_.skus.size(), 0);
}

Simulation::~Simulation() {
  for (auto& [id, job] : jobs_) {
    if (job->future.valid()) job->future.wait();
  }
}

// ---------------------------------------------------------------------------
// Event loop

void Simulation::run() {
  while (step()) {
  }
}

bool Simulation::step() {
  if (finished_) return false;
  if (!started_) {
    started_ = true;
    events_queue_.push(0.0, -1, EventKind::start);
  }
  if (!events_queue_.empty()) pace_before(events_queue_.top().time);
  if (events_queue_.empty() || events_queue_.top().time > horizon_ + kEps) {
    finished_ = true;
    world_.now = horizon_;
    for (std::size_t i = 0; i < agents_.size(); ++i) {
      if (agents_[i].mode == Agent::Mode::moving && agents_[i].path) credit_path(*agents_[i].path, horizon_);
    }
    for (auto& [id, job] : jobs_) {
      if (job->future.valid()) job->future.wait();
    }
    return false;
  }
  const Event e = events_queue_.pop();
  if (e.time + kEps < last_event_time_) {
    throw InvariantViolation(fmt::format("event time went backwards: {} < {}", e.time, last_event_time_));
  }
  last_event_time_ = e.time;
  world_.now = e.time;
  ++events_;
  dispatch(e);
  offer_work_to_idle_robots();
  if (options_.assert_invariants) {
    const auto problems = check_invariants();
    if (!problems.empty()) {
      std::string msg = fmt::format("t={:.3f} after {}:", e.time, to_string(e.kind));
      for (const auto& p : problems) msg += "\n  " + p;
      throw InvariantViolation(msg);
    }
  }
  return true;
}

void Simulation::pace_before(double next_time) {
  while (true) {
    for (auto& [id, job] : jobs_) {
      if (job->done) continue;
      if (job->future.wait_for(std::chrono::seconds(0)) != std::future_status::ready) continue;
      const double visible = std::max(pacer_.finish(job->handle), world_.now);
      job->done = true;
      events_queue_.push(visible, -1, EventKind::buffered_decision, 0, id);
    }
    const auto bound = pacer_.bound();
    if (!bound) return;
    const double next = events_queue_.empty() ? next_time : events_queue_.top().time;
    if (next <= *bound) return;
    for (auto& [id, job] : jobs_) {
      if (!job->done) {
        job->future.wait_for(std::chrono::milliseconds(1));
        break;
      }
    }
  }
}

void Simulation::dispatch(const Event& e) {
  if (options_.record_trace) trace_.push_back({e.time, e.agent, to_string(e.kind)});
  const auto robot_event_live = [&] {
    return e.agent >= 0 && agents_.at(static_cast<std::size_t>(e.agent)).token == e.token;
  };
  switch (e.kind) {
    case EventKind::start:
      on_start();
      break;
    case EventKind::order_tick:
      if (e.token == order_tick_token_) pump_orders();
      break;
    case EventKind::path_done:
      if (robot_event_live()) on_path_done(RobotId{e.agent});
      break;
    case EventKind::retry:
      if (robot_event_live()) {
        agents_[static_cast<std::size_t>(e.agent)].mode = Agent::Mode::idle;
        advance_route(RobotId{e.agent});
      }
      break;
    case EventKind::handling_done:
      if (robot_event_live()) on_handling_done(RobotId{e.agent});
      break;
    case EventKind::elevator_arrival:
      if (robot_event_live()) on_elevator_arrival(RobotId{e.agent}, e.payload);
      break;
    case EventKind::elevator_retry:
      try_elevator(e.payload);
      break;
    case EventKind::zone_retry:
      if (e.token == zone_tokens_.at(static_cast<std::size_t>(e.payload))) advance_zone(e.payload);
      break;
    case EventKind::sample:
      on_sample();
      break;
    case EventKind::schedule:
      if (e.token == wake_token_) on_schedule();
      break;
    case EventKind::buffered_decision:
      on_buffered_decision(e.payload);
      break;
  }
}

void Simulation::on_start() {
  // switches due at time zero apply before the first orders are assigned
  const auto due_now = [&](std::optional<double> t) { return t && *t <= world_.now + kEps; };
  if (due_now(controllers_->sa().next_event_time()) || due_now(controllers_->mm().next_event_time())) on_schedule();
  pump_orders();
  for (std::size_t i = 0; i < world_.robots.size(); ++i) {
    if (!world_.robots[i].task) need_task(RobotId{static_cast<int>(i)});
  }
  events_queue_.push(0.0, -1, EventKind::sample);
  schedule_next_controller_wake();
}

// ---------------------------------------------------------------------------
// Orders and controllers

scenario::StreamView Simulation::stream_view() const {
  scenario::StreamView v;
  v.fill = inventory_fill_fraction(world_);
  v.available = stock_by_sku(world_);
  for (std::size_t s = 0; s < v.available.size() && s < outstanding_.size(); ++s) v.available[s] -= outstanding_[s];
  v.open_pick_orders = open_picks_;
  v.open_replenishment_orders = open_repls_;
  return v;
}

void Simulation::pump_orders() {
  auto emissions = stream_->step(stream_view(), world_.now);
  for (auto& e : emissions) submit(std::move(e));
  schedule_order_tick();
}

void Simulation::schedule_order_tick() {
  const auto next = stream_->next_event_time();
  ++order_tick_token_;
  if (!next || *next > horizon_ + kEps) return;
  events_queue_.push(std::max(*next, world_.now), -1, EventKind::order_tick, order_tick_token_);
}

void Simulation::submit(scenario::Emission&& e) {
  if (auto* pick = std::get_if<PickOrder>(&e.order)) {
    PickOrder o = std::move(*pick);
    o.id = OrderId{static_cast<int>(world_.pick_orders.size())};
    o.submit_time = e.submit_time;
    for (const auto& l : o.lines) outstanding_.at(l.sku.index()) += l.requested;
    world_.pick_orders.push_back(std::move(o));
    const OrderId id = world_.pick_orders.back().id;
    ++open_picks_;
    pick_backlog_.push_back(id);
    invoke_poa(log_.fire(world_.now, Trigger::new_pick_order, id.value));
  } else {
    ReplenishmentOrder o = std::get<ReplenishmentOrder>(std::move(e.order));
    o.id = OrderId{static_cast<int>(world_.repl_orders.size())};
    o.submit_time = e.submit_time;
    world_.repl_orders.push_back(o);
    ++open_repls_;
    repl_unassigned_.push_back(o.id);
    const auto trig = log_.fire(world_.now, Trigger::new_replenishment_order, o.id.value);
    invoke_roa(trig);
    invoke_rps(trig);
  }
}

void Simulation::invoke_roa(std::size_t trig) {
  auto& roa = controllers_->roa();
  std::string out;
  std::deque<OrderId> remaining;
  const std::size_t n = repl_unassigned_.size();
  for (OrderId id : repl_unassigned_) {
    auto& order = world_.repl_order(id);
    const auto s = roa.assign(world_, order);
    if (!s) {
      remaining.push_back(id);
      continue;
    }
    world_.station(*s).assigned_orders.push_back(id);
    order.assigned_station = *s;
    repl_without_pod_.push_back(id);
    out += fmt::format("r{}->s{} ", id.value, s->value);
  }
  repl_unassigned_ = std::move(remaining);
  log_.decide(trig, Problem::roa, roa.name(), fmt::format("{} unassigned", n), out.empty() ? "none" : out);
}

void Simulation::invoke_rps(std::size_t trig) {
  auto& rps = controllers_->rps();
  std::string out;
  std::deque<OrderId> remaining;
  const std::size_t n = repl_without_pod_.size();
  for (OrderId id : repl_without_pod_) {
    auto& order = world_.repl_order(id);
    const auto pod = rps.select(world_, order, *order.assigned_station);
    if (!pod) {
      remaining.push_back(id);
      continue;
    }
    world_.pod(*pod).reserved_space += order.units * world_.sku(order.sku).unit_space;
    order.assigned_pod = *pod;
    world_.insertion_requests.push_back(
        Request{RequestKind::insertion, *pod, order.assigned_station, std::nullopt, {id}});
    work_changed_ = true;
    out += fmt::format("r{}->p{} ", id.value, pod->value);
  }
  repl_without_pod_ = std::move(remaining);
  log_.decide(trig, Problem::rps, rps.name(), fmt::format("{} without pod", n), out.empty() ? "none" : out);
}

void Simulation::invoke_poa(std::size_t trig) {
  auto& poa = controllers_->poa();
  const std::string name = poa.name();
  if (poa.buffering()) {
    bool busy = false;
    for (const auto& [id, job] : jobs_) busy = busy || !job->done;
    if (busy || pick_backlog_.empty()) {
      log_.decide(trig, Problem::poa, name, fmt::format("{} pending", pick_backlog_.size()),
                  busy ? "computation in flight" : "empty backlog");
      return;
    }
    const auto& choice = active_choice_.at(Problem::poa);
    std::shared_ptr<control::Controller> inst = control::make_controller(Problem::poa, choice.name, choice.params);
    auto snapshot = std::make_shared<const World>(world_);
    auto job = std::make_unique<BufferedJob>();
    job->backlog.assign(pick_backlog_.begin(), pick_backlog_.end());
    job->handle = pacer_.begin(world_.now);
    job->future = std::async(std::launch::async, [inst, snapshot, backlog = job->backlog] {
      return static_cast<control::PickOrderAssigner&>(*inst).assign_batch(*snapshot, backlog);
    });
    const int id = job->handle;
    log_.decide(trig, Problem::poa, name, fmt::format("{} pending", pick_backlog_.size()),
                fmt::format("computation {} started", id));
    jobs_[id] = std::move(job);
    return;
  }
  std::string out;
  std::deque<OrderId> remaining;
  const std::size_t n = pick_backlog_.size();
  for (OrderId id : pick_backlog_) {
    const auto s = poa.assign(world_, world_.pick_order(id));
    if (!s) {
      remaining.push_back(id);
      continue;
    }
    world_.station(*s).assigned_orders.push_back(id);
    world_.pick_order(id).assigned_station = *s;
    work_changed_ = true;
    out += fmt::format("o{}->s{} ", id.value, s->value);
  }
  pick_backlog_ = std::move(remaining);
  log_.decide(trig, Problem::poa, name, fmt::format("{} pending", n), out.empty() ? "none" : out);
}

void Simulation::apply_poa_assignments(const std::vector<std::pair<OrderId, StationId>>& a) {
  for (const auto& [id, s] : a) {
    const auto it = std::find(pick_backlog_.begin(), pick_backlog_.end(), id);
    if (it == pick_backlog_.end()) continue;
    if (!s.valid() || s.index() >= world_.stations.size()) continue;
    Station& st = world_.station(s);
    if (st.kind != StationKind::pick || !st.active) continue;
    if (static_cast<int>(st.assigned_orders.size()) >= st.order_capacity) continue;
    st.assigned_orders.push_back(id);
    world_.pick_order(id).assigned_station = s;
    pick_backlog_.erase(it);
    work_changed_ = true;
  }
}

void Simulation::on_buffered_decision(int job_id) {
  const auto it = jobs_.find(job_id);
  if (it == jobs_.end()) return;
  auto job = std::move(it->second);
  jobs_.erase(it);
  try {
    apply_poa_assignments(job->future.get());
  } catch (const std::exception&) {
    // the computation failed: fall back to the simple assigner for its backlog
    ++metrics_.buffered_fallbacks;
    auto fallback = control::make_controller(Problem::poa, "fewest_assigned", nlohmann::json::object());
    auto& poa = static_cast<control::PickOrderAssigner&>(*fallback);
    std::vector<std::pair<OrderId, StationId>> out;
    for (OrderId id : job->backlog) {
      if (std::find(pick_backlog_.begin(), pick_backlog_.end(), id) == pick_backlog_.end()) continue;
      const auto s = poa.assign(world_, world_.pick_order(id));
      if (s) apply_poa_assignments({{id, *s}});
    }
  }
}

void Simulation::fire_plain(Trigger t, int subject) { log_.fire(world_.now, t, subject); }

void Simulation::schedule_next_controller_wake() {
  double next = std::numeric_limits<double>::infinity();
  if (const auto t = controllers_->sa().next_event_time()) next = std::min(next, *t);
  if (const auto t = controllers_->mm().next_event_time()) next = std::min(next, *t);
  ++wake_token_;
  if (!std::isfinite(next) || next > horizon_ + kEps) return;
  events_queue_.push(std::max(next, world_.now), -1, EventKind::schedule, wake_token_);
}

void Simulation::on_schedule() {
  const auto trig = log_.fire(world_.now, Trigger::schedule, -1);
  for (const auto& sw : controllers_->sa().due(world_.now)) {
    world_.station(sw.station).active = sw.active;
    work_changed_ = true;
    log_.decide(trig, Problem::sa, "schedule", fmt::format("station {}", sw.station.value),
                sw.active ? "activate" : "deactivate");
  }
  for (const auto& sw : controllers_->mm().due(world_.now)) {
    controllers_->swap(sw.problem, sw.controller, sw.params);
    active_choice_[sw.problem] = control::ControllerChoice{sw.controller, sw.params};
    log_.decide(trig, Problem::mm, "schedule", control::to_string(sw.problem), sw.controller);
  }
  schedule_next_controller_wake();
}

void Simulation::offer_work_to_idle_robots() {
  if (!work_changed_) return;
  work_changed_ = false;
  for (std::size_t i = 0; i < world_.robots.size(); ++i) {
    const Robot& robot = world_.robots[i];
    if (!robot_idle(robot)) continue;
    need_task(robot.id);
    const Robot& after = world_.robots[i];
    if (!after.task || after.task->kind == TaskKind::rest) break;  // nothing left for the others either
  }
}

// ---------------------------------------------------------------------------
// Robots

bool Simulation::robot_idle(const Robot& robot) const {
  const Agent& a = agents_[robot.id.index()];
  return a.mode == Agent::Mode::idle && !robot.carried_pod && (!robot.task || robot.task->kind == TaskKind::rest);
}

void Simulation::need_task(RobotId r) {
  Robot& robot = world_.robot(r);
  Agent& a = agents_[r.index()];
  auto& ta = controllers_->ta();
  const auto trig = log_.fire(world_.now, Trigger::robot_needs_task, r.value);
  const auto options = control::enumerate_task_options(world_, robot, ta.max_robots_per_station());
  const std::size_t idx = std::min(ta.choose(world_, robot, options), options.size() - 1);
  const control::TaskOption& opt = options[idx];
  log_.decide(trig, Problem::ta, ta.name(), fmt::format("{} options", options.size()),
              fmt::format("{}{}", rmfs::to_string(opt.kind),
                          opt.station ? fmt::format(" s{}", opt.station->value) : std::string{}));

  if (opt.kind == TaskKind::rest && robot.task && robot.task->kind == TaskKind::rest &&
      robot.task->destination == opt.first_destination && robot.waypoint == opt.first_destination &&
      a.mode == Agent::Mode::idle) {
    return;  // already resting where it should
  }

  Task task;
  task.kind = opt.kind;
  task.station = opt.station;
  task.pod = opt.pod;
  switch (opt.kind) {
    case TaskKind::store: {
      const PodId pod = *opt.pod;
      const auto t2 = log_.fire(world_.now, Trigger::pod_needs_storage, pod.value);
      WaypointId from = robot.waypoint;
      for (const auto& s : world_.stations) {
        if (s.input_waypoint == robot.waypoint) from = s.output_waypoint;
      }
      auto& psa = controllers_->psa();
      const WaypointId loc = psa.assign(world_, pod, from, controller_rng_);
      log_.decide(t2, Problem::psa, psa.name(), fmt::format("pod {}", pod.value), fmt::format("w{}", loc.value));
      world_.inbound_pod.at(loc.index()) = pod;
      world_.pod(pod).place = PodPlace{PodPlaceKind::robot, r.value};
      task.destination = loc;
      break;
    }
    case TaskKind::insertion: {
      task.replenishments = opt.replenishments;
      auto& reqs = world_.insertion_requests;
      reqs.erase(std::remove_if(reqs.begin(), reqs.end(),
                                [&](const Request& q) { return q.pod == opt.pod && q.station == opt.station; }),
                 reqs.end());
      break;
    }
    case TaskKind::rest:
      task.destination = opt.first_destination;
      break;
    default:
      break;
  }
  start_task(r, std::move(task), opt.follow_up);
}

void Simulation::start_task(RobotId r, Task task, bool follow_up) {
  Robot& robot = world_.robot(r);
  Agent& a = agents_[r.index()];
  robot.task = std::move(task);
  Task& t = *robot.task;
  const auto trig = log_.fire(world_.now, Trigger::task_assigned_to_robot, r.value);
  auto& pps = controllers_->pps();
  if (t.kind == TaskKind::extraction) {
    std::vector<PodId> candidates;
    if (follow_up) {
      candidates.push_back(*robot.carried_pod);
    } else {
      candidates = control::servable_pods(world_, *t.station);
    }
    const auto plan = pps.select(world_, *t.station, candidates);
    log_.decide(trig, Problem::pps, pps.name(), fmt::format("{} candidates", candidates.size()),
                plan ? fmt::format("pod {} for {} units", plan->pod.value, plan->units()) : "none");
    if (!plan || plan->units() == 0) {
      robot.task.reset();
      a.stage = Agent::Stage::none;
      work_changed_ = true;
      return;
    }
    for (const auto& p : plan->picks) {
      world_.pick_order(p.order).line_for(p.sku)->bound += p.units;
      world_.pod(plan->pod).reserved_picks[p.sku] += p.units;
    }
    t.pod = plan->pod;
    t.picks = plan->picks;
    world_.pod(plan->pod).claimed = true;
  } else {
    log_.decide(trig, Problem::pps, pps.name(), rmfs::to_string(t.kind), "not an extraction");
    if (t.kind == TaskKind::insertion) world_.pod(*t.pod).claimed = true;
  }
  work_changed_ = true;

  a.follow_up = follow_up;
  if (follow_up) {
    a.stage = Agent::Stage::at_station;
    begin_handling(r);
    return;
  }
  switch (t.kind) {
    case TaskKind::extraction:
    case TaskKind::insertion:
      a.stage = Agent::Stage::to_pod;
      a.target = world_.pod_waypoint(*t.pod);
      break;
    case TaskKind::store:
      a.stage = Agent::Stage::to_storage;
      a.target = *t.destination;
      break;
    default:
      a.stage = Agent::Stage::to_dwelling;
      a.target = *t.destination;
      break;
  }
  if (a.mode == Agent::Mode::idle || a.mode == Agent::Mode::waiting) {
    a.mode = Agent::Mode::idle;
    advance_route(r);
  }
}

void Simulation::advance_route(RobotId r) {
  Robot& robot = world_.robot(r);
  Agent& a = agents_[r.index()];
  if (!robot.task) return;
  if (robot.waypoint == a.target) {
    on_stage_reached(r);
    return;
  }
  const auto& zi = planner_->zones();
  const int target_floor = world_.graph.waypoint(a.target).floor;
  int zone = -1;
  if (robot.floor != target_floor) {
    // head for the loading queue of the nearest elevator reaching the target floor
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t z = 0; z < zi.zones.size(); ++z) {
      const auto& owner = zi.owners[z];
      if (owner.kind != pathplan::ZoneIndex::Owner::Kind::elevator) continue;
      const WaypointId in = zi.zones[z].end();
      if (world_.graph.waypoint(in).floor != robot.floor) continue;
      for (const auto& pp : world_.elevators.at(static_cast<std::size_t>(owner.id)).port_pairs) {
        if (pp.from != in || world_.graph.waypoint(pp.to).floor != target_floor) continue;
        const double d = control::estimate_distance(world_, robot.waypoint, in);
        if (d < best) {
          best = d;
          zone = static_cast<int>(z);
          a.elevator = owner.id;
          a.ports = pp;
        }
      }
    }
    if (zone < 0) {
      throw std::runtime_error(
          fmt::format("no elevator connects floor {} to floor {}", robot.floor, target_floor));
    }
  } else {
    zone = zi.zone(a.target);
  }

  if (zone < 0) {
    plan_leg(r, a.target, -1);
    return;
  }
  auto& q = queues_[static_cast<std::size_t>(zone)];
  const bool was_in = q.contains(r);
  auto slot = was_in ? q.target(r) : q.admit(r);
  if (slot) {
    slot = entry_slot(zone, r);
    if (!slot && !was_in) q.leave(r);
  }
  if (!slot) {
    auto& w = queue_waiters_[static_cast<std::size_t>(zone)];
    if (std::find(w.begin(), w.end(), r) == w.end()) w.push_back(r);
    wait_retry(r, planner_->options().replan_window);
    return;
  }
  if (robot.waypoint == *slot) {
    // already standing on the assigned slot
    if (a.zone >= 0 && a.zone != zone) leave_zone(r);
    a.zone = zone;
    a.mode = Agent::Mode::parked;
    advance_zone(zone);
    return;
  }
  if (!plan_leg(r, *slot, zone) && !was_in) q.leave(r);
}

std::optional<WaypointId> Simulation::entry_slot(int zone, RobotId r) const {
  // Never aim past the robot ahead: its current or planned slot caps ours.
  const auto& q = queues_[static_cast<std::size_t>(zone)];
  const auto& zi = planner_->zones();
  const auto& order = q.order();
  const auto it = std::find(order.begin(), order.end(), r);
  int slot = zi.slot_of[q.target(r)->index()];
  if (it != order.begin()) {
    const RobotId ahead = *std::prev(it);
    const Agent& aa = agents_[ahead.index()];
    const WaypointId w =
        aa.mode == Agent::Mode::moving && aa.path ? aa.path->destination : world_.robot(ahead).waypoint;
    if (zi.zone(w) != zone) return std::nullopt;
    slot = std::min(slot, zi.slot_of[w.index()] - 1);
  }
  if (slot < 0) return std::nullopt;
  return q.zone().slots[static_cast<std::size_t>(slot)];
}

bool Simulation::plan_leg(RobotId r, WaypointId goal, int zone) {
  Robot& robot = world_.robot(r);
  Agent& a = agents_[r.index()];
  auto& pp = controllers_->pp();
  const auto trig = log_.fire(world_.now, Trigger::robot_new_destination, r.value);
  auto path = pp.plan(*planner_, table_, robot, goal, world_.now);
  ++metrics_.plans;
  if (!path) {
    ++metrics_.failed_plans;
    log_.decide(trig, Problem::pp, pp.name(), fmt::format("w{}->w{}", robot.waypoint.value, goal.value), "no path");
    wait_retry(r, planner_->options().replan_window);
    return false;
  }
  log_.decide(trig, Problem::pp, pp.name(), fmt::format("w{}->w{}", robot.waypoint.value, goal.value),
              fmt::format("arrive {:.3f}", path->end_time));
  pathplan::Planner::commit(table_, *path);
  if (a.zone >= 0 && a.zone != zone) leave_zone(r);
  a.zone = zone;
  start_path(r, std::move(*path));
  return true;
}

void Simulation::start_path(RobotId r, TimedPath path) {
  Agent& a = agents_[r.index()];
  a.mode = Agent::Mode::moving;
  const double end = path.end_time;
  a.path = std::move(path);
  events_queue_.push(end, r.value, EventKind::path_done, ++a.token);
}

void Simulation::wait_retry(RobotId r, double delay) {
  Agent& a = agents_[r.index()];
  a.mode = Agent::Mode::waiting;
  events_queue_.push(world_.now + delay, r.value, EventKind::retry, ++a.token);
}

void Simulation::leave_zone(RobotId r) {
  Agent& a = agents_[r.index()];
  const int z = a.zone;
  if (z < 0) return;
  a.zone = -1;
  queues_[static_cast<std::size_t>(z)].leave(r);
  advance_zone(z);
  auto waiters = std::move(queue_waiters_[static_cast<std::size_t>(z)]);
  queue_waiters_[static_cast<std::size_t>(z)].clear();
  for (RobotId w : waiters) {
    Agent& wa = agents_[w.index()];
    if (wa.mode == Agent::Mode::waiting) events_queue_.push(world_.now, w.value, EventKind::retry, ++wa.token);
  }
}

void Simulation::advance_zone(int zone) {
  if (zone < 0) return;
  const auto& q = queues_[static_cast<std::size_t>(zone)];
  std::vector<pathplan::ParkedRobot> parked;
  for (RobotId id : q.order()) {
    const Agent& a = agents_[id.index()];
    if (a.mode != Agent::Mode::parked) continue;
    const Robot& robot = world_.robot(id);
    parked.push_back({id, robot.waypoint, robot.pose.heading, robot.kinematics});
  }
  if (parked.empty()) return;
  auto moves = pathplan::advance_queue(*planner_, table_, q, parked, world_.now);
  bool blocked = false;
  for (const auto& p : parked) {
    const bool moved = std::any_of(moves.begin(), moves.end(), [&](const TimedPath& m) { return m.robot == p.robot; });
    const auto& zi = planner_->zones();
    const WaypointId target = *q.target(p.robot);
    if (!moved && p.waypoint != target && zi.slot_of[p.waypoint.index()] < zi.slot_of[target.index()]) blocked = true;
  }
  for (auto& m : moves) {
    ++metrics_.plans;
    start_path(m.robot, std::move(m));
  }
  if (blocked) {
    events_queue_.push(world_.now + kBlockedRetry, -1, EventKind::zone_retry, ++zone_tokens_[static_cast<std::size_t>(zone)],
                       zone);
  }
}

void Simulation::credit_path(const TimedPath& path, double until) {
  for (const auto& s : path.segments) {
    if (s.action != pathplan::Action::go || s.end > until + kEps || s.end > horizon_ + kEps) continue;
    metrics_.at(s.end).distance += world_.graph.distance(s.from, s.to);
  }
}

void Simulation::on_path_done(RobotId r) {
  Robot& robot = world_.robot(r);
  Agent& a = agents_[r.index()];
  const TimedPath path = std::move(*a.path);
  a.path.reset();
  credit_path(path, path.end_time);
  robot.waypoint = path.destination;
  const auto& w = world_.graph.waypoint(robot.waypoint);
  robot.pose = Pose{w.x, w.y, path.final_heading()};
  a.mode = Agent::Mode::idle;

  const auto& zi = planner_->zones();
  if (a.zone >= 0 && zi.zone(robot.waypoint) == a.zone) {
    const int z = a.zone;
    const auto& q = queues_[static_cast<std::size_t>(z)];
    if (robot.waypoint == q.zone().end()) {
      const auto& owner = zi.owners[static_cast<std::size_t>(z)];
      if (owner.kind == pathplan::ZoneIndex::Owner::Kind::station) {
        on_stage_reached(r);
      } else {
        a.mode = Agent::Mode::waiting_elevator;
        elevators_.at(static_cast<std::size_t>(owner.id)).request(r, a.ports, world_.now);
        note(r.value, "elevator_request");
        try_elevator(owner.id);
      }
    } else {
      a.mode = Agent::Mode::parked;
    }
    advance_zone(z);
    return;
  }
  advance_route(r);
}

void Simulation::on_stage_reached(RobotId r) {
  Robot& robot = world_.robot(r);
  Agent& a = agents_[r.index()];
  Task& t = *robot.task;
  switch (a.stage) {
    case Agent::Stage::to_pod: {
      const PodId pod = *t.pod;
      world_.stored_pod.at(robot.waypoint.index()) = PodId{};
      world_.pod(pod).place = PodPlace{PodPlaceKind::robot, r.value};
      robot.carried_pod = pod;
      note(r.value, "pickup");
      work_changed_ = true;
      a.stage = Agent::Stage::to_station;
      a.target = world_.station(*t.station).input_waypoint;
      advance_route(r);
      return;
    }
    case Agent::Stage::to_station:
      a.stage = Agent::Stage::at_station;
      a.follow_up = false;
      begin_handling(r);
      return;
    case Agent::Stage::to_storage: {
      const PodId pod = *robot.carried_pod;
      world_.inbound_pod.at(robot.waypoint.index()) = PodId{};
      world_.store_pod_at(pod, robot.waypoint);
      world_.pod(pod).claimed = false;
      robot.carried_pod.reset();
      note(r.value, "setdown");
      work_changed_ = true;
      complete_task(r);
      return;
    }
    case Agent::Stage::to_dwelling:
      a.mode = Agent::Mode::idle;
      need_task(r);
      return;
    default:
      return;
  }
}

void Simulation::begin_handling(RobotId r) {
  Robot& robot = world_.robot(r);
  Agent& a = agents_[r.index()];
  const Task& t = *robot.task;
  a.mode = Agent::Mode::handling;
  a.handling_index = 0;
  world_.pod(*t.pod).place = PodPlace{PodPlaceKind::station, t.station->value};
  if (t.kind == TaskKind::extraction && !a.follow_up) {
    ++metrics_.pod_visits;
    ++metrics_.at(world_.now).pod_visits;
  }
  note(r.value, "dock");
  schedule_next_handling(r);
}

void Simulation::schedule_next_handling(RobotId r) {
  Robot& robot = world_.robot(r);
  Agent& a = agents_[r.index()];
  const Task& t = *robot.task;
  const std::size_t n = t.kind == TaskKind::extraction ? t.picks.size() : t.replenishments.size();
  if (a.handling_index >= n) {
    world_.pod(*t.pod).place = PodPlace{PodPlaceKind::robot, r.value};
    complete_task(r);
    return;
  }
  const int units = t.kind == TaskKind::extraction ? t.picks[a.handling_index].units
                                                   : world_.repl_order(t.replenishments[a.handling_index]).units;
  const double dt = units * world_.station(*t.station).handling_time;
  events_queue_.push(world_.now + dt, r.value, EventKind::handling_done, ++a.token);
}

void Simulation::on_handling_done(RobotId r) {
  Robot& robot = world_.robot(r);
  Agent& a = agents_[r.index()];
  const Task t = *robot.task;
  const PodId pod = *t.pod;
  const StationId station = *t.station;
  if (t.kind == TaskKind::extraction) {
    const PickAssignment& p = t.picks[a.handling_index];
    apply_pick(world_, pod, p.sku, p.units, p.order, station);
    metrics_.units_picked += p.units;
    metrics_.at(world_.now).units_picked += p.units;
    metrics_.stations.at(station.index()).units += p.units;
    outstanding_.at(p.sku.index()) -= p.units;
    invoke_rps(log_.fire(world_.now, Trigger::sku_unit_picked, pod.value));
    PickOrder& order = world_.pick_order(p.order);
    if (order.completion_time) {
      ++metrics_.pick_orders_completed;
      ++metrics_.at(world_.now).orders_picked;
      ++metrics_.stations.at(station.index()).orders;
      metrics_.turnover_sum += world_.now - order.submit_time;
      auto& ao = world_.station(station).assigned_orders;
      ao.erase(std::remove(ao.begin(), ao.end(), p.order), ao.end());
      --open_picks_;
      work_changed_ = true;
      invoke_poa(log_.fire(world_.now, Trigger::pick_order_completed, p.order.value));
      pump_orders();
      backlog_samples_.push_back({world_.now, open_picks_, stream_->picks_paused()});
    }
  } else {
    const OrderId id = t.replenishments[a.handling_index];
    apply_store(world_, pod, id, station);
    ++metrics_.repl_orders_stored;
    ++metrics_.at(world_.now).orders_stored;
    ++metrics_.stations.at(station.index()).orders;
    metrics_.stations.at(station.index()).units += world_.repl_order(id).units;
    auto& ao = world_.station(station).assigned_orders;
    ao.erase(std::remove(ao.begin(), ao.end(), id), ao.end());
    --open_repls_;
    work_changed_ = true;
    const auto trig = log_.fire(world_.now, Trigger::replenishment_order_stored, id.value);
    invoke_roa(trig);
    invoke_poa(trig);
    pump_orders();
  }
  ++a.handling_index;
  schedule_next_handling(r);
}

void Simulation::complete_task(RobotId r) {
  Robot& robot = world_.robot(r);
  Agent& a = agents_[r.index()];
  ++metrics_.tasks_completed;
  if (a.used_elevator) ++metrics_.cross_floor_tasks;
  a.used_elevator = false;
  note(r.value, "task_done");
  robot.task.reset();
  a.stage = Agent::Stage::none;
  a.mode = Agent::Mode::idle;
  work_changed_ = true;
  need_task(r);
}

void Simulation::try_elevator(int elevator) {
  auto& m = elevators_.at(static_cast<std::size_t>(elevator));
  if (m.idle()) return;
  const auto rec = m.try_start(table_, world_.now);
  if (!rec) {
    const double at = m.free_at() > world_.now + kEps ? m.free_at() : world_.now + kBlockedRetry;
    events_queue_.push(at, -1, EventKind::elevator_retry, 0, elevator);
    return;
  }
  const RobotId r = rec->robot;
  Agent& a = agents_[r.index()];
  a.mode = Agent::Mode::in_elevator;
  a.used_elevator = true;
  ++metrics_.elevator_transits;
  note(r.value, "elevator_start");
  leave_zone(r);
  events_queue_.push(rec->arrival_time, r.value, EventKind::elevator_arrival, ++a.token, elevator);
}

void Simulation::on_elevator_arrival(RobotId r, int elevator) {
  Robot& robot = world_.robot(r);
  Agent& a = agents_[r.index()];
  robot.waypoint = a.ports.to;
  const auto& w = world_.graph.waypoint(robot.waypoint);
  robot.floor = w.floor;
  robot.pose.x = w.x;
  robot.pose.y = w.y;
  a.mode = Agent::Mode::idle;
  note(r.value, "elevator_arrive");
  advance_route(r);
  try_elevator(elevator);
}

// ---------------------------------------------------------------------------
// Sampling and checks

Pose Simulation::robot_pose(RobotId r, double t) const {
  const Agent& a = agents_[r.index()];
  const Robot& robot = world_.robot(r);
  if (a.mode == Agent::Mode::moving && a.path) return a.path->pose_at(world_.graph, robot.kinematics, t);
  return robot.pose;
}

void Simulation::on_sample() {
  for (const auto& robot : world_.robots) {
    if (agents_[robot.id.index()].mode == Agent::Mode::in_elevator) continue;
    const Pose p = robot_pose(robot.id, world_.now);
    const int floor = agents_[robot.id.index()].mode == Agent::Mode::moving && agents_[robot.id.index()].path
                          ? world_.graph.waypoint(agents_[robot.id.index()].path->origin).floor
                          : robot.floor;
    heatmaps_.at(static_cast<std::size_t>(floor)).add(p.x, p.y);
  }
  check_positions();
  const double next = world_.now + scenario_.position_sample_interval;
  if (next <= horizon_ + kEps) events_queue_.push(next, -1, EventKind::sample);
}

void Simulation::check_positions() {
  std::vector<std::pair<int, Pose>> poses;
  for (const auto& robot : world_.robots) {
    if (agents_[robot.id.index()].mode == Agent::Mode::in_elevator) continue;
    poses.emplace_back(robot.floor, robot_pose(robot.id, world_.now));
  }
  const double limit = 0.5 * world_.cell_size;
  for (std::size_t i = 0; i < poses.size(); ++i) {
    for (std::size_t j = i + 1; j < poses.size(); ++j) {
      if (poses[i].first != poses[j].first) continue;
      const double d = std::hypot(poses[i].second.x - poses[j].second.x, poses[i].second.y - poses[j].second.y);
      if (d < limit) {
        ++metrics_.position_violations;
        if (options_.assert_invariants) {
          throw InvariantViolation(fmt::format("t={:.3f}: robots {} and {} are {:.3f} m apart", world_.now,
                                               world_.robots[i].id.value, world_.robots[j].id.value, d));
        }
      }
    }
  }
}

void Simulation::note(int agent, const char* kind) {
  if (options_.record_trace) trace_.push_back({world_.now, agent, kind});
}

std::vector<std::string> Simulation::check_invariants() const {
  auto problems = check_model_invariants(world_);
  if (table_.violations() > 0) problems.push_back(fmt::format("{} reservation conflicts", table_.violations()));
  if (metrics_.position_violations > 0) {
    problems.push_back(fmt::format("{} robot proximity violations", metrics_.position_violations));
  }
  return problems;
}

std::vector<std::string> Simulation::robot_states() const {
  static constexpr const char* kModes[] = {"idle", "moving", "parked", "handling", "waiting", "waiting_elevator",
                                           "in_elevator"};
  static constexpr const char* kStages[] = {"none", "to_pod", "to_station", "to_storage", "to_dwelling", "at_station"};
  std::vector<std::string> out;
  for (const auto& r : world_.robots) {
    const Agent& a = agents_[r.id.index()];
    out.push_back(fmt::format("robot {} {} {} task={} at w{} target w{} zone {} pod {}", r.id.value,
                              kModes[static_cast<int>(a.mode)], kStages[static_cast<int>(a.stage)],
                              r.task ? rmfs::to_string(r.task->kind) : "none", r.waypoint.value, a.target.value, a.zone,
                              r.carried_pod ? r.carried_pod->value : -1));
  }
  return out;
}

Footprint Simulation::footprint() const {
  Footprint f;
  f.seed = options_.seed;
  f.horizon = horizon_;
  f.pick_orders_completed = metrics_.pick_orders_completed;
  f.replenishment_orders_stored = metrics_.repl_orders_stored;
  f.units_picked = metrics_.units_picked;
  f.pod_visits = metrics_.pod_visits;
  f.pile_on = metrics_.pile_on();
  f.distance = metrics_.distance();
  f.station_throughput = metrics_.stations;
  for (const auto& s : world_.stations) f.station_kinds.emplace_back(s.kind == StationKind::pick ? "pick" : "replenishment");
  f.average_turnover = metrics_.average_turnover();
  f.extras["elevator_transits"] = static_cast<double>(metrics_.elevator_transits);
  f.extras["cross_floor_tasks"] = static_cast<double>(metrics_.cross_floor_tasks);
  f.extras["tasks_completed"] = static_cast<double>(metrics_.tasks_completed);
  f.extras["plans"] = static_cast<double>(metrics_.plans);
  f.extras["failed_plans"] = static_cast<double>(metrics_.failed_plans);
  f.extras["reservation_violations"] = static_cast<double>(table_.violations());
  f.extras["position_violations"] = static_cast<double>(metrics_.position_violations);
  f.extras["buffered_fallbacks"] = static_cast<double>(metrics_.buffered_fallbacks);
  f.extras["events"] = static_cast<double>(events_);
  f.extras["pick_arrivals"] = static_cast<double>(stream_->pick_arrivals());
  f.extras["replenishment_arrivals"] = static_cast<double>(stream_->replenishment_arrivals());
  f.extras["dropped_arrivals"] = static_cast<double>(stream_->dropped_arrivals());
  f.extras["final_fill"] = inventory_fill_fraction(world_);
  return f;
}

}  // namespace rmfs::engine

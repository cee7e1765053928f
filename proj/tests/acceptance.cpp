// Acceptance checks: one PASS/FAIL line per criterion, exit code 1 if any fails.
#include <array>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>

#include <fmt/format.h>

#include "oracles.hpp"
#include "rmfs/engine.hpp"
#include "rmfs/experiments.hpp"
#include "rmfs/harness.hpp"
#include "rmfs/kinematics.hpp"
#include "rmfs/layout.hpp"
#include "rmfs/rng.hpp"
#include "rmfs/scenario.hpp"

using namespace rmfs;

namespace {

const std::filesystem::path kConfigs = RMFS_CONFIG_DIR;

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

scenario::ScenarioConfig backlog_scenario(double duration) {
  scenario::ScenarioConfig s;
  s.duration = duration;
  return s;
}

// 1000 stratified random (v0, d) cases against forward integration.
Outcome kinematics_oracle() {
  const auto t0 = Clock::now();
  const kinematics::KinematicsParams p;
  Rng rng(20240611);
  std::array<int, 4> seen{};
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    double v0 = uniform01(rng) * p.top_speed;
    double d = uniform01(rng) * 2.0;
    switch (i % 4) {
      case 0:
        d = uniform01(rng) * kinematics::stopping_distance(p, v0);
        break;
      case 1:
        v0 = p.top_speed;
        d = kinematics::stopping_distance(p, v0) + 0.001 + uniform01(rng) * 2.0;
        break;
      case 2:
        d = kinematics::distance_to_top_speed(p, v0) + kinematics::stopping_distance(p, p.top_speed) + 0.001 +
            uniform01(rng) * 2.0;
        break;
      default:
        v0 = uniform01(rng) * 0.2;
        d = kinematics::stopping_distance(p, v0) + 0.001 +
            uniform01(rng) * (kinematics::distance_to_top_speed(p, v0) +
                              kinematics::stopping_distance(p, p.top_speed) - kinematics::stopping_distance(p, v0) -
                              0.002);
        break;
    }
    seen[static_cast<std::size_t>(kinematics::classify_cruise(p, v0, d))]++;
    const double expected = oracle::integrated_cruise_time(p.acc, p.dec_mag, p.top_speed, v0, d);
    worst = std::max(worst, std::abs(kinematics::cruise_time(p, v0, d) - expected));
  }
  const double elapsed = seconds_since(t0);
  const bool branches = std::all_of(seen.begin(), seen.end(), [](int c) { return c > 0; });
  return {worst <= 1e-4 && branches && elapsed < 10.0,
          fmt::format("max error {:.2e} s, branches {}/{}/{}/{}, {:.2f} s", worst, seen[0], seen[1], seen[2], seen[3],
                      elapsed)};
}

Outcome pinned_values() {
  const kinematics::KinematicsParams p;
  const double a = kinematics::cruise_time(p, 0.21, 1.0441);
  const double b = kinematics::cruise_time(p, 0.0, 1.0);
  const double c = kinematics::cruise_time(p, 0.0, 0.05);
  const bool ok = std::abs(a - 5.18190) <= 1e-4 && std::abs(b - 5.18190) <= 1e-4 && std::abs(c - 0.63246) <= 1e-4;
  return {ok, fmt::format("{:.5f} {:.5f} {:.5f}", a, b, c)};
}

Outcome collision_freedom() {
  const auto t0 = Clock::now();
  const World world = layout::generate_default_layout(layout::LayoutConfig{}, 1);
  const auto robots = world.robots.size();
  engine::SimulationOptions o;
  o.seed = 1;
  o.assert_invariants = true;
  engine::Simulation sim(world, backlog_scenario(3600.0), {}, o);
  try {
    sim.run();
  } catch (const engine::InvariantViolation& e) {
    return {false, e.what()};
  }
  const auto f = sim.footprint();
  const long violations = static_cast<long>(f.extras.at("reservation_violations") + f.extras.at("position_violations"));
  const double elapsed = seconds_since(t0);
  const bool ok = robots >= 8 && world.stations.size() == 4 && violations == 0 && sim.check_invariants().empty() &&
                  sim.reservations().audit().empty() && elapsed < 120.0;
  return {ok, fmt::format("{} robots, {} violations, {} picks, {:.1f} s", robots, violations, f.pick_orders_completed,
                          elapsed)};
}

Outcome conservation() {
  engine::SimulationOptions o;
  o.seed = 2;
  o.assert_invariants = true;  // pod capacity is checked after every event
  engine::Simulation sim(layout::generate_default_layout(layout::LayoutConfig{}, 2), backlog_scenario(3600.0), {}, o);
  try {
    sim.run();
  } catch (const engine::InvariantViolation& e) {
    return {false, e.what()};
  }
  const World& w = sim.world();
  const auto stock = stock_by_sku(w);
  int unbalanced = 0;
  for (std::size_t s = 0; s < stock.size(); ++s) {
    if (w.ledger.initial[s] + w.ledger.stored[s] - w.ledger.picked[s] != stock[s]) ++unbalanced;
  }
  int overfull = 0;
  for (const auto& p : w.pods) overfull += p.occupied > p.capacity + 1e-9 ? 1 : 0;
  return {unbalanced == 0 && overfull == 0 && sim.metrics().repl_orders_stored > 0,
          fmt::format("{} SKUs, {} unbalanced, {} overfull pods", stock.size(), unbalanced, overfull)};
}

Outcome determinism() {
  const auto base = std::filesystem::temp_directory_path() / "rmfs_acceptance_determinism";
  std::filesystem::remove_all(base);
  for (const char* run : {"a", "b"}) {
    auto in = harness::load_inputs(kConfigs / "default_layout.json", kConfigs / "default_scenario.json",
                                   kConfigs / "default_controllers.json", 7);
    engine::SimulationOptions o;
    o.seed = 7;
    o.horizon = 3600.0;
    harness::run(std::move(in), o, base / run);
  }
  const auto slurp = [](const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
  };
  bool same = true;
  for (const char* f : {"footprint.json", "timeseries.csv"}) {
    const auto a = slurp(base / "a" / f);
    same = same && !a.empty() && a == slurp(base / "b" / f);
  }
  return {same, same ? "footprint.json and timeseries.csv identical" : "outputs differ"};
}

Outcome psa_swap() {
  const auto t0 = Clock::now();
  experiments::PsaSwapOptions opt;
  opt.mode = experiments::SwapMode::random_to_nearest;
  const auto stats = experiments::run_psa_swap(opt);
  const auto verdict = experiments::judge_psa_swap(opt.mode, stats);
  int both = 0;
  for (const auto& s : stats) {
    if (s.distance_per_h[1] < s.distance_per_h[0] && s.picks_per_h[1] > s.picks_per_h[0]) ++both;
  }
  const double elapsed = seconds_since(t0);
  return {verdict.pass && both == static_cast<int>(stats.size()) && elapsed < 300.0,
          fmt::format("{}/{} seeds improve both measures, {:.1f} s", both, stats.size(), elapsed)};
}

Outcome queue_heatmap() {
  const auto h = experiments::run_queue_heatmap(1);
  return {h.queue_mean > h.storage_mean,
          fmt::format("queue mean {:.3f} vs storage mean {:.3f}", h.queue_mean, h.storage_mean)};
}

Outcome arrival_regimes() {
  // homogeneous Poisson stream over 100 h
  scenario::ScenarioConfig c;
  scenario::PoissonRegime p;
  p.pick_rate = {{0.0, 60.0}};
  p.replenishment_rate = {{0.0, 0.0}};
  c.regime = p;
  const std::vector<Sku> catalog{Sku{SkuId{0}, 1.0, 1.0}, Sku{SkuId{1}, 1.0, 1.0}};
  scenario::OrderStream stream(c, catalog, 50.0, 3);
  scenario::StreamView view;
  view.fill = 0.6;
  view.available.assign(catalog.size(), 1000000);
  while (auto t = stream.next_event_time()) {
    if (*t > 100 * 3600.0) break;
    (void)stream.step(view, *t);
  }
  const long n = stream.pick_arrivals();
  const bool poisson_ok = std::abs(static_cast<double>(n) - 6000.0) <= 3.0 * std::sqrt(6000.0);

  // constant backlog in a full simulation
  engine::SimulationOptions o;
  o.seed = 4;
  const auto backlog_config = backlog_scenario(3600.0);
  const int target = std::get<scenario::ConstantBacklog>(backlog_config.regime).pick_backlog;
  engine::Simulation sim(layout::generate_default_layout(layout::LayoutConfig{}, 4), backlog_config, {}, o);
  sim.run();
  int off = 0, checked = 0;
  for (const auto& s : sim.backlog_samples()) {
    if (s.picks_paused) continue;
    ++checked;
    off += s.open_pick_orders != target ? 1 : 0;
  }
  return {poisson_ok && checked > 0 && off == 0,
          fmt::format("{} arrivals (6000 +/- {:.0f}); backlog off target at {}/{} completions", n,
                      3.0 * std::sqrt(6000.0), off, checked)};
}

Outcome multi_floor() {
  const World world = layout::load_layout(kConfigs / "two_floor_layout.json", 1);
  engine::SimulationOptions o;
  o.seed = 1;
  o.assert_invariants = true;
  engine::Simulation sim(world, backlog_scenario(3600.0), {}, o);
  try {
    sim.run();
  } catch (const engine::InvariantViolation& e) {
    return {false, e.what()};
  }
  // FIFO: per elevator, robots start in the order they requested
  bool fifo = true;
  for (const auto& e : sim.elevators()) {
    const auto& log = e.log();
    for (std::size_t i = 1; i < log.size(); ++i) {
      fifo = fifo && log[i - 1].request_time <= log[i].request_time && log[i - 1].start_time <= log[i].start_time;
    }
  }
  if (sim.elevators().size() == 1) {
    std::vector<int> requested, started;
    for (const auto& t : sim.trace()) {
      if (std::string(t.kind) == "elevator_request") requested.push_back(t.agent);
      if (std::string(t.kind) == "elevator_start") started.push_back(t.agent);
    }
    fifo = fifo && !started.empty() &&
           std::equal(started.begin(), started.end(), requested.begin(), requested.begin() + started.size());
  }
  const long cross = sim.metrics().cross_floor_tasks;
  return {cross > 0 && fifo, fmt::format("{} cross-floor tasks, {} elevator transits, service order {}", cross,
                                         sim.metrics().elevator_transits, fifo ? "FIFO" : "not FIFO")};
}

Outcome trigger_wiring() {
  control::ControllerConfig c;
  c.mm_schedule.push_back({900.0, control::Problem::psa, "nearest", nlohmann::json::object()});
  c.sa_schedule.push_back({600.0, StationId{0}, false});
  c.sa_schedule.push_back({1200.0, StationId{0}, true});
  engine::SimulationOptions o;
  o.seed = 1;
  engine::Simulation sim(layout::generate_default_layout(layout::LayoutConfig{}, 1), backlog_scenario(1800.0), c, o);
  sim.run();
  const auto& log = sim.decisions();
  std::set<control::Trigger> fired;
  for (const auto& t : log.triggers()) fired.insert(t.trigger);
  std::string missing;
  for (control::Trigger t : control::kEventTriggers) {
    if (!fired.count(t)) missing += std::string(" ") + control::to_string(t);
  }
  if (!fired.count(control::Trigger::schedule)) missing += " schedule";
  const auto unpaired = log.check_pairing();
  return {missing.empty() && unpaired.empty(),
          fmt::format("{} trigger kinds fired, {} triggers, {} decisions, {} pairing problems{}", fired.size(),
                      log.triggers().size(), log.decisions().size(), unpaired.size(),
                      missing.empty() ? "" : "; missing:" + missing)};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"kinematics oracle suite", kinematics_oracle},
      {"pinned kinematics values", pinned_values},
      {"collision freedom", collision_freedom},
      {"conservation", conservation},
      {"determinism", determinism},
      {"storage assignment swap direction", psa_swap},
      {"queue heatmap", queue_heatmap},
      {"arrival regimes", arrival_regimes},
      {"multi-floor elevator", multi_floor},
      {"trigger wiring", trigger_wiring},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome r;
    try {
      r = criteria[i].second();
    } catch (const std::exception& e) {
      r = {false, std::string("exception: ") + e.what()};
    }
    failures += r.pass ? 0 : 1;
    std::cout << fmt::format("{} {:>2} {}: {}", r.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, r.detail)
              << std::endl;
  }
  return failures == 0 ? 0 : 1;
}

#include "rmfs/experiments.hpp"

#include <algorithm>
#include <set>

#include <fmt/format.h>

#include "rmfs/engine.hpp"
#include "rmfs/harness.hpp"

namespace rmfs::experiments {

using json = nlohmann::json;

layout::LayoutConfig experiment_layout() {
  layout::LayoutConfig c;
  c.north = {2, 0};
  c.south = {0, 2};
  // large enough that travel, not station handling, limits throughput
  c.vertical_aisles = 10;
  c.horizontal_aisles = 6;
  c.block_width = 4;
  c.block_height = 2;
  c.robots = 8;
  return c;
}

scenario::ScenarioConfig experiment_scenario(double horizon) {
  scenario::ScenarioConfig s;
  s.duration = horizon;
  s.bucket = 3600.0;
  s.regime = scenario::ConstantBacklog{};
  return s;
}

control::ControllerConfig experiment_controllers() { return control::ControllerConfig{}; }

namespace {

const char* mode_name(SwapMode m) {
  switch (m) {
    case SwapMode::random_to_nearest:
      return "random_to_nearest";
    case SwapMode::nearest_to_random:
      return "nearest_to_random";
    case SwapMode::none:
      return "none";
  }
  return "?";
}

void write_config_triple(const std::filesystem::path& dir, const layout::LayoutConfig& l,
                         const scenario::ScenarioConfig& s, const control::ControllerConfig& c) {
  harness::write_file(dir / "layout.json", json{{"generator", layout::layout_config_to_json(l)}}.dump(2) + "\n");
  harness::write_file(dir / "scenario.json", scenario::scenario_config_to_json(s).dump(2) + "\n");
  harness::write_file(dir / "controllers.json", control::controller_config_to_json(c).dump(2) + "\n");
}

harness::RunInputs make_inputs(const layout::LayoutConfig& l, const scenario::ScenarioConfig& s,
                               const control::ControllerConfig& c, std::uint64_t seed) {
  harness::RunInputs in;
  in.world = layout::generate_default_layout(l, seed);
  in.scenario = s;
  in.controllers = c;
  harness::compute_digests(in);
  return in;
}

engine::SimulationOptions quiet_options(std::uint64_t seed) {
  engine::SimulationOptions o;
  o.seed = seed;
  o.record_trace = false;
  o.record_decision_details = false;
  return o;
}

}  // namespace

std::vector<HalfStats> run_psa_swap(const PsaSwapOptions& options) {
  const double half = options.horizon / 2.0;
  const auto lcfg = experiment_layout();
  auto scfg = experiment_scenario(options.horizon);
  scfg.bucket = half;
  auto ccfg = experiment_controllers();
  const std::string first = options.mode == SwapMode::nearest_to_random ? "nearest" : "random";
  ccfg.choices[control::Problem::psa] = {first, json::object()};
  if (options.mode != SwapMode::none) {
    const std::string second = options.mode == SwapMode::random_to_nearest ? "nearest" : "random";
    ccfg.mm_schedule.push_back({half, control::Problem::psa, second, json::object()});
  }
  if (options.out_dir) write_config_triple(*options.out_dir, lcfg, scfg, ccfg);

  std::vector<HalfStats> out;
  for (std::uint64_t seed : options.seeds) {
    auto in = make_inputs(lcfg, scfg, ccfg, seed);
    const auto digests = in.digests;
    engine::Simulation sim(std::move(in.world), in.scenario, in.controllers, quiet_options(seed));
    sim.run();
    HalfStats h;
    h.seed = seed;
    const auto& b = sim.metrics().buckets;
    for (std::size_t i = 0; i < 2 && i < b.size(); ++i) {
      h.distance_per_h[i] = b[i].distance / (half / 3600.0);
      h.picks_per_h[i] = static_cast<double>(b[i].orders_picked) / (half / 3600.0);
    }
    if (options.out_dir) {
      auto f = sim.footprint();
      f.config_digests = digests;
      f.run_id = harness::make_run_id(f);
      harness::write_outputs(sim, f, *options.out_dir / fmt::format("seed_{}", seed));
    }
    out.push_back(h);
  }
  return out;
}

Verdict judge_psa_swap(SwapMode mode, const std::vector<HalfStats>& stats) {
  Verdict v;
  v.name = std::string("psa_swap_") + mode_name(mode);
  int improved = 0, worsened = 0;
  json seeds = json::array();
  std::string lines;
  for (const auto& h : stats) {
    const double dd = h.distance_per_h[1] - h.distance_per_h[0];
    const double dp = h.picks_per_h[1] - h.picks_per_h[0];
    if (dd < 0 && dp > 0) ++improved;
    if (dd > 0 && dp < 0) ++worsened;
    seeds.push_back({{"seed", h.seed},
                     {"distance_per_h", {h.distance_per_h[0], h.distance_per_h[1]}},
                     {"picks_per_h", {h.picks_per_h[0], h.picks_per_h[1]}},
                     {"distance_delta", dd},
                     {"picks_delta", dp}});
    lines += fmt::format("\n  seed {}: distance/h {:.1f} -> {:.1f} ({:+.1f}), picks/h {:.1f} -> {:.1f} ({:+.1f})",
                         h.seed, h.distance_per_h[0], h.distance_per_h[1], dd, h.picks_per_h[0], h.picks_per_h[1], dp);
  }
  const int n = static_cast<int>(stats.size());
  switch (mode) {
    case SwapMode::random_to_nearest:
      v.pass = n >= 3 && improved == n;
      break;
    case SwapMode::nearest_to_random:
      v.pass = n >= 3 && worsened == n;
      break;
    case SwapMode::none:
      // no consistent improvement or deterioration across seeds
      v.pass = n >= 2 && improved < n && worsened < n;
      break;
  }
  v.details = {{"mode", mode_name(mode)}, {"seeds", seeds}, {"improved", improved}, {"worsened", worsened}};
  v.summary = fmt::format("{}: {} ({} of {} seeds improved, {} worsened){}", v.name, v.pass ? "PASS" : "FAIL",
                          improved, n, worsened, lines);
  return v;
}

HeatmapStats run_queue_heatmap(std::uint64_t seed, int robot_factor, double horizon,
                               const std::optional<std::filesystem::path>& out_dir) {
  auto lcfg = experiment_layout();
  lcfg.robots *= robot_factor;
  const auto scfg = experiment_scenario(horizon);
  const auto ccfg = experiment_controllers();
  if (out_dir) write_config_triple(*out_dir, lcfg, scfg, ccfg);
  auto in = make_inputs(lcfg, scfg, ccfg, seed);
  const auto digests = in.digests;
  engine::Simulation sim(std::move(in.world), in.scenario, in.controllers, quiet_options(seed));
  sim.run();
  if (out_dir) {
    auto f = sim.footprint();
    f.config_digests = digests;
    f.run_id = harness::make_run_id(f);
    harness::write_outputs(sim, f, *out_dir);
  }

  const World& w = sim.world();
  const auto& grids = sim.heatmaps();
  const auto cell_heat = [&](const std::set<int>& waypoints) {
    std::set<std::tuple<int, int, int>> cells;
    for (int id : waypoints) {
      const auto& wp = w.graph.waypoint(WaypointId{id});
      const auto [ix, iy] = grids.at(static_cast<std::size_t>(wp.floor)).cell_of(wp.x, wp.y);
      cells.insert({wp.floor, ix, iy});
    }
    double sum = 0.0;
    for (const auto& [f, ix, iy] : cells) sum += grids.at(static_cast<std::size_t>(f)).rendered(ix, iy);
    return cells.empty() ? 0.0 : sum / static_cast<double>(cells.size());
  };
  std::set<int> queue, storage;
  for (const auto& s : w.stations) {
    for (WaypointId q : s.queue_zone.slots) queue.insert(q.value);
  }
  for (WaypointId s : w.storage_locations) storage.insert(s.value);

  HeatmapStats h;
  h.seed = seed;
  h.robots = lcfg.robots;
  h.queue_mean = cell_heat(queue);
  h.storage_mean = cell_heat(storage);
  for (const auto& g : grids) h.samples += g.samples;
  return h;
}

std::vector<std::string> experiment_names() {
  return {"psa_swap", "psa_swap_reversed", "psa_swap_control", "queue_heatmap", "queue_heatmap_2x"};
}

Verdict run_named(const std::string& name, const std::filesystem::path& out_dir, std::vector<std::uint64_t> seeds) {
  if (seeds.empty()) seeds = {1, 2, 3};
  Verdict v;
  if (name == "psa_swap" || name == "psa_swap_reversed" || name == "psa_swap_control") {
    PsaSwapOptions o;
    o.mode = name == "psa_swap"            ? SwapMode::random_to_nearest
             : name == "psa_swap_reversed" ? SwapMode::nearest_to_random
                                           : SwapMode::none;
    o.seeds = seeds;
    o.out_dir = out_dir;
    v = judge_psa_swap(o.mode, run_psa_swap(o));
  } else if (name == "queue_heatmap" || name == "queue_heatmap_2x") {
    const int factor = name == "queue_heatmap" ? 1 : 2;
    json runs = json::array();
    bool pass = true;
    std::string lines;
    for (std::uint64_t seed : seeds) {
      const auto h = run_queue_heatmap(seed, factor, 3600.0, out_dir / fmt::format("seed_{}", seed));
      const bool ok = h.queue_mean > h.storage_mean;
      pass = pass && ok;
      runs.push_back({{"seed", seed},
                      {"robots", h.robots},
                      {"queue_mean", h.queue_mean},
                      {"storage_mean", h.storage_mean},
                      {"samples", h.samples}});
      lines += fmt::format("\n  seed {} ({} robots): queue {:.4f} vs storage {:.4f}", seed, h.robots, h.queue_mean,
                           h.storage_mean);
    }
    v.name = name;
    v.pass = pass;
    v.details = {{"runs", runs}};
    v.summary = fmt::format("{}: {}{}", name, pass ? "PASS" : "FAIL", lines);
  } else {
    throw std::invalid_argument(fmt::format("unknown experiment '{}'", name));
  }
  harness::write_file(out_dir / "verdict.json",
                      json{{"name", v.name}, {"pass", v.pass}, {"details", v.details}}.dump(2) + "\n");
  return v;
}

}  // namespace rmfs::experiments

#include "rmfs/harness.hpp"

#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "rmfs/experiments.hpp"
#include "rmfs/layout.hpp"

namespace rmfs::harness {

using json = nlohmann::json;

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return fmt::format("{:016x}", h);
}

void compute_digests(RunInputs& inputs) {
  inputs.digests["layout"] = fnv1a_hex(layout::layout_to_json(inputs.world).dump());
  inputs.digests["scenario"] = fnv1a_hex(scenario::scenario_config_to_json(inputs.scenario).dump());
  inputs.digests["controllers"] = fnv1a_hex(control::controller_config_to_json(inputs.controllers).dump());
}

RunInputs load_inputs(const std::filesystem::path& layout_file, const std::filesystem::path& scenario_file,
                      const std::filesystem::path& controllers_file, std::uint64_t seed) {
  const auto require = [](const std::filesystem::path& p, const char* what) {
    if (!std::filesystem::is_regular_file(p)) {
      throw ConfigError(fmt::format("{} file not found: {}", what, p.string()));
    }
  };
  RunInputs in;
  require(layout_file, "layout");
  try {
    in.world = layout::load_layout(layout_file, seed);
  } catch (const layout::LayoutError& e) {
    throw ConfigError(fmt::format("{}: {}", layout_file.string(), e.what()));
  } catch (const json::exception& e) {
    throw ConfigError(fmt::format("{}: {}", layout_file.string(), e.what()));
  }
  if (!scenario_file.empty()) {
    require(scenario_file, "scenario");
    try {
      in.scenario = scenario::load_scenario_config(scenario_file);
    } catch (const std::exception& e) {
      throw ConfigError(fmt::format("{}: {}", scenario_file.string(), e.what()));
    }
  }
  if (!controllers_file.empty()) {
    require(controllers_file, "controllers");
    try {
      in.controllers = control::load_controller_config(controllers_file);
    } catch (const std::exception& e) {
      throw ConfigError(fmt::format("{}: {}", controllers_file.string(), e.what()));
    }
  }
  // cross-validation
  const auto diags = layout::validate_layout(in.world);
  if (!diags.empty()) {
    std::string msg = layout_file.string() + ": layout validation failed:";
    for (const auto& d : diags) msg += fmt::format("\n  [{}] {}", d.code, d.message);
    throw ConfigError(msg);
  }
  for (const auto& sw : in.controllers.sa_schedule) {
    if (!sw.station.valid() || sw.station.index() >= in.world.stations.size()) {
      throw ConfigError(fmt::format("{}: station schedule names station {} but the layout has {}",
                                    controllers_file.string(), sw.station.value, in.world.stations.size()));
    }
  }
  compute_digests(in);
  return in;
}

std::string make_run_id(const engine::Footprint& f) {
  std::string key = fmt::format("{}|{}", f.seed, f.horizon);
  for (const auto& [k, v] : f.config_digests) key += "|" + k + "=" + v;
  return fnv1a_hex(key);
}

json footprint_to_json(const engine::Footprint& f) {
  json stations = json::array();
  for (std::size_t i = 0; i < f.station_throughput.size(); ++i) {
    stations.push_back({{"station", i},
                        {"kind", i < f.station_kinds.size() ? f.station_kinds[i] : ""},
                        {"orders", f.station_throughput[i].orders},
                        {"units", f.station_throughput[i].units}});
  }
  json j;
  j["run_id"] = f.run_id;
  j["seed"] = f.seed;
  j["horizon_s"] = f.horizon;
  j["pick_orders_completed"] = f.pick_orders_completed;
  j["replenishment_orders_stored"] = f.replenishment_orders_stored;
  j["units_picked"] = f.units_picked;
  j["pod_visits"] = f.pod_visits;
  j["pile_on"] = f.pile_on;
  j["distance_m"] = f.distance;
  j["station_throughput"] = stations;
  j["average_turnover_s"] = f.average_turnover;
  j["config_digests"] = f.config_digests;
  j["extras"] = f.extras;
  return j;
}

std::string timeseries_csv(const engine::Metrics& m) {
  std::string out = "bucket_start_s,orders_picked,distance_m,orders_stored,pile_on\n";
  for (std::size_t i = 0; i < m.buckets.size(); ++i) {
    const auto& b = m.buckets[i];
    const double pile_on = b.pod_visits == 0 ? 0.0 : static_cast<double>(b.units_picked) / b.pod_visits;
    out += fmt::format("{},{},{:.6f},{},{:.6f}\n", static_cast<double>(i) * m.bucket_width, b.orders_picked, b.distance,
                       b.orders_stored, pile_on);
  }
  return out;
}

std::string heatmap_csv(const engine::HeatmapGrid& g) {
  std::string out = "ix,iy,x_m,y_m,count,heat\n";
  for (int iy = 0; iy < g.height; ++iy) {
    for (int ix = 0; ix < g.width; ++ix) {
      out += fmt::format("{},{},{:.4f},{:.4f},{},{:.6f}\n", ix, iy, g.origin_x + ix * g.cell,
                         g.origin_y + iy * g.cell, g.count(ix, iy), g.rendered(ix, iy));
    }
  }
  return out;
}

void write_file(const std::filesystem::path& file, const std::string& text) {
  std::error_code ec;
  if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path(), ec);
  std::ofstream out(file, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  out << text;
  if (!out) throw std::runtime_error("write failed for " + file.string());
}

void write_outputs(const engine::Simulation& sim, const engine::Footprint& f, const std::filesystem::path& dir) {
  write_file(dir / "footprint.json", footprint_to_json(f).dump(2) + "\n");
  write_file(dir / "timeseries.csv", timeseries_csv(sim.metrics()));
  for (const auto& g : sim.heatmaps()) {
    write_file(dir / fmt::format("heatmap_floor{}.csv", g.floor), heatmap_csv(g));
  }
}

engine::Footprint run(RunInputs inputs, engine::SimulationOptions options,
                      const std::optional<std::filesystem::path>& out_dir) {
  engine::Simulation sim(std::move(inputs.world), inputs.scenario, inputs.controllers, options);
  sim.run();
  engine::Footprint f = sim.footprint();
  f.config_digests = inputs.digests;
  f.run_id = make_run_id(f);
  if (out_dir) write_outputs(sim, f, *out_dir);
  return f;
}

namespace {

bool is_config_error(const std::exception& e) {
  return dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const layout::LayoutError*>(&e) ||
         dynamic_cast<const scenario::ScenarioError*>(&e) || dynamic_cast<const control::ControlError*>(&e) ||
         dynamic_cast<const json::exception*>(&e) || dynamic_cast<const std::invalid_argument*>(&e);
}

}  // namespace

int cli_main(int argc, char** argv) {
  CLI::App app{"Robotic mobile fulfillment system simulator"};
  std::string layout_file, scenario_file, controllers_file, out_dir;
  std::uint64_t seed = 1;
  double horizon_s = 0.0;
  bool validate_only = false, assert_invariants = false;
  app.add_option("--layout", layout_file, "Layout JSON (explicit or generator)");
  app.add_option("--scenario", scenario_file, "Scenario JSON");
  app.add_option("--controllers", controllers_file, "Controller JSON");
  app.add_option("--seed", seed, "Master seed");
  app.add_option("--out", out_dir, "Output directory");
  auto* horizon_opt = app.add_option("--horizon-s", horizon_s, "Simulated seconds (overrides the scenario duration)");
  app.add_flag("--validate-only", validate_only, "Check the inputs and exit");
  app.add_flag("--assert-invariants", assert_invariants, "Check invariants after every event");

  auto* exp = app.add_subcommand("experiments", "Canned experiments");
  exp->require_subcommand(1);
  auto* exp_list = exp->add_subcommand("list", "List experiment names");
  auto* exp_run = exp->add_subcommand("run", "Run one experiment");
  std::string exp_name, exp_out = "experiment_out";
  std::vector<std::uint64_t> exp_seeds;
  exp_run->add_option("name", exp_name, "Experiment name")->required();
  exp_run->add_option("--out", exp_out, "Output directory");
  exp_run->add_option("--seeds", exp_seeds, "Seeds (default 1 2 3)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (exp_list->parsed()) {
      for (const auto& n : experiments::experiment_names()) std::cout << n << "\n";
      return 0;
    }
    if (exp_run->parsed()) {
      const auto verdict = experiments::run_named(exp_name, exp_out, exp_seeds);
      std::cout << verdict.summary << "\n";
      return verdict.pass ? 0 : 1;
    }
    if (layout_file.empty()) throw ConfigError("--layout is required");
    RunInputs in = load_inputs(layout_file, scenario_file, controllers_file, seed);
    engine::SimulationOptions opt;
    opt.seed = seed;
    if (horizon_opt->count() > 0) opt.horizon = horizon_s;
    opt.assert_invariants = assert_invariants;
    opt.record_trace = false;
    opt.record_decision_details = false;
    if (validate_only) {
      engine::Simulation sim(std::move(in.world), in.scenario, in.controllers, opt);
      std::cout << "configuration valid\n";
      return 0;
    }
    const auto f = run(std::move(in), opt, out_dir.empty() ? std::nullopt : std::optional(out_dir));
    std::cout << fmt::format("run {}: {} pick orders, {} replenishment orders, {:.1f} m, pile-on {:.3f}\n", f.run_id,
                             f.pick_orders_completed, f.replenishment_orders_stored, f.distance, f.pile_on);
    return 0;
  } catch (const engine::InvariantViolation& e) {
    std::cerr << "invariant violation: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << (is_config_error(e) ? "config error: " : "error: ") << e.what() << "\n";
    return is_config_error(e) ? 2 : 1;
  }
}

}  // namespace rmfs::harness

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "rmfs/control.hpp"
#include "rmfs/engine.hpp"
#include "rmfs/model.hpp"
#include "rmfs/scenario.hpp"

namespace rmfs::harness {

/// Raised for unreadable or inconsistent inputs; the message names the file.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The three run inputs plus digests of their canonical JSON forms.
struct RunInputs {
  World world;
  scenario::ScenarioConfig scenario;
  control::ControllerConfig controllers;
  std::map<std::string, std::string> digests;
};

/// 64-bit FNV-1a as 16 hex digits.
std::string fnv1a_hex(const std::string& text);

/// Loads and cross-validates the inputs. Empty scenario or controller paths
/// select the built-in defaults. `seed` also drives layout generation.
RunInputs load_inputs(const std::filesystem::path& layout, const std::filesystem::path& scenario,
                      const std::filesystem::path& controllers, std::uint64_t seed);

/// Fills digests for inputs built in code.
void compute_digests(RunInputs& inputs);

/// Run id derived from the config digests, seed and horizon.
std::string make_run_id(const engine::Footprint& f);

nlohmann::json footprint_to_json(const engine::Footprint& f);
std::string timeseries_csv(const engine::Metrics& m);
std::string heatmap_csv(const engine::HeatmapGrid& g);

/// Writes footprint.json, timeseries.csv and heatmap_floor<k>.csv.
void write_outputs(const engine::Simulation& sim, const engine::Footprint& f, const std::filesystem::path& dir);

/// Writes text to a file, creating parent directories.
void write_file(const std::filesystem::path& file, const std::string& text);

/// Runs one simulation to its horizon; the footprint carries run id and digests.
engine::Footprint run(RunInputs inputs, engine::SimulationOptions options,
                      const std::optional<std::filesystem::path>& out_dir = std::nullopt);

/// Command line entry point. Exit codes: 0 ok, 1 other failure, 2 config
/// error, 3 invariant violation.
int cli_main(int argc, char** argv);

}  // namespace rmfs::harness

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "rmfs/control.hpp"
#include "rmfs/layout.hpp"
#include "rmfs/scenario.hpp"

namespace rmfs::experiments {

struct Verdict {
  std::string name;
  bool pass = false;
  std::string summary;
  nlohmann::json details;
};

/// The config triple every experiment starts from: generated layout with two
/// pick and two replenishment stations, constant backlog, baseline controllers.
layout::LayoutConfig experiment_layout();
scenario::ScenarioConfig experiment_scenario(double horizon);
control::ControllerConfig experiment_controllers();

enum class SwapMode {
  random_to_nearest,
  nearest_to_random,
  none,  ///< random throughout (control condition)
};

/// Per-seed half-to-half measures of one swap run.
struct HalfStats {
  std::uint64_t seed = 0;
  double distance_per_h[2] = {0.0, 0.0};
  double picks_per_h[2] = {0.0, 0.0};
};

struct PsaSwapOptions {
  SwapMode mode = SwapMode::random_to_nearest;
  std::vector<std::uint64_t> seeds{1, 2, 3};
  double horizon = 4 * 3600.0;  ///< s
  std::optional<std::filesystem::path> out_dir;
};

std::vector<HalfStats> run_psa_swap(const PsaSwapOptions& options);
/// Verdict for one mode: the directional claim for the two swap modes, the
/// absence of a consistent improvement for the control.
Verdict judge_psa_swap(SwapMode mode, const std::vector<HalfStats>& stats);

struct HeatmapStats {
  std::uint64_t seed = 0;
  int robots = 0;
  double queue_mean = 0.0;    ///< mean rendered heat over station queue-zone cells
  double storage_mean = 0.0;  ///< mean rendered heat over storage-location cells
  long samples = 0;
};

HeatmapStats run_queue_heatmap(std::uint64_t seed, int robot_factor = 1, double horizon = 3600.0,
                               const std::optional<std::filesystem::path>& out_dir = std::nullopt);

std::vector<std::string> experiment_names();
/// Runs a named experiment, writing configs, per-run outputs and verdict.json.
Verdict run_named(const std::string& name, const std::filesystem::path& out_dir, std::vector<std::uint64_t> seeds);

}  // namespace rmfs::experiments

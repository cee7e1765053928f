#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "rmfs/model.hpp"

namespace rmfs::layout {

enum class Side { north, south, east, west };

struct SideStations {
  int pick = 0;
  int replenishment = 0;
};

struct ElevatorPlacement {
  Side side = Side::west;
  double transit_time = 10.0;  ///< s per port pair
};

/// Parameters of the generated default layout: storage blocks ringed by
/// one-way aisles, a hallway ring around them and U-shaped station queues
/// outside the hallway.
struct LayoutConfig {
  SideStations north{2, 0};
  SideStations south{0, 2};
  SideStations east;
  SideStations west;
  int vertical_aisles = 4;
  int horizontal_aisles = 4;
  int block_width = 2;   ///< storage locations per block along x
  int block_height = 2;  ///< storage locations per block along y
  int floors = 1;
  std::vector<ElevatorPlacement> elevators;
  double cell_size = 0.45;  ///< m
  int robots = 8;
  int pods = -1;             ///< -1: 80% of storage locations
  int dwelling_points = -1;  ///< -1: one per robot
  int queue_length = 4;
  int hallway_width = 1;
  bool queue_shortcuts = true;
  double pod_capacity = 50.0;
  int pick_order_capacity = 8;
  int replenishment_order_capacity = 4;
  double pick_handling_time = 3.0;           ///< s per unit
  double replenishment_handling_time = 2.0;  ///< s per unit
  kinematics::KinematicsParams robot_kinematics;
};

class LayoutError : public std::runtime_error {
 public:
  enum class Kind { infeasible_config, parse_error, validation_error };
  LayoutError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  [[nodiscard]] Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

struct Diagnostic {
  std::string code;
  std::string message;
};

World generate_default_layout(const LayoutConfig& config, std::uint64_t seed);

/// Empty list iff the waypoint-graph invariants hold and every station is
/// reachable from every storage location.
std::vector<Diagnostic> validate_layout(const World& world);

// JSON forms (layout_io.cpp)
LayoutConfig layout_config_from_json(const nlohmann::json& j);
nlohmann::json layout_config_to_json(const LayoutConfig& config);
World layout_from_json(const nlohmann::json& j);
nlohmann::json layout_to_json(const World& world);
World load_explicit_layout(const std::filesystem::path& file);

/// Loads either a generator document (`{"generator": {...}}`) or an explicit
/// layout document.
World load_layout(const std::filesystem::path& file, std::uint64_t seed);

const char* to_string(Side side);
Side side_from_string(const std::string& s);

}  // namespace rmfs::layout

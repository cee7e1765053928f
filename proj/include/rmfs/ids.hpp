#pragma once

#include <compare>
#include <cstddef>
#include <functional>
#include <ostream>

namespace rmfs {

/// Integer identifier tagged by the entity it names, so a pod id cannot be
/// passed where a waypoint id is expected. Ids are contiguous from 0 and
/// double as indices into the owning vector.
template <class Tag>
struct Id {
  int value = -1;

  constexpr Id() = default;
  constexpr explicit Id(int v) : value(v) {}

  [[nodiscard]] constexpr bool valid() const { return value >= 0; }
  [[nodiscard]] constexpr std::size_t index() const { return static_cast<std::size_t>(value); }

  friend constexpr auto operator<=>(Id, Id) = default;
  friend std::ostream& operator<<(std::ostream& os, Id id) { return os << id.value; }
};

using WaypointId = Id<struct WaypointTag>;
using PodId = Id<struct PodTag>;
using RobotId = Id<struct RobotTag>;
using StationId = Id<struct StationTag>;
using SkuId = Id<struct SkuTag>;
using OrderId = Id<struct OrderTag>;
using ElevatorId = Id<struct ElevatorTag>;

}  // namespace rmfs

template <class Tag>
struct std::hash<rmfs::Id<Tag>> {
  std::size_t operator()(rmfs::Id<Tag> id) const noexcept { return std::hash<int>{}(id.value); }
};

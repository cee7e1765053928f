#include <algorithm>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "rmfs/layout.hpp"

namespace rmfs::layout {

using nlohmann::json;

namespace {

[[noreturn]] void parse_fail(const std::string& where, const std::string& what) {
  throw LayoutError(LayoutError::Kind::parse_error, where + ": " + what);
}

const json& field(const json& j, const char* name, const std::string& where) {
  if (!j.is_object() || !j.contains(name)) parse_fail(where, fmt::format("missing field '{}'", name));
  return j.at(name);
}

template <class T>
T get(const json& j, const char* name, const std::string& where) {
  const json& v = field(j, name, where);
  try {
    return v.get<T>();
  } catch (const json::exception& e) {
    parse_fail(where + "." + name, e.what());
  }
}

void reject_unknown(const json& j, std::initializer_list<const char*> known, const std::string& where) {
  if (!j.is_object()) parse_fail(where, "expected an object");
  for (const auto& [key, value] : j.items()) {
    if (std::none_of(known.begin(), known.end(), [&](const char* k) { return key == k; })) {
      parse_fail(where, fmt::format("unknown field '{}'", key));
    }
  }
}

template <class T>
T get_or(const json& j, const char* name, T fallback, const std::string& where) {
  if (!j.is_object() || !j.contains(name)) return fallback;
  return get<T>(j, name, where);
}

unsigned flags_from_json(const json& j, const std::string& where) {
  unsigned flags = kNoFlags;
  if (!j.is_array()) parse_fail(where, "flags must be an array");
  for (const auto& f : j) {
    const std::string s = f.get<std::string>();
    if (s == "storage_location") flags |= kStorageLocation;
    else if (s == "station_endpoint") flags |= kStationEndpoint;
    else if (s == "queue_member") flags |= kQueueMember;
    else if (s == "dwelling_point") flags |= kDwellingPoint;
    else if (s == "elevator_port") flags |= kElevatorPort;
    else parse_fail(where, "unknown flag '" + s + "'");
  }
  return flags;
}

json flags_to_json(unsigned flags) {
  json out = json::array();
  if (flags & kStorageLocation) out.push_back("storage_location");
  if (flags & kStationEndpoint) out.push_back("station_endpoint");
  if (flags & kQueueMember) out.push_back("queue_member");
  if (flags & kDwellingPoint) out.push_back("dwelling_point");
  if (flags & kElevatorPort) out.push_back("elevator_port");
  return out;
}

kinematics::KinematicsParams kinematics_from_json(const json& j, const std::string& where) {
  kinematics::KinematicsParams k;
  k.acc = get_or(j, "acc", k.acc, where);
  k.dec_mag = get_or(j, "dec", k.dec_mag, where);
  k.top_speed = get_or(j, "top_speed", k.top_speed, where);
  k.angular_speed = get_or(j, "angular_speed", k.angular_speed, where);
  try {
    k.validate();
  } catch (const std::domain_error& e) {
    parse_fail(where, e.what());
  }
  return k;
}

json kinematics_to_json(const kinematics::KinematicsParams& k) {
  return json{{"acc", k.acc}, {"dec", k.dec_mag}, {"top_speed", k.top_speed}, {"angular_speed", k.angular_speed}};
}

std::vector<WaypointId> ids_from_json(const json& j, const std::string& where) {
  if (!j.is_array()) parse_fail(where, "expected an array of waypoint ids");
  std::vector<WaypointId> out;
  for (const auto& v : j) {
    if (!v.is_number_integer()) parse_fail(where, "expected integer waypoint id");
    out.emplace_back(v.get<int>());
  }
  return out;
}

json ids_to_json(const std::vector<WaypointId>& ids) {
  json out = json::array();
  for (auto id : ids) out.push_back(id.value);
  return out;
}

json parse_file(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw LayoutError(LayoutError::Kind::parse_error, "cannot open layout file " + file.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw LayoutError(LayoutError::Kind::parse_error, file.string() + ": " + e.what());
  }
}

}  // namespace

LayoutConfig layout_config_from_json(const json& j) {
  const std::string w = "generator";
  LayoutConfig c;
  reject_unknown(j,
                 {"stations", "vertical_aisles", "horizontal_aisles", "block_width", "block_height", "floors",
                  "elevators", "cell_size", "robots", "pods", "dwelling_points", "queue_length", "hallway_width",
                  "queue_shortcuts", "pod_capacity", "pick_order_capacity", "replenishment_order_capacity",
                  "pick_handling_time_s", "replenishment_handling_time_s", "robot_kinematics"},
                 w);
  if (j.contains("stations")) {
    const json& s = j.at("stations");
    reject_unknown(s, {"north", "south", "east", "west"}, w + ".stations");
    auto side = [&](const char* name, SideStations& out) {
      if (!s.contains(name)) {
        out = {};
        return;
      }
      reject_unknown(s.at(name), {"pick", "replenishment"}, w + ".stations." + name);
      out.pick = get_or(s.at(name), "pick", 0, w + ".stations." + name);
      out.replenishment = get_or(s.at(name), "replenishment", 0, w + ".stations." + name);
    };
    side("north", c.north);
    side("south", c.south);
    side("east", c.east);
    side("west", c.west);
  }
  c.vertical_aisles = get_or(j, "vertical_aisles", c.vertical_aisles, w);
  c.horizontal_aisles = get_or(j, "horizontal_aisles", c.horizontal_aisles, w);
  c.block_width = get_or(j, "block_width", c.block_width, w);
  c.block_height = get_or(j, "block_height", c.block_height, w);
  c.floors = get_or(j, "floors", c.floors, w);
  if (j.contains("elevators")) {
    for (const auto& e : j.at("elevators")) {
      reject_unknown(e, {"side", "transit_time_s"}, w + ".elevators");
      ElevatorPlacement p;
      p.side = side_from_string(get_or<std::string>(e, "side", "west", w + ".elevators"));
      p.transit_time = get_or(e, "transit_time_s", p.transit_time, w + ".elevators");
      c.elevators.push_back(p);
    }
  }
  c.cell_size = get_or(j, "cell_size", c.cell_size, w);
  c.robots = get_or(j, "robots", c.robots, w);
  c.pods = get_or(j, "pods", c.pods, w);
  c.dwelling_points = get_or(j, "dwelling_points", c.dwelling_points, w);
  c.queue_length = get_or(j, "queue_length", c.queue_length, w);
  c.hallway_width = get_or(j, "hallway_width", c.hallway_width, w);
  c.queue_shortcuts = get_or(j, "queue_shortcuts", c.queue_shortcuts, w);
  c.pod_capacity = get_or(j, "pod_capacity", c.pod_capacity, w);
  c.pick_order_capacity = get_or(j, "pick_order_capacity", c.pick_order_capacity, w);
  c.replenishment_order_capacity = get_or(j, "replenishment_order_capacity", c.replenishment_order_capacity, w);
  c.pick_handling_time = get_or(j, "pick_handling_time_s", c.pick_handling_time, w);
  c.replenishment_handling_time = get_or(j, "replenishment_handling_time_s", c.replenishment_handling_time, w);
  if (j.contains("robot_kinematics")) c.robot_kinematics = kinematics_from_json(j.at("robot_kinematics"), w + ".robot_kinematics");
  return c;
}

json layout_config_to_json(const LayoutConfig& c) {
  auto side = [](const SideStations& s) { return json{{"pick", s.pick}, {"replenishment", s.replenishment}}; };
  json elevators = json::array();
  for (const auto& e : c.elevators) elevators.push_back({{"side", to_string(e.side)}, {"transit_time_s", e.transit_time}});
  return json{
      {"stations", {{"north", side(c.north)}, {"south", side(c.south)}, {"east", side(c.east)}, {"west", side(c.west)}}},
      {"vertical_aisles", c.vertical_aisles},
      {"horizontal_aisles", c.horizontal_aisles},
      {"block_width", c.block_width},
      {"block_height", c.block_height},
      {"floors", c.floors},
      {"elevators", elevators},
      {"cell_size", c.cell_size},
      {"robots", c.robots},
      {"pods", c.pods},
      {"dwelling_points", c.dwelling_points},
      {"queue_length", c.queue_length},
      {"hallway_width", c.hallway_width},
      {"queue_shortcuts", c.queue_shortcuts},
      {"pod_capacity", c.pod_capacity},
      {"pick_order_capacity", c.pick_order_capacity},
      {"replenishment_order_capacity", c.replenishment_order_capacity},
      {"pick_handling_time_s", c.pick_handling_time},
      {"replenishment_handling_time_s", c.replenishment_handling_time},
      {"robot_kinematics", kinematics_to_json(c.robot_kinematics)},
  };
}

World layout_from_json(const json& j) {
  World world;
  world.cell_size = get_or(j, "cell_size", 0.45, "layout");
  const auto default_kin = j.contains("robot_kinematics")
                               ? kinematics_from_json(j.at("robot_kinematics"), "robot_kinematics")
                               : kinematics::KinematicsParams{};

  const json& wps = field(j, "waypoints", "layout");
  for (std::size_t i = 0; i < wps.size(); ++i) {
    const std::string where = fmt::format("waypoints[{}]", i);
    const json& w = wps[i];
    const int id = get<int>(w, "id", where);
    if (id != static_cast<int>(i)) parse_fail(where, "waypoint ids must be contiguous from 0");
    const unsigned flags = w.contains("flags") ? flags_from_json(w.at("flags"), where + ".flags") : kNoFlags;
    world.graph.add_waypoint(get<int>(w, "floor", where), get<double>(w, "x", where), get<double>(w, "y", where),
                             flags);
  }
  const int n = static_cast<int>(world.graph.size());
  auto check_wp = [&](int id, const std::string& where) {
    if (id < 0 || id >= n) parse_fail(where, fmt::format("unknown waypoint id {}", id));
    return WaypointId{id};
  };

  const json& edges = field(j, "edges", "layout");
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const std::string where = fmt::format("edges[{}]", i);
    const json& e = edges[i];
    const WaypointId from = check_wp(get<int>(e, "from", where), where + ".from");
    const WaypointId to = check_wp(get<int>(e, "to", where), where + ".to");
    const double length = e.contains("length") ? get<double>(e, "length", where) : world.graph.distance(from, to);
    world.graph.add_edge(from, to, length, get_or(e, "shortcut", false, where));
  }

  if (j.contains("stations")) {
    const json& sts = j.at("stations");
    for (std::size_t i = 0; i < sts.size(); ++i) {
      const std::string where = fmt::format("stations[{}]", i);
      const json& s = sts[i];
      Station st;
      st.id = StationId{get<int>(s, "id", where)};
      if (st.id.value != static_cast<int>(i)) parse_fail(where, "station ids must be contiguous from 0");
      const std::string kind = get<std::string>(s, "kind", where);
      if (kind == "pick") st.kind = StationKind::pick;
      else if (kind == "replenishment") st.kind = StationKind::replenishment;
      else parse_fail(where + ".kind", "expected 'pick' or 'replenishment'");
      st.input_waypoint = check_wp(get<int>(s, "input_waypoint", where), where + ".input_waypoint");
      st.output_waypoint = check_wp(get<int>(s, "output_waypoint", where), where + ".output_waypoint");
      st.queue_zone.slots = ids_from_json(field(s, "queue", where), where + ".queue");
      for (auto w : st.queue_zone.slots) check_wp(w.value, where + ".queue");
      st.order_capacity = get_or(s, "order_capacity", st.kind == StationKind::pick ? 8 : 4, where);
      st.handling_time = get_or(s, "handling_time_s", st.handling_time, where);
      st.active = get_or(s, "active", true, where);
      world.stations.push_back(st);
    }
  }

  if (j.contains("elevators")) {
    const json& els = j.at("elevators");
    for (std::size_t i = 0; i < els.size(); ++i) {
      const std::string where = fmt::format("elevators[{}]", i);
      const json& e = els[i];
      Elevator el;
      el.id = ElevatorId{get<int>(e, "id", where)};
      if (el.id.value != static_cast<int>(i)) parse_fail(where, "elevator ids must be contiguous from 0");
      for (const auto& pp : field(e, "port_pairs", where)) {
        PortPair p;
        p.from = check_wp(get<int>(pp, "from", where + ".port_pairs"), where);
        p.to = check_wp(get<int>(pp, "to", where + ".port_pairs"), where);
        p.transit_time = get<double>(pp, "transit_time_s", where + ".port_pairs");
        el.port_pairs.push_back(p);
      }
      if (e.contains("queues")) {
        for (const auto& q : e.at("queues")) {
          QueueZone z;
          z.slots = ids_from_json(q, where + ".queues");
          for (auto w : z.slots) check_wp(w.value, where + ".queues");
          el.queues.push_back(z);
        }
      }
      world.elevators.push_back(el);
    }
  }

  if (j.contains("storage_locations")) {
    world.storage_locations = ids_from_json(j.at("storage_locations"), "storage_locations");
    for (auto w : world.storage_locations) check_wp(w.value, "storage_locations");
  }
  if (j.contains("dwelling_points")) {
    world.dwelling_points = ids_from_json(j.at("dwelling_points"), "dwelling_points");
    for (auto w : world.dwelling_points) check_wp(w.value, "dwelling_points");
  }

  world.reset_occupancy();
  if (j.contains("pods")) {
    const json& pods = j.at("pods");
    for (std::size_t i = 0; i < pods.size(); ++i) {
      const std::string where = fmt::format("pods[{}]", i);
      Pod pod;
      pod.id = PodId{get<int>(pods[i], "id", where)};
      if (pod.id.value != static_cast<int>(i)) parse_fail(where, "pod ids must be contiguous from 0");
      pod.capacity = get_or(pods[i], "capacity", pod.capacity, where);
      const WaypointId loc = check_wp(get<int>(pods[i], "storage_location", where), where + ".storage_location");
      world.pods.push_back(pod);
      if (!world.location_free(loc)) parse_fail(where, "storage location already holds a pod");
      world.store_pod_at(pod.id, loc);
    }
  }
  if (j.contains("robots")) {
    const json& robots = j.at("robots");
    for (std::size_t i = 0; i < robots.size(); ++i) {
      const std::string where = fmt::format("robots[{}]", i);
      Robot r;
      r.id = RobotId{get<int>(robots[i], "id", where)};
      if (r.id.value != static_cast<int>(i)) parse_fail(where, "robot ids must be contiguous from 0");
      r.waypoint = check_wp(get<int>(robots[i], "waypoint", where), where + ".waypoint");
      const auto& w = world.graph.waypoint(r.waypoint);
      r.floor = w.floor;
      r.pose = Pose{w.x, w.y, kinematics::normalize_heading(get_or(robots[i], "heading", 0.0, where))};
      r.kinematics = robots[i].contains("kinematics") ? kinematics_from_json(robots[i].at("kinematics"), where)
                                                      : default_kin;
      world.robots.push_back(r);
    }
  }
  return world;
}

json layout_to_json(const World& world) {
  json j;
  j["cell_size"] = world.cell_size;
  int floors = world.graph.floor_count();
  j["floors"] = json::array();
  for (int f = 0; f < floors; ++f) j["floors"].push_back({{"id", f}});
  json wps = json::array();
  for (const auto& w : world.graph.waypoints()) {
    wps.push_back({{"id", w.id.value}, {"floor", w.floor}, {"x", w.x}, {"y", w.y}, {"flags", flags_to_json(w.flags)}});
  }
  j["waypoints"] = std::move(wps);
  json edges = json::array();
  for (const auto& e : world.graph.edges()) {
    json je{{"from", e.from.value}, {"to", e.to.value}, {"length", e.length}};
    if (e.shortcut) je["shortcut"] = true;
    edges.push_back(std::move(je));
  }
  j["edges"] = std::move(edges);
  json stations = json::array();
  for (const auto& s : world.stations) {
    stations.push_back({{"id", s.id.value},
                        {"kind", s.kind == StationKind::pick ? "pick" : "replenishment"},
                        {"input_waypoint", s.input_waypoint.value},
                        {"output_waypoint", s.output_waypoint.value},
                        {"queue", ids_to_json(s.queue_zone.slots)},
                        {"order_capacity", s.order_capacity},
                        {"handling_time_s", s.handling_time},
                        {"active", s.active}});
  }
  j["stations"] = std::move(stations);
  json elevators = json::array();
  for (const auto& e : world.elevators) {
    json pairs = json::array();
    for (const auto& pp : e.port_pairs) {
      pairs.push_back({{"from", pp.from.value}, {"to", pp.to.value}, {"transit_time_s", pp.transit_time}});
    }
    json queues = json::array();
    for (const auto& q : e.queues) queues.push_back(ids_to_json(q.slots));
    elevators.push_back({{"id", e.id.value}, {"port_pairs", pairs}, {"queues", queues}});
  }
  j["elevators"] = std::move(elevators);
  j["storage_locations"] = ids_to_json(world.storage_locations);
  j["dwelling_points"] = ids_to_json(world.dwelling_points);
  json robots = json::array();
  for (const auto& r : world.robots) {
    robots.push_back({{"id", r.id.value},
                      {"waypoint", r.waypoint.value},
                      {"heading", r.pose.heading},
                      {"kinematics", kinematics_to_json(r.kinematics)}});
  }
  j["robots"] = std::move(robots);
  json pods = json::array();
  for (const auto& p : world.pods) {
    if (p.place.kind != PodPlaceKind::storage) {
      throw LayoutError(LayoutError::Kind::validation_error, "only stored pods can be serialized into a layout");
    }
    pods.push_back({{"id", p.id.value}, {"storage_location", p.place.ref}, {"capacity", p.capacity}});
  }
  j["pods"] = std::move(pods);
  return j;
}

World load_explicit_layout(const std::filesystem::path& file) {
  const json j = parse_file(file);
  World world = layout_from_json(j);
  const auto diags = validate_layout(world);
  if (!diags.empty()) {
    std::ostringstream msg;
    msg << file.string() << ": layout validation failed:";
    for (const auto& d : diags) msg << "\n  [" << d.code << "] " << d.message;
    throw LayoutError(LayoutError::Kind::validation_error, msg.str());
  }
  return world;
}

World load_layout(const std::filesystem::path& file, std::uint64_t seed) {
  const json j = parse_file(file);
  if (j.contains("generator")) return generate_default_layout(layout_config_from_json(j.at("generator")), seed);
  World world = layout_from_json(j);
  const auto diags = validate_layout(world);
  if (!diags.empty()) {
    std::ostringstream msg;
    msg << file.string() << ": layout validation failed:";
    for (const auto& d : diags) msg << "\n  [" << d.code << "] " << d.message;
    throw LayoutError(LayoutError::Kind::validation_error, msg.str());
  }
  return world;
}

}  // namespace rmfs::layout

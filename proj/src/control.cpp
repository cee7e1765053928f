#include "rmfs/control.hpp"

#include <algorithm>
#include <fstream>

#include <fmt/format.h>

namespace rmfs::control {

using nlohmann::json;

const char* to_string(Problem p) {
  switch (p) {
    case Problem::roa:
      return "roa";
    case Problem::poa:
      return "poa";
    case Problem::rps:
      return "rps";
    case Problem::pps:
      return "pps";
    case Problem::psa:
      return "psa";
    case Problem::ta:
      return "ta";
    case Problem::pp:
      return "pp";
    case Problem::sa:
      return "sa";
    case Problem::mm:
      return "mm";
  }
  return "?";
}

Problem problem_from_string(const std::string& s) {
  for (Problem p : kAllProblems) {
    if (s == to_string(p)) return p;
  }
  throw ControlError(ControlError::Kind::invalid_config, fmt::format("unknown decision problem '{}'", s));
}

const char* to_string(Trigger t) {
  switch (t) {
    case Trigger::new_replenishment_order:
      return "new_replenishment_order";
    case Trigger::replenishment_order_stored:
      return "replenishment_order_stored";
    case Trigger::new_pick_order:
      return "new_pick_order";
    case Trigger::pick_order_completed:
      return "pick_order_completed";
    case Trigger::sku_unit_picked:
      return "sku_unit_picked";
    case Trigger::task_assigned_to_robot:
      return "task_assigned_to_robot";
    case Trigger::pod_needs_storage:
      return "pod_needs_storage";
    case Trigger::robot_needs_task:
      return "robot_needs_task";
    case Trigger::robot_new_destination:
      return "robot_new_destination";
    case Trigger::schedule:
      return "schedule";
  }
  return "?";
}

std::span<const Problem> subscribers(Trigger t) {
  static constexpr std::array<Problem, 2> roa_rps{Problem::roa, Problem::rps};
  static constexpr std::array<Problem, 2> roa_poa{Problem::roa, Problem::poa};
  static constexpr std::array<Problem, 1> poa{Problem::poa};
  static constexpr std::array<Problem, 1> rps{Problem::rps};
  static constexpr std::array<Problem, 1> pps{Problem::pps};
  static constexpr std::array<Problem, 1> psa{Problem::psa};
  static constexpr std::array<Problem, 1> ta{Problem::ta};
  static constexpr std::array<Problem, 1> pp{Problem::pp};
  static constexpr std::array<Problem, 2> sched{Problem::sa, Problem::mm};
  switch (t) {
    case Trigger::new_replenishment_order:
      return roa_rps;
    case Trigger::replenishment_order_stored:
      return roa_poa;
    case Trigger::new_pick_order:
    case Trigger::pick_order_completed:
      return poa;
    case Trigger::sku_unit_picked:
      return rps;
    case Trigger::task_assigned_to_robot:
      return pps;
    case Trigger::pod_needs_storage:
      return psa;
    case Trigger::robot_needs_task:
      return ta;
    case Trigger::robot_new_destination:
      return pp;
    case Trigger::schedule:
      return sched;
  }
  return {};
}

bool is_subscribed(Problem p, Trigger t) {
  const auto subs = subscribers(t);
  return std::find(subs.begin(), subs.end(), p) != subs.end();
}

// ---------------------------------------------------------------------------
// DecisionLog

std::size_t DecisionLog::fire(double time, Trigger trigger, int subject) {
  triggers_.push_back({time, trigger, subject});
  return triggers_.size() - 1;
}

void DecisionLog::decide(std::size_t trigger_index, Problem problem, std::string controller, std::string input,
                         std::string output) {
  const TriggerRecord& t = triggers_.at(trigger_index);
  DecisionRecord d{trigger_index, t.time, t.trigger, problem, std::move(controller), {}, {}};
  if (keep_details_) {
    d.input = std::move(input);
    d.output = std::move(output);
  }
  decisions_.push_back(std::move(d));
}

std::vector<std::string> DecisionLog::check_pairing() const {
  std::vector<std::string> out;
  std::vector<std::map<Problem, int>> per_trigger(triggers_.size());
  for (const auto& d : decisions_) {
    if (d.trigger_index >= triggers_.size()) {
      out.push_back(fmt::format("{} decision without a trigger", to_string(d.problem)));
      continue;
    }
    if (!is_subscribed(d.problem, triggers_[d.trigger_index].trigger)) {
      out.push_back(fmt::format("{} decided under unrelated trigger {}", to_string(d.problem),
                                to_string(triggers_[d.trigger_index].trigger)));
    }
    ++per_trigger[d.trigger_index][d.problem];
  }
  for (std::size_t i = 0; i < triggers_.size(); ++i) {
    if (triggers_[i].trigger == Trigger::schedule) continue;
    for (Problem p : subscribers(triggers_[i].trigger)) {
      const auto it = per_trigger[i].find(p);
      const int n = it == per_trigger[i].end() ? 0 : it->second;
      if (n != 1) {
        out.push_back(fmt::format("trigger {} at {:.3f}: {} invoked {} times", to_string(triggers_[i].trigger),
                                  triggers_[i].time, to_string(p), n));
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Schedules

StationActivator::StationActivator(std::vector<StationSwitch> schedule) : schedule_(std::move(schedule)) {
  std::stable_sort(schedule_.begin(), schedule_.end(),
                   [](const StationSwitch& a, const StationSwitch& b) { return a.time < b.time; });
}

std::optional<double> StationActivator::next_event_time() const {
  if (cursor_ >= schedule_.size()) return std::nullopt;
  return schedule_[cursor_].time;
}

std::vector<StationSwitch> StationActivator::due(double t) {
  std::vector<StationSwitch> out;
  while (cursor_ < schedule_.size() && schedule_[cursor_].time <= t) out.push_back(schedule_[cursor_++]);
  return out;
}

MethodManager::MethodManager(std::vector<ControllerSwap> schedule) : schedule_(std::move(schedule)) {
  std::stable_sort(schedule_.begin(), schedule_.end(),
                   [](const ControllerSwap& a, const ControllerSwap& b) { return a.time < b.time; });
}

std::optional<double> MethodManager::next_event_time() const {
  if (cursor_ >= schedule_.size()) return std::nullopt;
  return schedule_[cursor_].time;
}

std::vector<ControllerSwap> MethodManager::due(double t) {
  std::vector<ControllerSwap> out;
  while (cursor_ < schedule_.size() && schedule_[cursor_].time <= t) out.push_back(schedule_[cursor_++]);
  return out;
}

// ---------------------------------------------------------------------------
// Config

void ControllerConfig::validate() const {
  for (Problem p : kAllProblems) {
    if (p == Problem::sa || p == Problem::mm) continue;
    const auto it = choices.find(p);
    if (it == choices.end()) {
      throw ControlError(ControlError::Kind::invalid_config, fmt::format("no controller for {}", to_string(p)));
    }
    make_controller(p, it->second.name, it->second.params);
  }
  for (const auto& s : sa_schedule) {
    if (!(s.time >= 0)) throw ControlError(ControlError::Kind::invalid_config, "sa schedule time must be >= 0");
  }
  for (const auto& s : mm_schedule) {
    if (!(s.time >= 0)) throw ControlError(ControlError::Kind::invalid_config, "mm schedule time must be >= 0");
    if (s.problem == Problem::sa || s.problem == Problem::mm) {
      throw ControlError(ControlError::Kind::invalid_config, "mm cannot swap schedule-driven controllers");
    }
    make_controller(s.problem, s.controller, s.params);
  }
  if (!(optimizer_time_scale >= 0)) {
    throw ControlError(ControlError::Kind::invalid_config, "optimizer_time_scale must be >= 0");
  }
}

ControllerConfig controller_config_from_json(const json& j) {
  ControllerConfig c;
  const auto reject_unknown = [](const json& obj, std::initializer_list<const char*> known, const std::string& where) {
    if (!obj.is_object()) throw ControlError(ControlError::Kind::invalid_config, where + ": expected an object");
    for (const auto& [key, value] : obj.items()) {
      if (std::none_of(known.begin(), known.end(), [&](const char* k) { return key == k; })) {
        throw ControlError(ControlError::Kind::invalid_config, fmt::format("{}: unknown field '{}'", where, key));
      }
    }
  };
  reject_unknown(j, {"roa", "poa", "rps", "pps", "psa", "ta", "pp", "sa", "mm", "optimizer_time_scale"}, "controllers");
  try {
    for (Problem p : kAllProblems) {
      if (p == Problem::sa || p == Problem::mm) continue;
      const char* key = to_string(p);
      if (!j.contains(key)) continue;
      const auto& v = j.at(key);
      if (v.is_string()) {
        c.choices[p] = {v.get<std::string>(), json::object()};
      } else {
        reject_unknown(v, {"name", "params"}, key);
        c.choices[p] = {v.at("name").get<std::string>(), v.value("params", json::object())};
      }
    }
    if (j.contains("sa")) {
      reject_unknown(j.at("sa"), {"schedule"}, "sa");
      for (const auto& e : j.at("sa").value("schedule", json::array())) {
        c.sa_schedule.push_back({e.at("time_s").get<double>(), StationId(e.at("station").get<int>()),
                                 e.at("active").get<bool>()});
      }
    }
    if (j.contains("mm")) {
      reject_unknown(j.at("mm"), {"schedule"}, "mm");
      for (const auto& e : j.at("mm").value("schedule", json::array())) {
        c.mm_schedule.push_back({e.at("time_s").get<double>(), problem_from_string(e.at("problem").get<std::string>()),
                                 e.at("controller").get<std::string>(), e.value("params", json::object())});
      }
    }
    c.optimizer_time_scale = j.value("optimizer_time_scale", c.optimizer_time_scale);
  } catch (const json::exception& e) {
    throw ControlError(ControlError::Kind::invalid_config, fmt::format("controllers: {}", e.what()));
  }
  c.validate();
  return c;
}

json controller_config_to_json(const ControllerConfig& c) {
  json j;
  for (const auto& [p, choice] : c.choices) j[to_string(p)] = {{"name", choice.name}, {"params", choice.params}};
  json sa = json::array();
  for (const auto& s : c.sa_schedule) sa.push_back({{"time_s", s.time}, {"station", s.station.value}, {"active", s.active}});
  j["sa"] = {{"schedule", sa}};
  json mm = json::array();
  for (const auto& s : c.mm_schedule) {
    mm.push_back({{"time_s", s.time}, {"problem", to_string(s.problem)}, {"controller", s.controller}, {"params", s.params}});
  }
  j["mm"] = {{"schedule", mm}};
  j["optimizer_time_scale"] = c.optimizer_time_scale;
  return j;
}

ControllerConfig load_controller_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) {
    throw ControlError(ControlError::Kind::invalid_config, fmt::format("cannot open controller file '{}'", file.string()));
  }
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ControlError(ControlError::Kind::invalid_config, fmt::format("{}: {}", file.string(), e.what()));
  }
  return controller_config_from_json(j);
}

// ---------------------------------------------------------------------------
// ControllerSet

namespace {

template <class T>
std::unique_ptr<T> downcast(std::unique_ptr<Controller> c) {
  auto* raw = dynamic_cast<T*>(c.get());
  if (!raw) throw ControlError(ControlError::Kind::unknown_controller, "controller has the wrong problem type");
  c.release();
  return std::unique_ptr<T>(raw);
}

}  // namespace

ControllerSet::ControllerSet(const ControllerConfig& config) {
  config.validate();
  auto make = [&](Problem p) {
    const auto& ch = config.choices.at(p);
    return make_controller(p, ch.name, ch.params);
  };
  roa_ = downcast<ReplenishmentOrderAssigner>(make(Problem::roa));
  poa_ = downcast<PickOrderAssigner>(make(Problem::poa));
  rps_ = downcast<ReplenishmentPodSelector>(make(Problem::rps));
  pps_ = downcast<PodSelector>(make(Problem::pps));
  psa_ = downcast<PodStorageAssigner>(make(Problem::psa));
  ta_ = downcast<TaskAllocator>(make(Problem::ta));
  pp_ = downcast<PathPlanningController>(make(Problem::pp));
  sa_ = std::make_unique<StationActivator>(config.sa_schedule);
  mm_ = std::make_unique<MethodManager>(config.mm_schedule);
}

std::string ControllerSet::active_name(Problem p) const {
  switch (p) {
    case Problem::roa:
      return roa_->name();
    case Problem::poa:
      return poa_->name();
    case Problem::rps:
      return rps_->name();
    case Problem::pps:
      return pps_->name();
    case Problem::psa:
      return psa_->name();
    case Problem::ta:
      return ta_->name();
    case Problem::pp:
      return pp_->name();
    case Problem::sa:
      return sa_->name();
    case Problem::mm:
      return mm_->name();
  }
  return "?";
}

void ControllerSet::swap(Problem p, const std::string& name, const json& params) {
  auto c = make_controller(p, name, params);
  switch (p) {
    case Problem::roa:
      roa_ = downcast<ReplenishmentOrderAssigner>(std::move(c));
      break;
    case Problem::poa:
      poa_ = downcast<PickOrderAssigner>(std::move(c));
      break;
    case Problem::rps:
      rps_ = downcast<ReplenishmentPodSelector>(std::move(c));
      break;
    case Problem::pps:
      pps_ = downcast<PodSelector>(std::move(c));
      break;
    case Problem::psa:
      psa_ = downcast<PodStorageAssigner>(std::move(c));
      break;
    case Problem::ta:
      ta_ = downcast<TaskAllocator>(std::move(c));
      break;
    case Problem::pp:
      pp_ = downcast<PathPlanningController>(std::move(c));
      break;
    case Problem::sa:
    case Problem::mm:
      throw ControlError(ControlError::Kind::invalid_config, "schedule-driven controllers cannot be swapped");
  }
}

}  // namespace rmfs::control

#include "rmfs/kinematics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace rmfs::kinematics {

namespace {

void check_speed(const KinematicsParams& p, double v0) {
  if (!(v0 >= -kCaseTolerance && v0 <= p.top_speed + kCaseTolerance)) {
    throw std::domain_error("initial speed " + std::to_string(v0) + " outside [0, " +
                            std::to_string(p.top_speed) + "]");
  }
}

double clamp_speed(const KinematicsParams& p, double v0) { return std::clamp(v0, 0.0, p.top_speed); }

void check_distance(double d) {
  if (!(d >= 0.0) || !std::isfinite(d)) {
    throw std::domain_error("distance must be finite and non-negative, got " + std::to_string(d));
  }
}

}  // namespace

void KinematicsParams::validate() const {
  if (!(acc > 0.0) || !(dec_mag > 0.0) || !(top_speed > 0.0) || !(angular_speed > 0.0)) {
    throw std::domain_error("kinematics parameters must be strictly positive");
  }
}

double time_to_top_speed(const KinematicsParams& p, double v0) {
  check_speed(p, v0);
  return (p.top_speed - clamp_speed(p, v0)) / p.acc;
}

double distance_to_top_speed(const KinematicsParams& p, double v0) {
  const double t = time_to_top_speed(p, v0);
  return 0.5 * p.acc * t * t + clamp_speed(p, v0) * t;
}

double time_to_stop(const KinematicsParams& p, double v0) {
  check_speed(p, v0);
  return clamp_speed(p, v0) / p.dec_mag;
}

double stopping_distance(const KinematicsParams& p, double v0) {
  const double t = time_to_stop(p, v0);
  // signed deceleration: s = (-dec/2) t^2 + v0 t
  return -0.5 * p.dec_mag * t * t + clamp_speed(p, v0) * t;
}

double effective_distance(const KinematicsParams& p, double v0, double d) {
  check_speed(p, v0);
  check_distance(d);
  const double run_up = clamp_speed(p, v0) / p.acc;
  return d + 0.5 * p.acc * run_up * run_up;
}

double switch_time(const KinematicsParams& p, double d_prime) {
  check_distance(d_prime);
  return std::sqrt(d_prime / (0.5 * p.acc + p.acc * p.acc / (2.0 * p.dec_mag)));
}

namespace {

// Deceleration phase of the rest-to-rest triangle; acc and dec swap roles.
double switch_time_decel(const KinematicsParams& p, double d_prime) {
  return std::sqrt(d_prime / (0.5 * p.dec_mag + p.dec_mag * p.dec_mag / (2.0 * p.acc)));
}

}  // namespace

CruiseCase classify_cruise(const KinematicsParams& p, double v0, double d) {
  check_speed(p, v0);
  check_distance(d);
  v0 = clamp_speed(p, v0);
  if (d <= stopping_distance(p, v0) + kCaseTolerance) return CruiseCase::stop_only;
  if (std::abs(v0 - p.top_speed) <= kCaseTolerance) return CruiseCase::cruise_then_stop;
  if (distance_to_top_speed(p, v0) + stopping_distance(p, p.top_speed) <= d) return CruiseCase::trapezoid;
  return CruiseCase::triangle;
}

double cruise_time(const KinematicsParams& p, double v0, double d) {
  const CruiseCase c = classify_cruise(p, v0, d);
  v0 = clamp_speed(p, v0);
  switch (c) {
    case CruiseCase::stop_only:
      return time_to_stop(p, v0);
    case CruiseCase::cruise_then_stop:
      return (d - stopping_distance(p, p.top_speed)) / p.top_speed + time_to_stop(p, p.top_speed);
    case CruiseCase::trapezoid:
      return time_to_top_speed(p, v0) +
             (d - distance_to_top_speed(p, v0) - stopping_distance(p, p.top_speed)) / p.top_speed +
             time_to_stop(p, p.top_speed);
    case CruiseCase::triangle: {
      const double d_prime = effective_distance(p, v0, d);
      return switch_time(p, d_prime) + switch_time_decel(p, d_prime) - v0 / p.acc;
    }
  }
  return 0.0;
}

double speed_after(const KinematicsParams& p, double v0, double t, Phase phase) {
  check_speed(p, v0);
  if (t < 0.0) throw std::domain_error("negative elapsed time");
  v0 = clamp_speed(p, v0);
  switch (phase) {
    case Phase::accelerating:
      return std::min(v0 + p.acc * t, p.top_speed);
    case Phase::decelerating:
      return std::max(v0 - p.dec_mag * t, 0.0);
    case Phase::cruising:
      return p.top_speed;
  }
  return 0.0;
}

double position_after(const KinematicsParams& p, double v0, double t, Phase phase) {
  check_speed(p, v0);
  if (t < 0.0) throw std::domain_error("negative elapsed time");
  v0 = clamp_speed(p, v0);
  switch (phase) {
    case Phase::accelerating: {
      const double t_top = time_to_top_speed(p, v0);
      if (t <= t_top) return 0.5 * p.acc * t * t + v0 * t;
      return distance_to_top_speed(p, v0) + p.top_speed * (t - t_top);
    }
    case Phase::decelerating: {
      const double t_stop = time_to_stop(p, v0);
      if (t <= t_stop) return -0.5 * p.dec_mag * t * t + v0 * t;
      return stopping_distance(p, v0);
    }
    case Phase::cruising:
      return p.top_speed * t;
  }
  return 0.0;
}

double turn_time(const KinematicsParams& p, double delta_angle) {
  if (!(delta_angle >= 0.0 && delta_angle <= std::numbers::pi + kCaseTolerance)) {
    throw std::domain_error("turn angle must be a shortest rotation in [0, pi], got " +
                            std::to_string(delta_angle));
  }
  return delta_angle / p.angular_speed;
}

double normalize_heading(double angle) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double a = std::fmod(angle, two_pi);
  if (a < 0.0) a += two_pi;
  if (a >= two_pi) a = 0.0;
  return a;
}

double heading_delta(double from, double to) {
  const double d = std::abs(normalize_heading(to) - normalize_heading(from));
  return std::min(d, 2.0 * std::numbers::pi - d);
}

MotionProfile motion_profile(const KinematicsParams& p, double v0, double d) {
  const CruiseCase c = classify_cruise(p, v0, d);
  v0 = clamp_speed(p, v0);
  MotionProfile prof;
  auto push = [&](double duration, double speed, double a) {
    if (duration > 0.0) prof.segments.push_back(Segment{duration, speed, a});
  };
  const double v_top = p.top_speed;
  switch (c) {
    case CruiseCase::stop_only:
      push(time_to_stop(p, v0), v0, -p.dec_mag);
      break;
    case CruiseCase::cruise_then_stop:
      push((d - stopping_distance(p, v_top)) / v_top, v_top, 0.0);
      push(time_to_stop(p, v_top), v_top, -p.dec_mag);
      break;
    case CruiseCase::trapezoid:
      push(time_to_top_speed(p, v0), v0, p.acc);
      push((d - distance_to_top_speed(p, v0) - stopping_distance(p, v_top)) / v_top, v_top, 0.0);
      push(time_to_stop(p, v_top), v_top, -p.dec_mag);
      break;
    case CruiseCase::triangle: {
      const double d_prime = effective_distance(p, v0, d);
      const double t1 = switch_time(p, d_prime);
      const double peak = p.acc * t1;
      push(t1 - v0 / p.acc, v0, p.acc);
      push(peak / p.dec_mag, peak, -p.dec_mag);
      break;
    }
  }
  for (const auto& s : prof.segments) {
    prof.total_time += s.duration;
    prof.total_distance += s.distance();
  }
  return prof;
}

double MotionProfile::distance_at(double t) const {
  double covered = 0.0;
  double elapsed = std::max(0.0, t);
  for (const auto& s : segments) {
    if (elapsed >= s.duration) {
      covered += s.distance();
      elapsed -= s.duration;
      continue;
    }
    return covered + s.initial_speed * elapsed + 0.5 * s.acceleration * elapsed * elapsed;
  }
  return covered;
}

double MotionProfile::speed_at(double t) const {
  double elapsed = std::max(0.0, t);
  for (const auto& s : segments) {
    if (elapsed >= s.duration) {
      elapsed -= s.duration;
      continue;
    }
    return s.initial_speed + s.acceleration * elapsed;
  }
  return segments.empty() ? 0.0 : std::max(0.0, segments.back().final_speed());
}

}  // namespace rmfs::kinematics

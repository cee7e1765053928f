#pragma once

#include <vector>

namespace rmfs::kinematics {

/// Straight-line motion limits of one robot. All magnitudes are positive;
/// deceleration is stored as a magnitude and its sign is applied explicitly.
struct KinematicsParams {
  double acc = 0.5;            ///< m/s^2
  double dec_mag = 0.5;        ///< m/s^2, magnitude of the (negative) deceleration
  double top_speed = 0.21;     ///< m/s
  double angular_speed = 2.0 * 3.14159265358979323846 / 5.5;  ///< rad/s

  void validate() const;
};

inline constexpr double kCaseTolerance = 1e-9;

/// Time and distance needed to accelerate from v0 to top speed.
double time_to_top_speed(const KinematicsParams& p, double v0);
double distance_to_top_speed(const KinematicsParams& p, double v0);

/// Time and distance needed to decelerate from v0 to rest.
double time_to_stop(const KinematicsParams& p, double v0);
double stopping_distance(const KinematicsParams& p, double v0);

/// Distance of the virtual run that starts from rest and has reached v0 by the
/// beginning of the real distance d.
double effective_distance(const KinematicsParams& p, double v0, double d);

/// Length of the acceleration phase of a triangular profile that covers
/// d_prime from rest to rest.
double switch_time(const KinematicsParams& p, double d_prime);

enum class CruiseCase {
  stop_only,          ///< d within stopping distance: full stop, may overshoot
  cruise_then_stop,   ///< already at top speed
  trapezoid,          ///< accelerate, cruise at top speed, decelerate
  triangle,           ///< accelerate, decelerate; top speed never reached
};

CruiseCase classify_cruise(const KinematicsParams& p, double v0, double d);

/// Time to travel d meters starting at v0 and ending at rest.
double cruise_time(const KinematicsParams& p, double v0, double d);

enum class Phase { accelerating, decelerating, cruising };

/// Speed and position delta after t seconds in a single phase. Speed is
/// clamped to [0, top_speed]; past the clamp instant the position continues
/// at the clamped speed.
double speed_after(const KinematicsParams& p, double v0, double t, Phase phase);
double position_after(const KinematicsParams& p, double v0, double t, Phase phase);

/// On-the-spot rotation time for a shortest rotation delta in [0, pi].
double turn_time(const KinematicsParams& p, double delta_angle);

/// Shortest absolute angular difference between two headings, in [0, pi].
double heading_delta(double from, double to);

/// Normalizes an angle into [0, 2pi).
double normalize_heading(double angle);

struct Segment {
  double duration = 0.0;
  double initial_speed = 0.0;
  double acceleration = 0.0;  ///< signed

  [[nodiscard]] double final_speed() const { return initial_speed + acceleration * duration; }
  [[nodiscard]] double distance() const {
    return initial_speed * duration + 0.5 * acceleration * duration * duration;
  }
};

/// Piecewise constant-acceleration profile of one straight cruise.
struct MotionProfile {
  double start_time = 0.0;
  std::vector<Segment> segments;
  double total_distance = 0.0;
  double total_time = 0.0;

  /// Distance covered and speed at elapsed time t (clamped to the profile).
  [[nodiscard]] double distance_at(double t) const;
  [[nodiscard]] double speed_at(double t) const;
};

MotionProfile motion_profile(const KinematicsParams& p, double v0, double d);

}  // namespace rmfs::kinematics

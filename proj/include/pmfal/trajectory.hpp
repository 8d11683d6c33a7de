#pragma once

#include <vector>

#include "pmfal/params.hpp"

namespace pmfal {

/// Rapid-positioning trajectory: per waypoint one cubic moving phase and one
/// dwell; the platform rotation is held at zero throughout.
struct TrajectorySpec {
  std::vector<Vec2> waypoints;  // first entry is the start (trivial move)
  double move_time = 1.0;
  double dwell_time = 3.0;

  /// O, A, B, C, D five-point pattern, 20 s total.
  static TrajectorySpec five_point();

  double total_time() const {
    return waypoints.size() * (move_time + dwell_time);
  }
};

class Trajectory {
 public:
  explicit Trajectory(TrajectorySpec spec);

  const TrajectorySpec& spec() const { return spec_; }
  double total_time() const { return spec_.total_time(); }

  /// Desired pose, rate, and acceleration at time t (clamped to the end).
  void eval(double t, Vec3& q, Vec3& q_dot, Vec3& q_ddot) const;
  PlatformPose pose(double t) const;

 private:
  TrajectorySpec spec_;
};

}  // namespace pmfal

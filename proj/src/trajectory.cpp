#include "pmfal/trajectory.hpp"

#include <algorithm>
#include <cmath>

namespace pmfal {

TrajectorySpec TrajectorySpec::five_point() {
  TrajectorySpec spec;
  spec.waypoints = {{0.0, 0.0}, {0.1, 0.0}, {0.1, 0.1}, {-0.1, 0.1}, {-0.1, -0.1}};
  return spec;
}

Trajectory::Trajectory(TrajectorySpec spec) : spec_(std::move(spec)) {
  if (spec_.waypoints.empty()) throw ValidationError("trajectory needs waypoints");
  if (spec_.move_time <= 0 || spec_.dwell_time < 0)
    throw ValidationError("trajectory phase durations invalid");
}

void Trajectory::eval(double t, Vec3& q, Vec3& q_dot, Vec3& q_ddot) const {
  const double phase_len = spec_.move_time + spec_.dwell_time;
  const int nseg = static_cast<int>(spec_.waypoints.size());
  q_dot.setZero();
  q_ddot.setZero();
  q[2] = 0.0;

  t = std::clamp(t, 0.0, total_time());
  int seg = std::min(static_cast<int>(t / phase_len), nseg - 1);
  const double tl = t - seg * phase_len;
  const Vec2 from = spec_.waypoints[seg == 0 ? 0 : seg - 1];
  const Vec2 to = spec_.waypoints[seg];
  if (tl >= spec_.move_time) {
    q.head<2>() = to;
    return;
  }
  const double T = spec_.move_time;
  const double s = tl / T;
  const Vec2 d = to - from;
  q.head<2>() = from + d * s * s * (3.0 - 2.0 * s);
  q_dot.head<2>() = d * 6.0 * s * (1.0 - s) / T;
  q_ddot.head<2>() = d * 6.0 * (1.0 - 2.0 * s) / (T * T);
}

PlatformPose Trajectory::pose(double t) const {
  Vec3 q, qd, qdd;
  eval(t, q, qd, qdd);
  return PlatformPose{q[0], q[1], q[2]};
}

}  // namespace pmfal

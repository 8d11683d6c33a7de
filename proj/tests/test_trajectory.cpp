#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "pmfal/trajectory.hpp"

using namespace pmfal;

TEST_CASE("five point pattern visits the corners and lasts 20 s") {
  const TrajectorySpec spec = TrajectorySpec::five_point();
  REQUIRE(spec.waypoints.size() == 5);
  CHECK(spec.total_time() == doctest::Approx(20.0));
  const Trajectory traj(spec);

  // End of each move phase sits exactly on the waypoint and holds there.
  for (size_t k = 0; k < spec.waypoints.size(); ++k) {
    const double t_arrive = k * (spec.move_time + spec.dwell_time) +
                            (k == 0 ? 0.0 : spec.move_time);
    for (double dt : {0.0, 0.5, 2.9}) {
      Vec3 q, qd, qdd;
      traj.eval(t_arrive + dt + (k == 0 ? 0.0 : spec.dwell_time * 0.0), q, qd,
                qdd);
      // During dwell: position pinned, rates and accel zero.
      if (dt > 0.0 || k == 0) {
        CHECK(q[0] == doctest::Approx(spec.waypoints[k][0]).epsilon(1e-12));
        CHECK(q[1] == doctest::Approx(spec.waypoints[k][1]).epsilon(1e-12));
        CHECK(qd.cwiseAbs().maxCoeff() < 1e-12);
        CHECK(qdd.cwiseAbs().maxCoeff() < 1e-12);
      }
      CHECK(q[2] == 0.0);  // platform rotation held at zero
    }
  }
}

TEST_CASE("cubic move phase has the analytic midpoint profile") {
  TrajectorySpec spec;
  spec.waypoints = {{0.0, 0.0}, {0.12, -0.08}};
  spec.move_time = 1.4;
  spec.dwell_time = 2.0;
  const Trajectory traj(spec);
  const double T = spec.move_time;
  const Vec2 dp(0.12, -0.08);

  // Second segment starts after the first (trivial) move+dwell block.
  const double t0 = spec.move_time + spec.dwell_time;
  for (double s : {0.25, 0.5, 0.75}) {
    Vec3 q, qd, qdd;
    traj.eval(t0 + s * T, q, qd, qdd);
    for (int i = 0; i < 2; ++i) {
      // Cubic with zero boundary rates: p(s) = p0 + dp (3s^2 - 2s^3).
      CHECK(q[i] == doctest::Approx(dp[i] * (3 * s * s - 2 * s * s * s))
                        .epsilon(1e-12));
      CHECK(qd[i] ==
            doctest::Approx(dp[i] * 6.0 * s * (1.0 - s) / T).epsilon(1e-12));
      CHECK(qdd[i] == doctest::Approx(dp[i] * 6.0 * (1.0 - 2.0 * s) / (T * T))
                          .epsilon(1e-10));
    }
  }
  // Peak velocity at midpoint: 3 dp / (2T).
  Vec3 q, qd, qdd;
  traj.eval(t0 + 0.5 * T, q, qd, qdd);
  CHECK(qd[0] == doctest::Approx(1.5 * dp[0] / T).epsilon(1e-12));
}

TEST_CASE("position and velocity are continuous across phase boundaries") {
  const Trajectory traj(TrajectorySpec::five_point());
  const double h = 1e-9;
  for (double tb : {1.0, 4.0, 5.0, 8.0, 9.0, 12.0, 13.0, 16.0, 17.0}) {
    Vec3 qm, qdm, x, qp, qdp;
    Vec3 scratch;
    traj.eval(tb - h, qm, qdm, scratch);
    traj.eval(tb + h, qp, qdp, scratch);
    CHECK((qp - qm).cwiseAbs().maxCoeff() < 1e-6);
    CHECK((qdp - qdm).cwiseAbs().maxCoeff() < 1e-5);
  }
}

TEST_CASE("evaluation clamps beyond the final dwell") {
  const TrajectorySpec spec = TrajectorySpec::five_point();
  const Trajectory traj(spec);
  Vec3 q, qd, qdd;
  traj.eval(spec.total_time() + 5.0, q, qd, qdd);
  CHECK(q[0] == doctest::Approx(spec.waypoints.back()[0]).epsilon(1e-12));
  CHECK(q[1] == doctest::Approx(spec.waypoints.back()[1]).epsilon(1e-12));
  CHECK(qd.cwiseAbs().maxCoeff() == 0.0);
  CHECK(qdd.cwiseAbs().maxCoeff() == 0.0);

  const PlatformPose p = traj.pose(-1.0);  // before the start clamps too
  CHECK(p.x == doctest::Approx(spec.waypoints.front()[0]).epsilon(1e-12));
  CHECK(p.y == doctest::Approx(spec.waypoints.front()[1]).epsilon(1e-12));
}

TEST_CASE("velocity integrates to the displacement") {
  TrajectorySpec spec;
  spec.waypoints = {{0.0, 0.0}, {0.1, 0.1}};
  spec.move_time = 1.0;
  spec.dwell_time = 1.0;
  const Trajectory traj(spec);
  const double t0 = 2.0, T = 1.0;
  const int N = 20000;
  double acc = 0.0;
  for (int k = 0; k < N; ++k) {
    Vec3 q, qd, qdd;
    traj.eval(t0 + (k + 0.5) * T / N, q, qd, qdd);
    acc += qd[0] * T / N;
  }
  CHECK(acc == doctest::Approx(0.1).epsilon(1e-6));
}

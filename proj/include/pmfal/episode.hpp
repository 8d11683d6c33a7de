#pragma once

#include <string>
#include <vector>

#include "pmfal/control.hpp"
#include "pmfal/observer.hpp"
#include "pmfal/trajectory.hpp"

namespace pmfal {

struct EpisodeConfig {
  ControlLawConfig control;
  int n_plant = 5;
  BoundaryCondition plant_bc = BoundaryCondition::ClampedFree;
  double plant_dt = 1e-4;
  double plant_damping = 2e-4;  // truth-plant damping ratio at the first band
  unsigned seed = 1;
  bool use_observer = true;   // false: feed back plant-truth pose
  bool ideal_rates = false;   // exact rate feedback (idealized-loop studies)
  double rate_cutoff_hz = 100.0;
  double pd_rate_cutoff_hz = 15.7;  // joint-rate filter for the PD baseline
  int deformation_samples = 9;  // strain-gauge stations per link
};

struct EpisodeRow {
  double t;
  Vec3 desired;   // x, y, theta
  Vec3 observed;  // controller's pose view
  Vec3 truth;
  Vec3 tip;       // true end-point deformation per link
  Vec3 tau;
  Vec3 q_a_dot;   // true joint rates (for the energy metric)
  double V;
};

struct EpisodeLog {
  std::vector<EpisodeRow> rows;
  double control_dt = 1e-3;
  bool completed = true;
  std::string failure;
};

struct EpisodeMetrics {
  Vec3 mae = Vec3::Zero();           // whole-episode |error| mean per axis
  Vec3 mae_stab = Vec3::Zero();      // dwell-phase only
  Vec3 tip_rms_stab = Vec3::Zero();  // dwell deformation RMS per link
  Vec3 tau_peak = Vec3::Zero();
  Vec3 energy = Vec3::Zero();        // int |tau_i qdot_a_i| dt per joint
  double total_energy() const { return energy.sum(); }
  double lyapunov_final = 0.0;
  bool stable = true;  // bounded rows, V decaying across each dwell
};

EpisodeLog run_episode(const MechanismParams& p, const Trajectory& traj,
                       const EpisodeConfig& cfg, const ObserverNet* net);

EpisodeMetrics compute_metrics(const EpisodeLog& log, const Trajectory& traj);

void write_episode_csv(const std::string& path, const EpisodeLog& log);

struct ModelVariantResult {
  CompensationModel model;
  EpisodeMetrics metrics;
  EpisodeLog log;
};

/// Runs the same truth plant under the computed-torque controller, once per
/// compensation-model variant.
std::vector<ModelVariantResult> compare_models(
    const MechanismParams& p, const Trajectory& traj, const EpisodeConfig& base,
    const ObserverNet* net,
    const std::vector<CompensationModel>& variants = {
        CompensationModel::Developed, CompensationModel::Rigid,
        CompensationModel::ClampedPinned});

struct RateSweepPoint {
  double rate_hz;
  EpisodeMetrics metrics;
};

std::vector<RateSweepPoint> sweep_observer_rate(
    const MechanismParams& p, const Trajectory& traj, const EpisodeConfig& base,
    const ObserverNet* net,
    const std::vector<double>& rates = {1000, 500, 200, 100, 50});

/// Per-figure data files + summary.txt in out_dir.
void emit_case_report(const std::string& out_dir, const EpisodeLog& proposed,
                      const EpisodeMetrics& proposed_m, const EpisodeLog& pd,
                      const EpisodeMetrics& pd_m);
void emit_model_report(const std::string& out_dir,
                       const std::vector<ModelVariantResult>& results);
void emit_sweep_report(const std::string& out_dir,
                       const std::vector<RateSweepPoint>& points);

}  // namespace pmfal

#include "pmfal/episode.hpp"

#include "pmfal/identification.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

namespace pmfal {

namespace {

ModalBasis make_ctrl_basis(const MechanismParams& p, CompensationModel model,
                           int n_ctrl) {
  switch (model) {
    case CompensationModel::Developed:
      return ModalBasis(BoundaryCondition::ClampedFree, p.l1, n_ctrl);
    case CompensationModel::Rigid:
      return ModalBasis::rigid(p.l1);
    case CompensationModel::ClampedPinned:
      return ModalBasis(BoundaryCondition::ClampedPinned, p.l1, n_ctrl);
  }
  throw ValidationError("unknown compensation model");
}

// First-order low-pass on a backward difference, matching RateEstimator.
struct VecRateFilter {
  double dt, alpha;
  Eigen::VectorXd prev, rates;
  int count = 0;

  VecRateFilter(double dt_, double cutoff_hz, int dim) : dt(dt_) {
    alpha = cutoff_hz <= 0 ? 1.0
                           : dt / (dt + 1.0 / (2.0 * M_PI * cutoff_hz));
    prev = Eigen::VectorXd::Zero(dim);
    rates = Eigen::VectorXd::Zero(dim);
  }
  Eigen::VectorXd update(const Eigen::VectorXd& v) {
    if (count == 0) {
      prev = v;
      ++count;
      return rates;
    }
    const Eigen::VectorXd raw = (v - prev) / dt;
    prev = v;
    if (count == 1)
      rates = raw;
    else
      rates += alpha * (raw - rates);
    ++count;
    return rates;
  }
};

}  // namespace

EpisodeLog run_episode(const MechanismParams& p, const Trajectory& traj,
                       const EpisodeConfig& cfg, const ObserverNet* net) {
  cfg.control.validate();
  const ModalBasis plant_basis(cfg.plant_bc, p.l1, cfg.n_plant);
  PlantOptions popts;
  popts.dt = cfg.plant_dt;
  popts.modal_damping = cfg.plant_damping;
  popts.track_energy = false;
  const Plant plant(p, plant_basis, popts);

  const ModalBasis ctrl_basis = make_ctrl_basis(p, cfg.control.model,
                                                cfg.control.n_ctrl);
  const ModalBasis rigid_basis = ModalBasis::rigid(p.l1);
  const int nc = ctrl_basis.n();
  const int nfc = 3 * nc;

  // Least-squares map from deformation-station samples to the compensation
  // model's modal coordinates (the strain system stands behind this).
  const Eigen::VectorXd pts = uniform_sample_points(p.l1, cfg.deformation_samples);
  Eigen::MatrixXd proj;  // nc x stations
  if (nc > 0) {
    Eigen::MatrixXd Phi(pts.size(), nc);
    for (int k = 0; k < pts.size(); ++k)
      for (int j = 1; j <= nc; ++j) Phi(k, j - 1) = ctrl_basis.eval_phi(j, pts[k]);
    proj = (Phi.transpose() * Phi).ldlt().solve(Phi.transpose());
  }

  const double control_dt = 1.0 / cfg.control.control_rate;
  const int spt = std::max(1, (int)std::round(control_dt / cfg.plant_dt));
  const int obs_every =
      std::max(1, (int)std::round(cfg.control.control_rate / cfg.control.observer_rate));
  const int ticks = (int)std::round(traj.total_time() * cfg.control.control_rate);
  const double obs_dt = control_dt * obs_every;

  EpisodeLog log;
  log.control_dt = control_dt;
  log.rows.reserve(ticks);

  PlantState st = plant.init_state(traj.pose(0.0), Eigen::VectorXd::Zero(3 * cfg.n_plant),
                                   Vec3::Zero(), Eigen::VectorXd::Zero(3 * cfg.n_plant));
  const Eigen::VectorXd tau_f = Eigen::VectorXd::Zero(3 * cfg.n_plant);

  RateEstimator pose_rate(obs_dt, cfg.rate_cutoff_hz);
  VecRateFilter qf_rate(obs_dt, cfg.rate_cutoff_hz, nfc);
  // Low-pass on the fed-back joint rates: the elastic bands of the closed
  // chain reach the control loop's Nyquist frequency, and feeding raw rate
  // content there back through the ZOH pumps it.
  const double lp_alpha =
      cfg.pd_rate_cutoff_hz <= 0
          ? 1.0
          : obs_dt / (obs_dt + 1.0 / (2.0 * M_PI * cfg.pd_rate_cutoff_hz));
  bool lp_init = false;
  Vec3 qadot_lp = Vec3::Zero();
  Vec3 qa_lp = Vec3::Zero();

  Vec3 pose_hat = Vec3::Zero(), rates_hat = Vec3::Zero();
  Eigen::VectorXd qf_hat = Eigen::VectorXd::Zero(nfc);
  Eigen::VectorXd qf_rate_hat = Eigen::VectorXd::Zero(nfc);

  for (int tick = 0; tick < ticks; ++tick) {
    const double t = tick * control_dt;

    // Truth-side signals available every tick: joint angles/rates and the
    // end-point deformations.
    Vec3 tip;
    Eigen::VectorXd stations(3 * pts.size());
    for (int i = 0; i < 3; ++i) {
      const Eigen::VectorXd qf_i = st.s.link_qf(i);
      tip[i] = plant_basis.deformation_field(qf_i, p.l1);
      for (int k = 0; k < pts.size(); ++k)
        stations[i * pts.size() + k] = plant_basis.deformation_field(qf_i, pts[k]);
    }
    Vec3 q_a_dot_true;
    try {
      const Jacobians pjac = jacobians(p, plant_basis, st.s);
      q_a_dot_true = pjac.J_ax * st.s.pose_rates + pjac.J_af * st.s.q_f_dot;
    } catch (const std::exception& e) {
      log.completed = false;
      log.failure = std::string("plant singular at t=") + std::to_string(t) +
                    ": " + e.what();
      break;
    }

    if (tick % obs_every == 0) {
      if (cfg.use_observer && net) {
        Eigen::VectorXd input(6);
        input << st.s.ik.q_a[0], st.s.ik.q_a[1], st.s.ik.q_a[2], tip[0], tip[1],
            tip[2];
        pose_hat = net->predict(input);
      } else {
        pose_hat = st.s.pose.vec();
      }
      rates_hat = cfg.ideal_rates
                      ? Vec3(st.s.pose_rates)
                      : pose_rate.update(PlatformPose::from_vec(pose_hat));
      if (nc > 0) {
        for (int i = 0; i < 3; ++i)
          qf_hat.segment(i * nc, nc) = proj * stations.segment(i * pts.size(), pts.size());
        if (cfg.ideal_rates) {
          Eigen::VectorXd stations_dot(pts.size());
          for (int i = 0; i < 3; ++i) {
            for (int k = 0; k < pts.size(); ++k)
              stations_dot[k] =
                  plant_basis.deformation_field(st.s.link_qf_dot(i), pts[k]);
            qf_rate_hat.segment(i * nc, nc) = proj * stations_dot;
          }
        } else {
          qf_rate_hat = qf_rate.update(qf_hat);
        }
      }
      if (!lp_init) {
        qadot_lp = q_a_dot_true;
        qa_lp = st.s.ik.q_a;
      } else {
        qadot_lp += lp_alpha * (q_a_dot_true - qadot_lp);
        qa_lp += lp_alpha * (st.s.ik.q_a - qa_lp);
      }
      lp_init = true;
    }

    Vec3 qd, qd_dot, qd_ddot;
    traj.eval(t, qd, qd_dot, qd_ddot);

    TrackingError err;
    err.e.resize(3 + nfc);
    err.e_dot.resize(3 + nfc);
    err.e.head<3>() = qd - pose_hat;
    err.e.tail(nfc) = -qf_hat;
    err.e_dot.head<3>() = qd_dot - rates_hat;
    err.e_dot.tail(nfc) = -qf_rate_hat;

    Vec3 tau = Vec3::Zero();
    try {
      if (cfg.control.kind == ControlKind::JointPD) {
        const IkSolution des =
            inverse_kinematics(p, rigid_basis, PlatformPose{qd[0], qd[1], qd[2]},
                               Eigen::VectorXd::Zero(0));
        tau = joint_pd(des.q_a, st.s.ik.q_a, qadot_lp, cfg.control.Kp,
                       cfg.control.Kd);
      } else {
        const GeneralizedState cs =
            make_state(p, ctrl_basis, PlatformPose::from_vec(pose_hat), qf_hat,
                       rates_hat, qf_rate_hat);
        const Jacobians cjac = jacobians(p, ctrl_basis, cs);
        const EomMatrices eom = assemble_eom(p, ctrl_basis, cs, cjac);
        Eigen::VectorXd q_dot_hat(3 + nfc);
        q_dot_hat.head<3>() = rates_hat;
        q_dot_hat.tail(nfc) = qf_rate_hat;
        tau = computed_torque_actuated(eom, cjac.J_ax, err, q_dot_hat, qd_ddot,
                                       cfg.control);
      }
    } catch (const std::exception& e) {
      log.rows.push_back({t, qd, pose_hat, st.s.pose.vec(), tip, Vec3::Zero(),
                          q_a_dot_true, lyapunov_value(err, cfg.control.Kp)});
      log.completed = false;
      log.failure = std::string("controller fail-safe at t=") +
                    std::to_string(t) + ": " + e.what();
      break;
    }

    log.rows.push_back({t, qd, pose_hat, st.s.pose.vec(), tip, tau, q_a_dot_true,
                        lyapunov_value(err, cfg.control.Kp)});

    try {
      for (int k = 0; k < spt; ++k) plant.step(st, tau, tau_f);
    } catch (const std::exception& e) {
      log.completed = false;
      log.failure = std::string("plant failure at t=") + std::to_string(t) +
                    ": " + e.what();
      break;
    }
    if (!st.s.q().allFinite() || !st.s.q_dot().allFinite()) {
      log.completed = false;
      log.failure = "plant state diverged (non-finite) at t=" + std::to_string(t);
      break;
    }
  }
  return log;
}

EpisodeMetrics compute_metrics(const EpisodeLog& log, const Trajectory& traj) {
  EpisodeMetrics m;
  if (log.rows.empty()) {
    m.stable = false;
    return m;
  }
  const double phase = traj.spec().move_time + traj.spec().dwell_time;
  const double move = traj.spec().move_time;

  Vec3 abs_sum = Vec3::Zero(), abs_sum_stab = Vec3::Zero();
  Vec3 tip_sq_stab = Vec3::Zero();
  long count = 0, count_stab = 0;
  // V decay is judged on windowed means (first vs last tenth of each dwell):
  // single-sample comparisons alias the residual oscillation and the
  // observer's bias floor.
  std::vector<double> dwell_V;
  auto check_dwell = [&]() {
    const size_t w = std::max<size_t>(1, dwell_V.size() / 10);
    double head = 0.0, tail = 0.0;
    for (size_t j = 0; j < w; ++j) {
      head += dwell_V[j];
      tail += dwell_V[dwell_V.size() - 1 - j];
    }
    if (tail > 1.05 * head + 1e-9 * w) m.stable = false;
    dwell_V.clear();
  };
  bool in_dwell_prev = false;

  for (size_t k = 0; k < log.rows.size(); ++k) {
    const EpisodeRow& r = log.rows[k];
    const Vec3 err = (r.desired - r.truth).cwiseAbs();
    abs_sum += err;
    ++count;
    const double tl = std::fmod(r.t, phase);
    const bool in_dwell = tl >= move;
    if (in_dwell) {
      abs_sum_stab += err;
      tip_sq_stab += r.tip.cwiseProduct(r.tip);
      ++count_stab;
      dwell_V.push_back(r.V);
    } else if (in_dwell_prev) {
      check_dwell();
    }
    in_dwell_prev = in_dwell;

    m.tau_peak = m.tau_peak.cwiseMax(r.tau.cwiseAbs());
    if (k > 0) {
      const EpisodeRow& prev = log.rows[k - 1];
      const double dt = r.t - prev.t;
      for (int i = 0; i < 3; ++i)
        m.energy[i] += 0.5 * dt *
                       (std::abs(r.tau[i] * r.q_a_dot[i]) +
                        std::abs(prev.tau[i] * prev.q_a_dot[i]));
    }
    if (!r.truth.allFinite() || !std::isfinite(r.V)) m.stable = false;
  }
  if (in_dwell_prev && !dwell_V.empty()) check_dwell();

  m.mae = abs_sum / std::max<long>(1, count);
  m.mae_stab = abs_sum_stab / std::max<long>(1, count_stab);
  m.tip_rms_stab = (tip_sq_stab / std::max<long>(1, count_stab)).cwiseSqrt();
  m.lyapunov_final = log.rows.back().V;
  if (!log.completed) m.stable = false;
  return m;
}

void write_episode_csv(const std::string& path, const EpisodeLog& log) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot open " + path + " for writing");
  out << "t,x_d,y_d,theta_d,x_obs,y_obs,theta_obs,x,y,theta,"
         "w1_tip,w2_tip,w3_tip,tau1,tau2,tau3,V\n";
  out.precision(12);
  for (const auto& r : log.rows) {
    out << r.t;
    for (int i = 0; i < 3; ++i) out << "," << r.desired[i];
    for (int i = 0; i < 3; ++i) out << "," << r.observed[i];
    for (int i = 0; i < 3; ++i) out << "," << r.truth[i];
    for (int i = 0; i < 3; ++i) out << "," << r.tip[i];
    for (int i = 0; i < 3; ++i) out << "," << r.tau[i];
    out << "," << r.V << "\n";
  }
}

std::vector<ModelVariantResult> compare_models(
    const MechanismParams& p, const Trajectory& traj, const EpisodeConfig& base,
    const ObserverNet* net, const std::vector<CompensationModel>& variants) {
  std::vector<ModelVariantResult> out;
  for (CompensationModel model : variants) {
    EpisodeConfig cfg = base;
    cfg.control.kind = ControlKind::ComputedTorque;
    cfg.control.model = model;
    ModelVariantResult res;
    res.model = model;
    res.log = run_episode(p, traj, cfg, net);
    res.metrics = compute_metrics(res.log, traj);
    out.push_back(std::move(res));
  }
  return out;
}

std::vector<RateSweepPoint> sweep_observer_rate(
    const MechanismParams& p, const Trajectory& traj, const EpisodeConfig& base,
    const ObserverNet* net, const std::vector<double>& rates) {
  std::vector<RateSweepPoint> out;
  for (double rate : rates) {
    EpisodeConfig cfg = base;
    cfg.control.observer_rate = rate;
    const EpisodeLog log = run_episode(p, traj, cfg, net);
    out.push_back({rate, compute_metrics(log, traj)});
  }
  return out;
}

namespace {

std::ofstream open_report(const std::string& out_dir, const std::string& name) {
  std::filesystem::create_directories(out_dir);
  const std::string path = out_dir + "/" + name;
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot open " + path + " for writing");
  out.precision(12);
  return out;
}

}  // namespace

void emit_case_report(const std::string& out_dir, const EpisodeLog& proposed,
                      const EpisodeMetrics& pm, const EpisodeLog& pd,
                      const EpisodeMetrics& pdm) {
  {
    auto out = open_report(out_dir, "fig7_tracking.csv");
    out << "t,ex_proposed,ey_proposed,etheta_proposed,ex_pd,ey_pd,etheta_pd\n";
    const size_t nrow = std::min(proposed.rows.size(), pd.rows.size());
    for (size_t k = 0; k < nrow; ++k) {
      const Vec3 ep = proposed.rows[k].desired - proposed.rows[k].truth;
      const Vec3 eb = pd.rows[k].desired - pd.rows[k].truth;
      out << proposed.rows[k].t << "," << ep[0] << "," << ep[1] << "," << ep[2]
          << "," << eb[0] << "," << eb[1] << "," << eb[2] << "\n";
    }
  }
  {
    auto out = open_report(out_dir, "fig8_deformation.csv");
    out << "t,w1_proposed,w2_proposed,w3_proposed,w1_pd,w2_pd,w3_pd\n";
    const size_t nrow = std::min(proposed.rows.size(), pd.rows.size());
    for (size_t k = 0; k < nrow; ++k) {
      out << proposed.rows[k].t;
      for (int i = 0; i < 3; ++i) out << "," << proposed.rows[k].tip[i];
      for (int i = 0; i < 3; ++i) out << "," << pd.rows[k].tip[i];
      out << "\n";
    }
  }
  {
    auto out = open_report(out_dir, "fig9_torque.csv");
    out << "controller,tau1_peak,tau2_peak,tau3_peak,energy1,energy2,energy3,"
           "energy_total\n";
    auto line = [&](const char* name, const EpisodeMetrics& m) {
      out << name;
      for (int i = 0; i < 3; ++i) out << "," << m.tau_peak[i];
      for (int i = 0; i < 3; ++i) out << "," << m.energy[i];
      out << "," << m.total_energy() << "\n";
    };
    line("proposed", pm);
    line("joint_pd", pdm);
  }
  write_episode_csv(out_dir + "/episode_proposed.csv", proposed);
  write_episode_csv(out_dir + "/episode_joint_pd.csv", pd);
  {
    auto out = open_report(out_dir, "summary.txt");
    auto block = [&](const char* name, const EpisodeMetrics& m,
                     const EpisodeLog& log) {
      out << name << ":\n"
          << "  completed: " << (log.completed ? "yes" : "no") << "\n"
          << "  pose MAE (m, m, rad): " << m.mae.transpose() << "\n"
          << "  dwell pose MAE: " << m.mae_stab.transpose() << "\n"
          << "  dwell tip RMS (m): " << m.tip_rms_stab.transpose() << "\n"
          << "  torque peak (N m): " << m.tau_peak.transpose() << "\n"
          << "  actuator energy (J): " << m.energy.transpose() << " (total "
          << m.total_energy() << ")\n";
      if (!log.completed) out << "  failure: " << log.failure << "\n";
    };
    block("proposed", pm, proposed);
    block("joint_pd", pdm, pd);
  }
}

void emit_model_report(const std::string& out_dir,
                       const std::vector<ModelVariantResult>& results) {
  auto out = open_report(out_dir, "fig11_model_comparison.csv");
  out << "model,mae_x,mae_y,mae_theta,dwell_tip_rms1,dwell_tip_rms2,"
         "dwell_tip_rms3,stable\n";
  for (const auto& r : results) {
    out << to_string(r.model);
    for (int i = 0; i < 3; ++i) out << "," << r.metrics.mae_stab[i];
    for (int i = 0; i < 3; ++i) out << "," << r.metrics.tip_rms_stab[i];
    out << "," << (r.metrics.stable ? 1 : 0) << "\n";
  }
  for (const auto& r : results)
    write_episode_csv(out_dir + "/episode_" + to_string(r.model) + ".csv", r.log);
}

void emit_sweep_report(const std::string& out_dir,
                       const std::vector<RateSweepPoint>& points) {
  auto f12 = open_report(out_dir, "fig12_mae.csv");
  f12 << "rate_hz,mae_x,mae_y,mae_theta,stable\n";
  auto f13 = open_report(out_dir, "fig13_deformation.csv");
  f13 << "rate_hz,dwell_tip_rms1,dwell_tip_rms2,dwell_tip_rms3\n";
  for (const auto& pt : points) {
    f12 << pt.rate_hz;
    for (int i = 0; i < 3; ++i) f12 << "," << pt.metrics.mae[i];
    f12 << "," << (pt.metrics.stable ? 1 : 0) << "\n";
    f13 << pt.rate_hz;
    for (int i = 0; i < 3; ++i) f13 << "," << pt.metrics.tip_rms_stab[i];
    f13 << "\n";
  }
}

}  // namespace pmfal

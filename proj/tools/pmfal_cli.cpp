#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pmfal/episode.hpp"
#include "pmfal/identification.hpp"
#include "pmfal/observer.hpp"

namespace fs = std::filesystem;
using namespace pmfal;

namespace {

struct GlobalOpts {
  std::string config;
  unsigned seed = 1;
  std::string out = "out";
};

MechanismParams resolve_params(const GlobalOpts& g) {
  if (!g.config.empty()) return load_params_file(g.config);
  return reference_params();
}

void ensure_out(const GlobalOpts& g) { fs::create_directories(g.out); }

ObserverNet* maybe_load_net(const std::string& path, ObserverNet& storage) {
  if (path.empty()) return nullptr;
  storage = ObserverNet::load(path);
  return &storage;
}

int run_simulate(const GlobalOpts& g, double duration, int n,
                 const std::string& bc_name, double tip0, double damping) {
  MechanismParams p = resolve_params(g);
  ModalBasis basis(boundary_condition_from_string(bc_name), p.l1, n);
  PlantOptions opts;
  opts.modal_damping = damping;
  Plant plant(p, std::move(basis), opts);

  Eigen::VectorXd q_f = Eigen::VectorXd::Zero(3 * n);
  if (n > 0 && tip0 != 0.0)
    for (int i = 0; i < 3; ++i)
      q_f[i * n] = tip0 / plant.basis().phi_tip(1);
  PlantState st = plant.init_state(PlatformPose{}, q_f, Vec3::Zero(),
                                   Eigen::VectorXd::Zero(3 * n));

  ensure_out(g);
  std::ofstream csv(fs::path(g.out) / "simulate.csv");
  csv << "t,x,y,theta,w1_tip,w2_tip,w3_tip,energy\n";
  csv.precision(12);
  const int steps = static_cast<int>(std::round(duration / plant.options().dt));
  const Eigen::VectorXd tau_f = Eigen::VectorXd::Zero(3 * n);
  for (int k = 0; k <= steps; ++k) {
    csv << st.t << "," << st.s.pose.x << "," << st.s.pose.y << ","
        << st.s.pose.theta;
    for (int i = 0; i < 3; ++i)
      csv << ","
          << (n > 0 ? plant.basis().deformation_field(st.s.link_qf(i), p.l1)
                    : 0.0);
    csv << "," << st.kinetic + st.potential << "\n";
    if (k < steps) plant.step(st, Vec3::Zero(), tau_f);
  }
  std::cout << "wrote " << (fs::path(g.out) / "simulate.csv").string() << "\n";
  return 0;
}

int run_identify(const GlobalOpts& g, int n_plant, double damping) {
  MechanismParams p = resolve_params(g);
  PlantOptions opts;
  opts.modal_damping = damping;
  opts.track_energy = false;
  Plant plant(p, ModalBasis(BoundaryCondition::ClampedFree, p.l1, n_plant),
              opts);

  ensure_out(g);
  ExcitationSpec spec;
  SnapshotMatrix snaps = collect_snapshots(
      plant, spec, 0, (fs::path(g.out) / "snapshots.csv").string());
  DmdResult dm = dmd(snaps);
  CandidateLibrary lib = build_full_library(p.l1, snaps.sample_points);
  SindyResult si = sindy_select(dm.dominant_mode, lib);
  auto selected = select_mode_shape(si, lib);

  std::ofstream rep(fs::path(g.out) / "identification.txt");
  rep << "selected: " << to_string(selected.first) << " order "
      << selected.second << "\n";
  rep << "dmd rank: " << dm.rank << "  residual: " << dm.residual << "\n";
  rep << "dominant frequency [Hz]: " << dm.frequencies_hz[0] << "\n";
  rep << "lambda: " << si.lambda << "  fit residual: " << si.residual << "\n";
  rep << "active terms:\n";
  for (int col : si.active)
    rep << "  " << lib.label_name(col) << "  " << si.Xi[col] << "\n";
  std::cout << "selected mode: " << to_string(selected.first) << " order "
            << selected.second << "\n";
  return 0;
}

int run_gen_data(const GlobalOpts& g, int count) {
  MechanismParams p = resolve_params(g);
  ModalBasis basis(BoundaryCondition::ClampedFree, p.l1, 1);
  TrainingSet set =
      generate_training_set(p, basis, TrainingRanges{}, count, g.seed);
  ensure_out(g);
  const std::string path = (fs::path(g.out) / "training.csv").string();
  write_training_csv(path, set);
  std::cout << "wrote " << set.count() << " rows to " << path << "\n";
  return 0;
}

int run_train_observer(const GlobalOpts& g, const std::string& data_path,
                       const std::string& test_path, int epochs,
                       const std::string& model_out) {
  TrainingSet train_data = read_training_csv(data_path);
  TrainingSet test_data = test_path.empty() ? train_data
                                            : read_training_csv(test_path);
  ObserverNet net = ObserverNet::init(g.seed);
  net.set_normalization(train_data);
  TrainOptions opts;
  opts.epochs = epochs;
  opts.seed = g.seed;
  TrainReport rep = train(net, train_data, test_data, opts);
  ensure_out(g);
  const std::string path =
      model_out.empty() ? (fs::path(g.out) / "observer.net").string()
                        : model_out;
  net.save(path);
  std::cout << "final test mse (normalized): " << rep.final_test_mse << "\n";
  std::cout << "saved " << path << "\n";
  return 0;
}

int run_eval_observer(const GlobalOpts& g, const std::string& model_path,
                      const std::string& data_path, double max_mse) {
  ObserverNet net = ObserverNet::load(model_path);
  TrainingSet data = data_path.empty()
                         ? generate_training_set(
                               resolve_params(g),
                               ModalBasis(BoundaryCondition::ClampedFree,
                                          reference_params().l1, 1),
                               TrainingRanges{}, 2000, g.seed + 1)
                         : read_training_csv(data_path);
  const double mse = normalized_mse(net, data);
  std::cout << "normalized mse: " << mse << " over " << data.count()
            << " rows\n";
  if (max_mse > 0 && mse > max_mse) {
    std::cerr << "mse above threshold " << max_mse << "\n";
    return 3;
  }
  return 0;
}

EpisodeConfig base_episode_config(const GlobalOpts& g,
                                  const std::string& model_path) {
  EpisodeConfig cfg;
  cfg.seed = g.seed;
  cfg.use_observer = !model_path.empty();
  return cfg;
}

int run_case(const GlobalOpts& g, const std::string& model_path) {
  MechanismParams p = resolve_params(g);
  Trajectory traj(TrajectorySpec::five_point());
  ObserverNet net_storage;
  const ObserverNet* net = maybe_load_net(model_path, net_storage);

  EpisodeConfig cfg = base_episode_config(g, model_path);
  EpisodeLog proposed = run_episode(p, traj, cfg, net);
  EpisodeMetrics proposed_m = compute_metrics(proposed, traj);

  EpisodeConfig pd_cfg = cfg;
  pd_cfg.control.kind = ControlKind::JointPD;
  pd_cfg.control.Kd = 0.2;
  EpisodeLog pd = run_episode(p, traj, pd_cfg, net);
  EpisodeMetrics pd_m = compute_metrics(pd, traj);

  ensure_out(g);
  emit_case_report(g.out, proposed, proposed_m, pd, pd_m);
  std::cout << "proposed: dwell MAE " << proposed_m.mae_stab.transpose()
            << "  tip RMS " << proposed_m.tip_rms_stab.transpose() << "\n";
  std::cout << "joint PD: dwell MAE " << pd_m.mae_stab.transpose()
            << "  tip RMS " << pd_m.tip_rms_stab.transpose() << "\n";
  if (!proposed.completed) {
    std::cerr << "proposed-controller episode failed: " << proposed.failure
              << "\n";
    return 2;
  }
  return 0;
}

int run_compare_models(const GlobalOpts& g, const std::string& model_path) {
  MechanismParams p = resolve_params(g);
  Trajectory traj(TrajectorySpec::five_point());
  ObserverNet net_storage;
  const ObserverNet* net = maybe_load_net(model_path, net_storage);
  EpisodeConfig cfg = base_episode_config(g, model_path);
  auto results = compare_models(p, traj, cfg, net);
  ensure_out(g);
  emit_model_report(g.out, results);
  for (const auto& r : results)
    std::cout << to_string(r.model) << ": tip RMS "
              << r.metrics.tip_rms_stab.transpose() << "\n";
  return 0;
}

int run_sweep(const GlobalOpts& g, const std::string& model_path) {
  MechanismParams p = resolve_params(g);
  Trajectory traj(TrajectorySpec::five_point());
  ObserverNet net_storage;
  const ObserverNet* net = maybe_load_net(model_path, net_storage);
  EpisodeConfig cfg = base_episode_config(g, model_path);
  auto points = sweep_observer_rate(p, traj, cfg, net);
  ensure_out(g);
  emit_sweep_report(g.out, points);
  for (const auto& pt : points)
    std::cout << pt.rate_hz << " Hz: MAE " << pt.metrics.mae.transpose()
              << "  stable " << pt.metrics.stable << "\n";
  return 0;
}

int run_ik(const GlobalOpts& g, double x, double y, double theta,
           std::vector<double> tips) {
  MechanismParams p = resolve_params(g);
  ModalBasis basis(BoundaryCondition::ClampedFree, p.l1, 1);
  Eigen::VectorXd q_f = Eigen::VectorXd::Zero(3);
  if (!tips.empty()) {
    if (tips.size() != 3)
      throw ValidationError("expected exactly three tip deflections");
    for (int i = 0; i < 3; ++i) q_f[i] = tips[i] / basis.phi_tip(1);
  }
  IkSolution ik = inverse_kinematics(p, basis, PlatformPose{x, y, theta}, q_f);
  std::cout << "q_a1,q_a2,q_a3,q_p1,q_p2,q_p3\n";
  printf("%.12g,%.12g,%.12g,%.12g,%.12g,%.12g\n", ik.q_a[0], ik.q_a[1],
         ik.q_a[2], ik.q_p[0], ik.q_p[1], ik.q_p[2]);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"3-RRR flexible-link mechanism: simulation, identification, "
               "observer and control harness"};
  app.require_subcommand(1);

  GlobalOpts g;
  app.add_option("--config", g.config, "mechanism parameter file (INI)");
  app.add_option("--seed", g.seed, "RNG seed");
  app.add_option("--out", g.out, "output directory");
  app.fallthrough();

  auto* sim = app.add_subcommand("simulate", "free plant run, CSV log");
  double duration = 1.0, tip0 = 0.0, damping = 0.0;
  int n = 3;
  std::string bc = "clamped-free";
  sim->add_option("--duration", duration, "seconds");
  sim->add_option("--n", n, "modal truncation order");
  sim->add_option("--bc", bc, "mode-shape family");
  sim->add_option("--tip0", tip0, "initial tip deflection [m], all links");
  sim->add_option("--damping", damping, "modal damping ratio at mode 1");

  auto* ident = app.add_subcommand(
      "identify", "excitation maneuver, DMD + sparse regression report");
  int n_plant = 5;
  double ident_damping = 0.0;
  ident->add_option("--n-plant", n_plant, "truth-plant modal order");
  ident->add_option("--damping", ident_damping, "plant damping ratio");

  auto* gen = app.add_subcommand("gen-data", "observer training-set CSV");
  int count = 10000;
  gen->add_option("--count", count, "sample count");

  auto* tr = app.add_subcommand("train-observer", "fit the pose observer");
  std::string data_path, test_path, model_out;
  int epochs = 6000;
  tr->add_option("--data", data_path, "training CSV")->required();
  tr->add_option("--test", test_path, "held-out CSV");
  tr->add_option("--epochs", epochs, "training epochs");
  tr->add_option("--model", model_out, "model output path");

  auto* ev = app.add_subcommand("eval-observer", "observer accuracy check");
  std::string eval_model, eval_data;
  double max_mse = 0.0;
  ev->add_option("--model", eval_model, "model file")->required();
  ev->add_option("--data", eval_data, "evaluation CSV (default: resampled)");
  ev->add_option("--max-mse", max_mse, "fail (exit 3) above this MSE");

  auto* rc = app.add_subcommand("run-case",
                                "proposed controller vs joint-PD baseline");
  std::string case_model;
  rc->add_option("--model", case_model, "observer model (omit: true pose)");

  auto* cm = app.add_subcommand("compare-models",
                                "compensation-model comparison");
  std::string cm_model;
  cm->add_option("--model", cm_model, "observer model (omit: true pose)");

  auto* sw = app.add_subcommand("sweep-observer-rate",
                                "closed-loop observer-frequency sweep");
  std::string sw_model;
  sw->add_option("--model", sw_model, "observer model (omit: true pose)");

  auto* ik_cmd = app.add_subcommand("ik", "inverse-kinematics spot query");
  double x = 0.0, y = 0.0, theta = 0.0;
  std::vector<double> tips;
  ik_cmd->add_option("--x", x, "platform x [m]");
  ik_cmd->add_option("--y", y, "platform y [m]");
  ik_cmd->add_option("--theta", theta, "platform rotation [rad]");
  ik_cmd->add_option("--tip", tips, "tip deflections [m] (three values)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) return run_simulate(g, duration, n, bc, tip0, damping);
    if (ident->parsed()) return run_identify(g, n_plant, ident_damping);
    if (gen->parsed()) return run_gen_data(g, count);
    if (tr->parsed())
      return run_train_observer(g, data_path, test_path, epochs, model_out);
    if (ev->parsed()) return run_eval_observer(g, eval_model, eval_data, max_mse);
    if (rc->parsed()) return run_case(g, case_model);
    if (cm->parsed()) return run_compare_models(g, cm_model);
    if (sw->parsed()) return run_sweep(g, sw_model);
    if (ik_cmd->parsed()) return run_ik(g, x, y, theta, tips);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

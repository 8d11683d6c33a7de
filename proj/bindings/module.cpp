#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "pmfal/episode.hpp"
#include "pmfal/identification.hpp"
#include "pmfal/observer.hpp"

namespace py = pybind11;
using namespace pmfal;

PYBIND11_MODULE(_pmfal, m) {
  m.doc() = "Planar 3-RRR mechanism with flexible actuation links: "
            "kinematics, dynamics, identification, observer and control";

  py::register_exception<ConfigError>(m, "ConfigError");
  py::register_exception<ValidationError>(m, "ValidationError");
  py::register_exception<NumericalError>(m, "NumericalError");

  py::class_<MechanismParams>(m, "MechanismParams")
      .def_readwrite("R", &MechanismParams::R)
      .def_readwrite("r", &MechanismParams::r)
      .def_readwrite("l1", &MechanismParams::l1)
      .def_readwrite("l2", &MechanismParams::l2)
      .def_readwrite("rho", &MechanismParams::rho)
      .def_readwrite("E", &MechanismParams::E)
      .def_readwrite("I", &MechanismParams::I)
      .def_readwrite("m_r", &MechanismParams::m_r)
      .def_readwrite("J_r", &MechanismParams::J_r)
      .def_readwrite("l_c", &MechanismParams::l_c)
      .def_readwrite("m_e", &MechanismParams::m_e)
      .def_readwrite("J_e", &MechanismParams::J_e)
      .def("validate", &MechanismParams::validate);

  m.def("reference_params", &reference_params);
  m.def("load_params_file", &load_params_file, py::arg("path"));

  py::class_<PlatformPose>(m, "PlatformPose")
      .def(py::init<double, double, double>(), py::arg("x") = 0.0,
           py::arg("y") = 0.0, py::arg("theta") = 0.0)
      .def_readwrite("x", &PlatformPose::x)
      .def_readwrite("y", &PlatformPose::y)
      .def_readwrite("theta", &PlatformPose::theta)
      .def("vec", &PlatformPose::vec);

  py::enum_<BoundaryCondition>(m, "BoundaryCondition")
      .value("ClampedFree", BoundaryCondition::ClampedFree)
      .value("PinnedPinned", BoundaryCondition::PinnedPinned)
      .value("FreeFree", BoundaryCondition::FreeFree)
      .value("PinnedFree", BoundaryCondition::PinnedFree)
      .value("ClampedPinned", BoundaryCondition::ClampedPinned)
      .value("ClampedClamped", BoundaryCondition::ClampedClamped);

  py::class_<ModalBasis>(m, "ModalBasis")
      .def(py::init<BoundaryCondition, double, int>(), py::arg("bc"),
           py::arg("length"), py::arg("n"))
      .def("n", &ModalBasis::n)
      .def("eval_phi", &ModalBasis::eval_phi, py::arg("j"), py::arg("x"))
      .def("phi_tip", &ModalBasis::phi_tip, py::arg("j"))
      .def("deformation_field", &ModalBasis::deformation_field, py::arg("q_f"),
           py::arg("x"))
      .def("natural_frequencies", &ModalBasis::natural_frequencies,
           py::arg("E"), py::arg("I"), py::arg("rho"));

  py::class_<IkSolution>(m, "IkSolution")
      .def_readonly("q_a", &IkSolution::q_a)
      .def_readonly("q_p", &IkSolution::q_p)
      .def_readonly("omega_tip", &IkSolution::omega_tip);

  m.def("inverse_kinematics", &inverse_kinematics, py::arg("params"),
        py::arg("basis"), py::arg("pose"), py::arg("q_f"));

  py::class_<PlantOptions>(m, "PlantOptions")
      .def(py::init<>())
      .def_readwrite("dt", &PlantOptions::dt)
      .def_readwrite("modal_damping", &PlantOptions::modal_damping)
      .def_readwrite("track_energy", &PlantOptions::track_energy);

  py::class_<PlantState>(m, "PlantState")
      .def_readonly("t", &PlantState::t)
      .def_readonly("kinetic", &PlantState::kinetic)
      .def_readonly("potential", &PlantState::potential)
      .def_property_readonly(
          "pose", [](const PlantState& st) { return st.s.pose; })
      .def_property_readonly(
          "q_f", [](const PlantState& st) { return st.s.q_f; })
      .def_property_readonly(
          "q_f_dot", [](const PlantState& st) { return st.s.q_f_dot; });

  py::class_<Plant>(m, "Plant")
      .def(py::init<const MechanismParams&, ModalBasis, PlantOptions>(),
           py::arg("params"), py::arg("basis"),
           py::arg("options") = PlantOptions{})
      .def("init_state", &Plant::init_state, py::arg("pose"), py::arg("q_f"),
           py::arg("pose_rates"), py::arg("q_f_dot"))
      .def("step", &Plant::step, py::arg("state"), py::arg("tau_a"),
           py::arg("tau_f"));

  py::class_<TrajectorySpec>(m, "TrajectorySpec")
      .def(py::init<>())
      .def_readwrite("waypoints", &TrajectorySpec::waypoints)
      .def_readwrite("move_time", &TrajectorySpec::move_time)
      .def_readwrite("dwell_time", &TrajectorySpec::dwell_time)
      .def_static("five_point", &TrajectorySpec::five_point)
      .def("total_time", &TrajectorySpec::total_time);

  py::class_<Trajectory>(m, "Trajectory")
      .def(py::init<TrajectorySpec>())
      .def("pose", &Trajectory::pose, py::arg("t"))
      .def("total_time", &Trajectory::total_time);

  py::enum_<ControlKind>(m, "ControlKind")
      .value("ComputedTorque", ControlKind::ComputedTorque)
      .value("JointPD", ControlKind::JointPD);

  py::enum_<CompensationModel>(m, "CompensationModel")
      .value("Developed", CompensationModel::Developed)
      .value("Rigid", CompensationModel::Rigid)
      .value("ClampedPinned", CompensationModel::ClampedPinned);

  py::class_<ControlLawConfig>(m, "ControlLawConfig")
      .def(py::init<>())
      .def_readwrite("kind", &ControlLawConfig::kind)
      .def_readwrite("Kp", &ControlLawConfig::Kp)
      .def_readwrite("Kd", &ControlLawConfig::Kd)
      .def_readwrite("model", &ControlLawConfig::model)
      .def_readwrite("control_rate", &ControlLawConfig::control_rate)
      .def_readwrite("observer_rate", &ControlLawConfig::observer_rate)
      .def_readwrite("n_ctrl", &ControlLawConfig::n_ctrl);

  py::class_<EpisodeConfig>(m, "EpisodeConfig")
      .def(py::init<>())
      .def_readwrite("control", &EpisodeConfig::control)
      .def_readwrite("n_plant", &EpisodeConfig::n_plant)
      .def_readwrite("plant_damping", &EpisodeConfig::plant_damping)
      .def_readwrite("use_observer", &EpisodeConfig::use_observer)
      .def_readwrite("ideal_rates", &EpisodeConfig::ideal_rates)
      .def_readwrite("seed", &EpisodeConfig::seed);

  py::class_<EpisodeMetrics>(m, "EpisodeMetrics")
      .def_readonly("mae", &EpisodeMetrics::mae)
      .def_readonly("mae_stab", &EpisodeMetrics::mae_stab)
      .def_readonly("tip_rms_stab", &EpisodeMetrics::tip_rms_stab)
      .def_readonly("tau_peak", &EpisodeMetrics::tau_peak)
      .def_readonly("energy", &EpisodeMetrics::energy)
      .def_readonly("stable", &EpisodeMetrics::stable)
      .def("total_energy", &EpisodeMetrics::total_energy);

  py::class_<EpisodeLog>(m, "EpisodeLog")
      .def_readonly("completed", &EpisodeLog::completed)
      .def_readonly("failure", &EpisodeLog::failure)
      .def("__len__", [](const EpisodeLog& log) { return log.rows.size(); });

  m.def(
      "run_episode",
      [](const MechanismParams& p, const Trajectory& traj,
         const EpisodeConfig& cfg, const ObserverNet* net) {
        EpisodeLog log = run_episode(p, traj, cfg, net);
        EpisodeMetrics metrics = compute_metrics(log, traj);
        return py::make_tuple(log, metrics);
      },
      py::arg("params"), py::arg("trajectory"), py::arg("config"),
      py::arg("observer") = nullptr);
  m.def("write_episode_csv", &write_episode_csv, py::arg("path"),
        py::arg("log"));

  py::class_<TrainingRanges>(m, "TrainingRanges").def(py::init<>());
  py::class_<TrainingSet>(m, "TrainingSet")
      .def_readwrite("inputs", &TrainingSet::inputs)
      .def_readwrite("targets", &TrainingSet::targets)
      .def("count", &TrainingSet::count);
  m.def("generate_training_set", &generate_training_set, py::arg("params"),
        py::arg("basis"), py::arg("ranges"), py::arg("count"), py::arg("seed"));

  py::class_<TrainOptions>(m, "TrainOptions")
      .def(py::init<>())
      .def_readwrite("epochs", &TrainOptions::epochs)
      .def_readwrite("batch", &TrainOptions::batch)
      .def_readwrite("lr", &TrainOptions::lr)
      .def_readwrite("seed", &TrainOptions::seed);

  py::class_<ObserverNet>(m, "ObserverNet")
      .def_static("init", &ObserverNet::init, py::arg("seed"))
      .def_static("load", &ObserverNet::load, py::arg("path"))
      .def("save", &ObserverNet::save, py::arg("path"))
      .def("set_normalization", &ObserverNet::set_normalization)
      .def("predict", &ObserverNet::predict, py::arg("input"))
      .def("predict_batch", &ObserverNet::predict_batch, py::arg("inputs"));

  m.def(
      "train_observer",
      [](ObserverNet& net, const TrainingSet& train_data,
         const TrainingSet& test_data, const TrainOptions& opts) {
        return train(net, train_data, test_data, opts).final_test_mse;
      },
      py::arg("net"), py::arg("train_data"), py::arg("test_data"),
      py::arg("options") = TrainOptions{});
  m.def("normalized_mse", &normalized_mse, py::arg("net"), py::arg("data"));

  py::class_<SnapshotMatrix>(m, "SnapshotMatrix")
      .def_readonly("Y", &SnapshotMatrix::Y)
      .def_readonly("dt", &SnapshotMatrix::dt)
      .def_static("from_samples", &SnapshotMatrix::from_samples,
                  py::arg("W"), py::arg("dt"), py::arg("sample_points"));

  py::class_<DmdResult>(m, "DmdResult")
      .def_readonly("rank", &DmdResult::rank)
      .def_readonly("frequencies_hz", &DmdResult::frequencies_hz)
      .def_readonly("dominant_mode", &DmdResult::dominant_mode)
      .def_readonly("residual", &DmdResult::residual);
  m.def("dmd", &dmd, py::arg("snapshots"), py::arg("rank") = -1);

  py::class_<CandidateLibrary>(m, "CandidateLibrary")
      .def_readonly("Theta", &CandidateLibrary::Theta)
      .def("label_name", &CandidateLibrary::label_name, py::arg("col"));
  m.def("build_full_library", &build_full_library, py::arg("length"),
        py::arg("sample_points"));
  m.def("uniform_sample_points", &uniform_sample_points, py::arg("length"),
        py::arg("n") = 9);

  py::class_<SindyResult>(m, "SindyResult")
      .def_readonly("Xi", &SindyResult::Xi)
      .def_readonly("lambda_", &SindyResult::lambda)
      .def_readonly("active", &SindyResult::active)
      .def_readonly("residual", &SindyResult::residual);
  m.def("sindy_select", &sindy_select, py::arg("omega_e"), py::arg("library"),
        py::arg("lambda") = std::nullopt);
  m.def(
      "select_mode_shape",
      [](const SindyResult& s, const CandidateLibrary& lib) {
        auto sel = select_mode_shape(s, lib);
        return py::make_tuple(sel.first, sel.second);
      },
      py::arg("sindy"), py::arg("library"));
}

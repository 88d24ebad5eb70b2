#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "hamrc/analysis.hpp"
#include "hamrc/config.hpp"
#include "hamrc/errors.hpp"
#include "hamrc/experiments.hpp"
#include "hamrc/model_io.hpp"
#include "hamrc/models.hpp"
#include "hamrc/prediction.hpp"
#include "hamrc/reservoir.hpp"
#include "hamrc/training.hpp"

namespace py = pybind11;
using namespace hamrc;

namespace {

SparseMatrix to_sparse(const Matrix& m) { return m.sparseView(0.0, 0.0); }

py::dict manifest_dict(const TrainingManifest& m) {
  py::dict d;
  d["betas"] = m.betas;
  d["lengths"] = m.lengths;
  d["washout"] = m.washout;
  d["ridge"] = m.ridge;
  d["reservoir_seed"] = m.reservoir_seed;
  d["state_seed"] = m.state_seed;
  d["harvested_columns"] = m.harvested_columns;
  d["training_rmse"] = m.training_rmse;
  return d;
}

py::dict run_dict(const PredictionRun& r) {
  py::dict d;
  d["outputs"] = r.outputs;
  d["final_state"] = r.final_state;
  d["diverged_at"] = r.diverged_at ? py::cast(*r.diverged_at) : py::none();
  return d;
}

}  // namespace

PYBIND11_MODULE(_hamrc, m) {
  m.doc() = "Parameter-aware reservoir computing for Hamiltonian systems";

  static py::exception<ConfigError> config_error(m, "ConfigError", PyExc_ValueError);
  static py::exception<NumericalError> numerical_error(m, "NumericalError", PyExc_ArithmeticError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ConfigError& e) {
      py::set_error(config_error, e.what());
    } catch (const NumericalError& e) {
      py::set_error(numerical_error, e.what());
    }
  });

  py::class_<ReservoirConfig>(m, "ReservoirConfig")
      .def(py::init<>())
      .def_readwrite("nodes", &ReservoirConfig::nodes)
      .def_readwrite("density", &ReservoirConfig::density)
      .def_readwrite("spectral_radius", &ReservoirConfig::spectral_radius)
      .def_readwrite("leak", &ReservoirConfig::leak)
      .def_readwrite("input_scale", &ReservoirConfig::input_scale)
      .def_readwrite("ridge", &ReservoirConfig::ridge)
      .def_readwrite("input_dim", &ReservoirConfig::input_dim)
      .def_readwrite("output_dim", &ReservoirConfig::output_dim)
      .def_readwrite("dt", &ReservoirConfig::dt)
      .def_readwrite("seed", &ReservoirConfig::seed)
      .def("validate", &ReservoirConfig::validate);

  py::class_<Reservoir, std::shared_ptr<Reservoir>>(m, "Reservoir")
      .def_property_readonly("config", &Reservoir::config)
      .def_property_readonly("adjacency", [](const Reservoir& r) { return Matrix(r.adjacency()); })
      .def_property_readonly("nonzeros", [](const Reservoir& r) { return r.adjacency().nonZeros(); })
      .def_property_readonly("input_weights", &Reservoir::input_weights)
      .def_property_readonly("bias", &Reservoir::bias)
      .def_property_readonly("size", &Reservoir::size);

  m.def("build_reservoir",
        [](const ReservoirConfig& c, std::uint64_t seed) { return std::make_shared<Reservoir>(build_reservoir(c, seed)); },
        py::arg("config"), py::arg("seed"));
  m.def("spectral_radius", [](const Matrix& a) { return estimate_spectral_radius(to_sparse(a)); },
        py::arg("matrix"));
  m.def("initial_reservoir_state", &initial_reservoir_state, py::arg("nodes"), py::arg("seed"));
  m.def("step", [](const Reservoir& r, const Vector& s, const Vector& u, double beta) { return step(r, s, u, beta); },
        py::arg("reservoir"), py::arg("state"), py::arg("input"), py::arg("beta"));
  m.def("ridge_readout",
        [](const Matrix& v, const Matrix& u, double lambda) { return ridge_readout(v, u, lambda); },
        py::arg("states"), py::arg("targets"), py::arg("ridge"));

  py::class_<TrainedModel>(m, "TrainedModel")
      .def_readonly("w_out", &TrainedModel::w_out)
      .def_readonly("final_state", &TrainedModel::final_state)
      .def_property_readonly("manifest", [](const TrainedModel& t) { return manifest_dict(t.manifest); })
      .def_property_readonly("reservoir",
                             [](const TrainedModel& t) { return std::make_shared<Reservoir>(*t.reservoir); })
      .def("readout", &TrainedModel::readout, py::arg("state"));

  py::class_<ExperimentConfig>(m, "ExperimentConfig")
      .def_readwrite("name", &ExperimentConfig::name)
      .def_property_readonly("system", [](const ExperimentConfig& c) { return std::string(system_name(c.system)); })
      .def_property_readonly("parameter_aware",
                             [](const ExperimentConfig& c) { return c.mode == TrainingMode::kParameterAware; })
      .def_readwrite("k", &ExperimentConfig::k)
      .def_readwrite("dt", &ExperimentConfig::dt)
      .def_readwrite("training_betas", &ExperimentConfig::training_betas)
      .def_readwrite("segment_length", &ExperimentConfig::segment_length)
      .def_readwrite("reservoir", &ExperimentConfig::reservoir)
      .def_readwrite("washout", &ExperimentConfig::washout)
      .def_readwrite("prediction_steps", &ExperimentConfig::prediction_steps)
      .def_readwrite("transient", &ExperimentConfig::transient)
      .def_readwrite("seed", &ExperimentConfig::seed)
      .def_readwrite("state_seed", &ExperimentConfig::state_seed)
      .def_readwrite("threads", &ExperimentConfig::threads)
      .def("evaluation_betas", &ExperimentConfig::resolved_evaluation_betas)
      .def("validate", &ExperimentConfig::validate)
      .def("to_json", [](const ExperimentConfig& c) { return config_to_json(c); });

  m.def("parse_config", &parse_config, py::arg("text"));
  m.def("load_config", [](const std::string& name) { return load_config(resolve_config_path(name)); },
        py::arg("name_or_path"));

  m.def("ground_truth", &ground_truth, py::arg("config"), py::arg("beta"), py::arg("samples"));
  m.def("train_model", &train_model, py::arg("config"), py::call_guard<py::gil_scoped_release>());
  m.def("predict",
        [](const ExperimentConfig& c, const TrainedModel& model, double beta, Eigen::Index steps) {
          return run_dict(predict_at(c, model, beta, steps));
        },
        py::arg("config"), py::arg("model"), py::arg("beta"), py::arg("steps"));
  m.def("forecast",
        [](const ExperimentConfig& c, const TrainedModel& model, Eigen::Index steps) {
          const Forecast f = forecast(c, model, steps);
          py::dict d = run_dict(f.run);
          d["truth"] = f.truth;
          return d;
        },
        py::arg("config"), py::arg("model"), py::arg("steps"));
  m.def("closed_loop",
        [](const TrainedModel& model, double beta, const Vector& u0, const Vector& r0, Eigen::Index steps) {
          return run_dict(closed_loop(model, beta, u0, r0, steps));
        },
        py::arg("model"), py::arg("beta"), py::arg("u0"), py::arg("r0"), py::arg("steps"));
  m.def("valid_time", &valid_time, py::arg("prediction"), py::arg("truth"), py::arg("threshold") = 0.25,
        py::arg("lyapunov") = 0.0, py::arg("dt") = 1.0);

  m.def("save_model",
        [](const std::string& path, const TrainedModel& model, const ExperimentConfig* c) {
          save_model(path, {model, c ? config_to_json(*c) : std::string()});
        },
        py::arg("path"), py::arg("model"), py::arg("config") = nullptr);
  m.def("load_model", [](const std::string& path) { return load_model(path).model; }, py::arg("path"));

  m.def("pendulum_energy", [](const Vector& u) { return pendulum_energy(u); }, py::arg("observation"));
  m.def("pendulum_integrate",
        [](double t1, double t2, double w1, double w2, Eigen::Index steps, double dt) {
          return pendulum_integrate({t1, t2, w1, w2}, steps, dt).samples;
        },
        py::arg("theta1"), py::arg("theta2"), py::arg("omega1"), py::arg("omega2"), py::arg("steps"),
        py::arg("dt") = 0.2);
  m.def("pendulum_lyapunov",
        [](double t1, double t2, double horizon) { return pendulum_lyapunov({t1, t2, 0.0, 0.0}, horizon); },
        py::arg("theta1"), py::arg("theta2"), py::arg("horizon"));
  m.def("standard_map_orbit",
        [](double theta0, double p0, double k, long n) {
          const auto orbit = standard_map_orbit(theta0, p0, k, n);
          Matrix out(2, static_cast<Eigen::Index>(orbit.size()));
          for (std::size_t i = 0; i < orbit.size(); ++i) out.col(static_cast<Eigen::Index>(i)) << orbit[i].theta, orbit[i].p;
          return out;
        },
        py::arg("theta0"), py::arg("p0"), py::arg("k"), py::arg("n"));
  m.def("standard_map_lyapunov",
        [](double theta, double p, double k, long n) { return standard_map_lyapunov({theta, p}, k, n); },
        py::arg("theta"), py::arg("p"), py::arg("k"), py::arg("iterations"));
  m.def("encode_map_state", [](double theta, double p) { return encode_map_state({theta, p}); },
        py::arg("theta"), py::arg("p"));
  m.def("decode_map_state",
        [](const Vector& o) {
          const MapState s = decode_map_state(o);
          return std::pair{s.theta, s.p};
        },
        py::arg("observable"));

  m.def("section",
        [](const ExperimentConfig& c, const Matrix& trajectory) { return section_of(c, trajectory, 0.0).points; },
        py::arg("config"), py::arg("trajectory"));
  m.def("climate_distance",
        [](const ExperimentConfig& c, const Matrix& a, const Matrix& b) {
          PoincareSet pa, pb;
          pa.points = a;
          pb.points = b;
          return climate_distance(pa, pb, projection_of(c));
        },
        py::arg("config"), py::arg("a"), py::arg("b"));
  m.def("series_lyapunov",
        [](const Matrix& series, double dt, int horizon, int fit_window) {
          LyapunovSeriesOptions o;
          o.horizon = horizon;
          o.fit_window = fit_window;
          return series_lyapunov(series, dt, o);
        },
        py::arg("series"), py::arg("dt"), py::arg("horizon") = 50, py::arg("fit_window") = 20);
}

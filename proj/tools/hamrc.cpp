// hamrc: command-line front end for reservoir training, prediction and
// KAM-diagram reconstruction.

#include <cmath>
#include <filesystem>
#include <iostream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "hamrc/config.hpp"
#include "hamrc/csv.hpp"
#include "hamrc/errors.hpp"
#include "hamrc/experiments.hpp"
#include "hamrc/model_io.hpp"
#include "hamrc/models.hpp"
#include "hamrc/svg.hpp"

namespace fs = std::filesystem;
using namespace hamrc;

namespace {

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> threads;
};

ExperimentConfig load(const Globals& g, const std::string& fallback_json = {}) {
  ExperimentConfig c;
  if (!g.config.empty()) {
    c = load_config(resolve_config_path(g.config));
  } else if (!fallback_json.empty()) {
    c = parse_config(fallback_json);
  } else {
    throw ConfigError("--config is required for this command");
  }
  if (g.seed) {
    c.seed = *g.seed;
    c.state_seed = *g.seed;
    c.reservoir.seed = *g.seed;
  }
  if (g.out) c.output_dir = *g.out;
  if (g.threads) {
    if (*g.threads < 1) throw ConfigError("--threads: must be >= 1");
    c.threads = *g.threads;
  }
  return c;
}

fs::path out_dir(const Globals& g, const ExperimentConfig* c) {
  if (g.out) return *g.out;
  return c ? fs::path(c->output_dir) : fs::path("out");
}

std::vector<std::string> columns_of(const ExperimentConfig& c) {
  return c.system == SystemKind::kPendulum ? pendulum_columns() : map_columns();
}

CsvTable diagram_table(const ExperimentConfig& c, const std::vector<const PoincareSet*>& sets) {
  CsvTable t;
  t.header = {"beta", "point_index"};
  if (c.system == SystemKind::kPendulum) {
    for (const auto& n : pendulum_columns()) t.header.push_back(n);
  } else {
    t.header.push_back("theta");
    t.header.push_back("p");
  }
  Eigen::Index rows = 0;
  for (const auto* s : sets) rows += s->size();
  t.rows.resize(rows, static_cast<Eigen::Index>(t.header.size()));
  Eigen::Index r = 0;
  for (const auto* s : sets) {
    for (Eigen::Index k = 0; k < s->size(); ++k, ++r) {
      t.rows(r, 0) = s->beta;
      t.rows(r, 1) = static_cast<double>(k);
      t.rows.row(r).tail(s->points.rows()) = s->points.col(k).transpose();
    }
  }
  return t;
}

// Scatter of a diagram table: (wrapped theta2, omega2) or (theta, p).
std::string diagram_svg(const CsvTable& t, const std::string& title) {
  const bool pendulum = t.header.size() == 6;
  std::vector<ScatterSeries> series;
  for (Eigen::Index r = 0; r < t.rows.rows(); ++r) {
    const double beta = t.rows(r, 0);
    if (series.empty() || series.back().label != format_number(beta))
      series.push_back({format_number(beta), {}, {}});
    if (pendulum) {
      series.back().x.push_back(wrap_pi(t.rows(r, 4)));
      series.back().y.push_back(t.rows(r, 5));
    } else {
      series.back().x.push_back(t.rows(r, 2));
      series.back().y.push_back(t.rows(r, 3));
    }
  }
  ScatterOptions o;
  o.title = title;
  if (pendulum) {
    o.x_label = "theta2";
    o.y_label = "omega2";
    o.x_range = std::array<double, 2>{-std::numbers::pi, std::numbers::pi};
  } else {
    o.x_label = "theta";
    o.y_label = "p";
    o.x_range = std::array<double, 2>{0.0, kTwoPi};
    o.y_range = std::array<double, 2>{0.0, kTwoPi};
  }
  return scatter_svg(series, o);
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << text;
}

// Model from --model, or trained from the config when absent.
ModelDocument obtain_model(const std::string& model_path, const ExperimentConfig& c) {
  if (!model_path.empty()) return load_model(model_path);
  std::cerr << "no --model given; training from config\n";
  return {train_model(c), config_to_json(c)};
}

std::string embedded_config(const std::string& model_path) {
  if (model_path.empty()) return {};
  return load_model(model_path).experiment;
}

int cmd_simulate(const Globals& g, std::vector<double> betas, std::optional<int> steps) {
  const ExperimentConfig c = load(g);
  if (betas.empty()) betas = c.training_betas;
  const int n = steps.value_or(c.segment_length);
  if (n < 0) throw ConfigError("--steps: must be >= 0");
  const fs::path dir = out_dir(g, &c);
  RunManifest manifest("simulate", config_to_json(c));
  auto& results = manifest.results();
  for (std::size_t i = 0; i < betas.size(); ++i) {
    const Matrix truth = ground_truth(c, betas[i], n + 1);
    const Matrix samples = truth.rightCols(n);
    char name[48];
    std::snprintf(name, sizeof name, "trajectory_%03zu.csv", i);
    write_csv(dir / name, trajectory_table(samples, c.dt, c.dt, columns_of(c)));
    manifest.add_output(dir / name);
    nlohmann::json entry = {{"beta", betas[i]}, {"file", name}, {"rows", n}};
    if (c.system == SystemKind::kPendulum && n > 0) {
      const auto audit = energy_audit(truth, [](const Eigen::Ref<const Vector>& u) {
        return pendulum_energy(u);
      });
      entry["initial_energy"] = pendulum_energy(Vector(truth.col(0)));
      entry["max_energy_deviation"] = audit.max_abs_dev;
    }
    results["trajectories"].push_back(entry);
  }
  manifest.write(dir);
  std::cout << "wrote " << betas.size() << " trajectories to " << dir.string() << "\n";
  return 0;
}

int cmd_train(const Globals& g) {
  const ExperimentConfig c = load(g);
  const fs::path dir = out_dir(g, &c);
  const TrainedModel model = train_model(c);
  save_model(dir / "model.json", {model, config_to_json(c)});
  RunManifest manifest("train", config_to_json(c));
  manifest.add_output(dir / "model.json");
  manifest.results() = {{"betas", model.manifest.betas},
                        {"harvested_columns", model.manifest.harvested_columns},
                        {"training_rmse", model.manifest.training_rmse}};
  manifest.write(dir);
  std::cout << "trained on " << model.manifest.betas.size() << " segment(s), one-step RMSE "
            << model.manifest.training_rmse << "\n";
  return 0;
}

int cmd_predict(const Globals& g, const std::string& model_path, std::optional<double> beta,
                std::optional<int> steps, bool cont, double lyapunov,
                std::optional<double> divergence_limit) {
  ExperimentConfig c = load(g, embedded_config(model_path));
  if (divergence_limit) {
    if (!(*divergence_limit > 0.0)) throw ConfigError("--divergence-limit: must be > 0");
    c.divergence_limit = *divergence_limit;
  }
  const ModelDocument doc = obtain_model(model_path, c);
  const fs::path dir = out_dir(g, &c);
  const int n = steps.value_or(c.prediction_steps);
  if (n < 0) throw ConfigError("--steps: must be >= 0");
  RunManifest manifest("predict", config_to_json(c));
  auto& results = manifest.results();

  PredictionRun run;
  double t0 = c.dt;
  if (cont) {
    const Forecast f = forecast(c, doc.model, n);
    run = f.run;
    t0 = static_cast<double>(c.segment_length) * c.dt;
    write_csv(dir / "truth.csv", trajectory_table(f.truth, t0, c.dt, columns_of(c)));
    manifest.add_output(dir / "truth.csv");
    if (run.outputs.cols() > 0) {
      const Matrix truth = f.truth.leftCols(run.outputs.cols());
      results["valid_time"] = valid_time(run.outputs, truth, c.valid_threshold, 0.0, c.dt);
      if (lyapunov > 0.0)
        results["valid_lyapunov_times"] =
            valid_time(run.outputs, truth, c.valid_threshold, lyapunov, c.dt);
    }
    results["beta"] = c.training_betas.back();
  } else {
    if (!beta) throw ConfigError("--beta is required unless --continue is given");
    run = predict_at(c, doc.model, *beta, n);
    t0 = static_cast<double>(c.transient + 1) * c.dt;
    results["beta"] = *beta;
  }
  write_csv(dir / "prediction.csv", trajectory_table(run.outputs, t0, c.dt, columns_of(c)));
  manifest.add_output(dir / "prediction.csv");
  results["rows"] = run.outputs.cols();
  if (c.system == SystemKind::kPendulum && run.outputs.cols() > 0) {
    const auto audit = energy_audit(run.outputs, [](const Eigen::Ref<const Vector>& u) {
      return pendulum_energy(u);
    });
    results["energy_mean"] = audit.mean;
    results["energy_max_deviation"] = audit.max_abs_dev;
  }
  if (run.diverged()) {
    results["diverged_at"] = *run.diverged_at;
    results["partial"] = true;
  }
  manifest.write(dir);
  if (run.diverged()) {
    std::cerr << "error: closed loop diverged at step " << *run.diverged_at
              << "; prediction.csv is partial\n";
    return 2;
  }
  std::cout << "wrote " << run.outputs.cols() << " predicted steps to "
            << (dir / "prediction.csv").string() << "\n";
  return 0;
}

int cmd_kam(const Globals& g, const std::string& model_path, std::vector<double> betas,
            bool no_truth, bool with_lyapunov) {
  const ExperimentConfig c = load(g, embedded_config(model_path));
  if (betas.empty()) betas = c.resolved_evaluation_betas();
  if (betas.empty()) throw ConfigError("kam: empty beta list");
  const fs::path dir = out_dir(g, &c);
  KamOptions opt;
  opt.ground_truth = !no_truth;
  opt.lyapunov = with_lyapunov;
  std::vector<BetaOutcome> outcomes;
  if (c.mode == TrainingMode::kStandard) {
    outcomes = run_standard_kam(c, betas, opt);
  } else {
    const ModelDocument doc = obtain_model(model_path, c);
    outcomes = run_kam(c, doc.model, betas, opt);
  }

  std::vector<const PoincareSet*> model_sets, machine_sets;
  CsvTable summary;
  summary.header = {"beta", "distance", "model_points", "machine_points", "model_lyapunov",
                    "machine_lyapunov", "failed"};
  summary.rows.resize(static_cast<Eigen::Index>(outcomes.size()), 7);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  int failures = 0;
  RunManifest manifest("kam", config_to_json(c));
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    const auto& o = outcomes[i];
    const auto r = static_cast<Eigen::Index>(i);
    if (o.model) model_sets.push_back(&*o.model);
    if (o.machine) machine_sets.push_back(&*o.machine);
    summary.rows.row(r) << o.beta, o.distance.value_or(nan),
        o.model ? static_cast<double>(o.model->size()) : nan,
        o.machine ? static_cast<double>(o.machine->size()) : nan, o.model_lyapunov.value_or(nan),
        o.machine_lyapunov.value_or(nan), o.error.empty() ? 0.0 : 1.0;
    if (!o.error.empty()) {
      ++failures;
      std::cerr << "beta " << format_number(o.beta) << ": " << o.error << "\n";
      manifest.results()["failures"].push_back({{"beta", o.beta}, {"error", o.error}});
    }
  }
  const CsvTable model_table = diagram_table(c, model_sets);
  write_csv(dir / "diagram_model.csv", model_table);
  write_text(dir / "diagram_model.svg", diagram_svg(model_table, c.name + " (model)"));
  manifest.add_output(dir / "diagram_model.csv");
  if (opt.ground_truth) {
    const CsvTable machine_table = diagram_table(c, machine_sets);
    write_csv(dir / "diagram_machine.csv", machine_table);
    write_text(dir / "diagram_machine.svg", diagram_svg(machine_table, c.name + " (machine)"));
    manifest.add_output(dir / "diagram_machine.csv");
  }
  write_csv(dir / "distances.csv", summary);
  manifest.add_output(dir / "distances.csv");
  manifest.write(dir);
  std::cout << outcomes.size() - static_cast<std::size_t>(failures) << "/" << outcomes.size()
            << " betas completed; results in " << dir.string() << "\n";
  return failures == static_cast<int>(outcomes.size()) ? 2 : 0;
}

int cmd_poincare(const Globals& g, const std::string& input, std::optional<double> beta,
                 std::optional<int> steps) {
  const ExperimentConfig c = load(g);
  const fs::path dir = out_dir(g, &c);
  Matrix traj;
  double t0 = 0.0;
  if (!input.empty()) {
    const CsvTable t = read_csv(fs::path(input));
    if (t.rows.cols() != 5) throw ConfigError(input + ": expected t plus 4 state columns");
    traj = t.rows.rightCols(4).transpose();
    if (t.rows.rows() > 0) t0 = t.rows(0, 0);
  } else {
    if (!beta) throw ConfigError("poincare: give --input or --beta");
    traj = ground_truth(c, *beta, steps.value_or(c.prediction_steps));
  }
  PoincareSet set = c.system == SystemKind::kPendulum
                        ? poincare_section(traj, c.dt, c.section, t0)
                        : map_section(traj);
  set.beta = beta.value_or(0.0);
  const CsvTable table = diagram_table(c, {&set});
  write_csv(dir / "section.csv", table);
  write_text(dir / "section.svg", diagram_svg(table, c.name + " section"));
  RunManifest manifest("poincare", config_to_json(c));
  manifest.add_output(dir / "section.csv");
  manifest.results() = {{"points", set.size()}};
  manifest.write(dir);
  std::cout << set.size() << " section points\n";
  return 0;
}

int cmd_lyapunov(const Globals& g, const std::string& input, const std::string& model_path,
                 std::optional<double> beta, bool benettin, double horizon) {
  const std::string fallback =
      g.config.empty() && model_path.empty() ? std::string() : embedded_config(model_path);
  std::optional<ExperimentConfig> c;
  if (!g.config.empty() || !fallback.empty()) c = load(g, fallback);
  double value = 0.0;
  std::string method;
  if (!input.empty()) {
    const CsvTable t = read_csv(fs::path(input));
    if (t.rows.cols() < 2 || t.rows.rows() < 2) throw ConfigError(input + ": need t and data");
    const double dt = t.rows(1, 0) - t.rows(0, 0);
    LyapunovSeriesOptions opt = c ? c->lyapunov : LyapunovSeriesOptions{};
    if (!c || static_cast<Eigen::Index>(opt.periods.size()) != t.rows.cols() - 1) opt.periods.clear();
    value = series_lyapunov(t.rows.rightCols(t.rows.cols() - 1).transpose(), dt, opt);
    method = "series";
  } else {
    if (!c) throw ConfigError("lyapunov: give --input, or --config with --beta");
    if (!beta) throw ConfigError("lyapunov: --beta is required");
    if (benettin) {
      if (c->system == SystemKind::kPendulum) {
        value = pendulum_lyapunov({0.6, *beta, 0.0, 0.0}, horizon);
      } else {
        value = standard_map_lyapunov({std::numbers::pi, kTwoPi * *beta}, c->k,
                                      static_cast<long>(horizon));
      }
      method = "benettin";
    } else {
      const ModelDocument doc = obtain_model(model_path, *c);
      const PredictionRun run = predict_at(*c, doc.model, *beta, c->prediction_steps);
      if (run.diverged()) throw NumericalError("closed loop diverged");
      value = series_lyapunov(run.outputs, c->dt, c->lyapunov);
      method = "series(model)";
    }
  }
  std::cout << format_number(value) << "\n";
  if (c) {
    const fs::path dir = out_dir(g, &*c);
    RunManifest manifest("lyapunov", config_to_json(*c));
    manifest.results() = {{"method", method}, {"exponent", value}};
    if (beta) manifest.results()["beta"] = *beta;
    manifest.write(dir);
  }
  return 0;
}

int cmd_hyperopt(const Globals& g, std::optional<int> budget) {
  ExperimentConfig c = load(g);
  if (budget) c.hyperopt.budget = *budget;
  c.validate();
  const fs::path dir = out_dir(g, &c);
  const auto trials = hyperopt(c);
  CsvTable t;
  t.header = {"rank", "trial", "density", "spectral_radius", "leak", "input_scale", "ridge",
              "validation_rmse", "valid_time", "score"};
  t.rows.resize(static_cast<Eigen::Index>(trials.size()), 10);
  for (std::size_t i = 0; i < trials.size(); ++i) {
    const auto& tr = trials[i];
    const auto& r = tr.reservoir;
    t.rows.row(static_cast<Eigen::Index>(i)) << static_cast<double>(i + 1), tr.index, r.density,
        r.spectral_radius, r.leak, r.input_scale, r.ridge, tr.validation_rmse, tr.valid_time,
        tr.score;
  }
  write_csv(dir / "trials.csv", t);
  ExperimentConfig best = c;
  best.reservoir = trials.front().reservoir;
  write_text(dir / "best.json", config_to_json(best) + "\n");
  RunManifest manifest("hyperopt", config_to_json(c));
  manifest.add_output(dir / "trials.csv");
  manifest.add_output(dir / "best.json");
  manifest.write(dir);
  const auto& b = trials.front();
  std::cout << "best trial " << b.index << ": density " << b.reservoir.density << ", radius "
            << b.reservoir.spectral_radius << ", leak " << b.reservoir.leak << ", input scale "
            << b.reservoir.input_scale << ", ridge " << b.reservoir.ridge << " (rmse "
            << b.validation_rmse << ", valid time " << b.valid_time << ")\n";
  return trials.front().error.empty() ? 0 : 2;
}

int cmd_plot(const Globals& g, const std::string& input, std::string output,
             const std::string& title) {
  const CsvTable t = read_csv(fs::path(input));
  if (t.header.size() < 2 || t.header[0] != "beta" || t.header[1] != "point_index")
    throw ConfigError(input + ": not a diagram CSV");
  if (t.header.size() != 6 && t.header.size() != 4)
    throw ConfigError(input + ": unexpected number of coordinate columns");
  if (output.empty()) {
    fs::path p(input);
    p.replace_extension(".svg");
    output = g.out ? (fs::path(*g.out) / p.filename()).string() : p.string();
  }
  write_text(output, diagram_svg(t, title.empty() ? fs::path(input).stem().string() : title));
  std::cout << "wrote " << output << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Parameter-aware reservoir computing for Hamiltonian dynamics"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config, "Experiment config file or preset name (e.g. fig1a)");
  app.add_option("--seed", g.seed, "Reservoir and state seed override");
  app.add_option("--out", g.out, "Output directory override");
  app.add_option("--threads", g.threads, "Worker threads");

  std::vector<double> betas;
  std::optional<double> beta;
  std::optional<int> steps;
  std::optional<int> budget;
  std::string model_path, input, output, title;
  bool cont = false, no_truth = false, with_lyapunov = false, benettin = false;
  double lyapunov = 0.0, horizon = 2000.0;
  std::optional<double> divergence_limit;

  auto* sim = app.add_subcommand("simulate", "Integrate ground-truth trajectories");
  sim->add_option("--beta", betas, "Initial-condition parameters (default: training betas)");
  sim->add_option("--steps", steps, "Samples after the initial condition");

  auto* trn = app.add_subcommand("train", "Train a model and write model.json");

  auto* prd = app.add_subcommand("predict", "Closed-loop prediction");
  prd->add_option("--model", model_path, "Model document (trained from config when omitted)");
  prd->add_option("--beta", beta, "Control parameter");
  prd->add_option("--steps", steps, "Number of predicted steps");
  prd->add_flag("--continue", cont, "Continue the last training segment and compare with truth");
  prd->add_option("--lyapunov", lyapunov, "Exponent used to express valid time in Lyapunov times");
  prd->add_option("--divergence-limit", divergence_limit, "Output magnitude that stops the run");

  auto* kam = app.add_subcommand("kam", "Model and machine Poincare diagrams over betas");
  kam->add_option("--model", model_path, "Model document (trained from config when omitted)");
  kam->add_option("--betas", betas, "Betas (default: config evaluation betas)");
  kam->add_flag("--no-truth", no_truth, "Skip the ground-truth diagram");
  kam->add_flag("--lyapunov", with_lyapunov, "Estimate exponents of every run");

  auto* pnc = app.add_subcommand("poincare", "Section of a trajectory CSV or a simulated run");
  pnc->add_option("--input", input, "Trajectory CSV (t plus state columns)");
  pnc->add_option("--beta", beta, "Simulate this beta when no input is given");
  pnc->add_option("--steps", steps, "Samples to simulate");

  auto* lya = app.add_subcommand("lyapunov", "Largest Lyapunov exponent");
  lya->add_option("--input", input, "Series CSV (t plus data columns)");
  lya->add_option("--model", model_path, "Model document for a closed-loop estimate");
  lya->add_option("--beta", beta, "Control parameter");
  lya->add_flag("--benettin", benettin, "Ground-truth Benettin estimate");
  lya->add_option("--horizon", horizon, "Benettin horizon (time units or iterations)");

  auto* hyp = app.add_subcommand("hyperopt", "Random hyperparameter search");
  hyp->add_option("--budget", budget, "Number of trials");

  auto* plt = app.add_subcommand("plot", "Scatter SVG of a diagram CSV");
  plt->add_option("--input", input, "Diagram CSV")->required();
  plt->add_option("--svg", output, "Output path");
  plt->add_option("--title", title, "Plot title");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*sim) return cmd_simulate(g, betas, steps);
    if (*trn) return cmd_train(g);
    if (*prd) return cmd_predict(g, model_path, beta, steps, cont, lyapunov, divergence_limit);
    if (*kam) return cmd_kam(g, model_path, betas, no_truth, with_lyapunov);
    if (*pnc) return cmd_poincare(g, input, beta, steps);
    if (*lya) return cmd_lyapunov(g, input, model_path, beta, benettin, horizon);
    if (*hyp) return cmd_hyperopt(g, budget);
    if (*plt) return cmd_plot(g, input, output, title);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "failure: " << e.what() << "\n";
    return 2;
  }
  return 1;
}

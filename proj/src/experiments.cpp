#include "hamrc/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>

#include "hamrc/errors.hpp"
#include "hamrc/models.hpp"
#include "hamrc/rng.hpp"

namespace hamrc {

void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, threads)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

Vector initial_observation(const ExperimentConfig& config, double beta) {
  if (config.system == SystemKind::kPendulum) return to_observation({0.6, beta, 0.0, 0.0});
  return encode_map_state({wrap_two_pi(std::numbers::pi), wrap_two_pi(kTwoPi * beta)});
}

Matrix ground_truth(const ExperimentConfig& config, double beta, Eigen::Index samples) {
  if (samples < 0) throw std::invalid_argument("ground_truth: samples must be >= 0");
  Matrix out(4, samples);
  if (samples == 0) return out;
  out.col(0) = initial_observation(config, beta);
  if (config.system == SystemKind::kPendulum) {
    const PendulumState s0{0.6, beta, 0.0, 0.0};
    out.rightCols(samples - 1) = pendulum_integrate(s0, samples - 1, config.dt).samples;
  } else {
    const auto orbit =
        standard_map_orbit(std::numbers::pi, kTwoPi * beta, config.k, samples - 1, config.literal_kick);
    for (std::size_t i = 0; i < orbit.size(); ++i)
      out.col(static_cast<Eigen::Index>(i) + 1) = encode_map_state(orbit[i]);
  }
  return out;
}

double drive_beta(const ExperimentConfig& config, double beta) {
  return config.mode == TrainingMode::kParameterAware ? beta : 0.0;
}

Corpus training_corpus(const ExperimentConfig& config) {
  std::vector<TrajectorySegment> segments(config.training_betas.size());
  parallel_for(segments.size(), config.threads, [&](std::size_t i) {
    const double beta = config.training_betas[i];
    segments[i] = {drive_beta(config, beta), ground_truth(config, beta, config.segment_length),
                   config.dt};
  });
  return assemble_corpus(std::move(segments));
}

TrainedModel train_model(const ExperimentConfig& config) {
  ReservoirConfig rc = config.reservoir;
  rc.seed = config.seed;
  rc.dt = config.dt;
  auto res = std::make_shared<const Reservoir>(build_reservoir(rc));
  return train(std::move(res), training_corpus(config), config.washout, config.state_seed);
}

ClosedLoopOptions loop_options(const ExperimentConfig& config) {
  ClosedLoopOptions o;
  o.divergence_limit = config.divergence_limit;
  if (config.project_outputs && config.system == SystemKind::kStandardMap)
    o.unit_circle_pairs = {{0, 2}, {1, 3}};
  return o;
}

PredictionRun predict_at(const ExperimentConfig& config, const TrainedModel& model, double beta,
                         Eigen::Index steps) {
  PredictionRun run = closed_loop(model, drive_beta(config, beta), initial_observation(config, beta),
                                  model.final_state, config.transient + steps, loop_options(config));
  const Eigen::Index drop = std::min<Eigen::Index>(config.transient, run.outputs.cols());
  run.outputs = run.outputs.rightCols(run.outputs.cols() - drop).eval();
  if (run.diverged_at) *run.diverged_at = std::max<Eigen::Index>(0, *run.diverged_at - config.transient);
  return run;
}

Forecast forecast(const ExperimentConfig& config, const TrainedModel& model, Eigen::Index steps) {
  const double beta = config.training_betas.back();
  Forecast f;
  f.run = continue_from_training(model, drive_beta(config, beta), steps, loop_options(config));
  f.truth = ground_truth(config, beta, config.segment_length + steps).rightCols(steps);
  return f;
}

PoincareSet section_of(const ExperimentConfig& config, const Matrix& trajectory, double beta) {
  PoincareSet set = config.system == SystemKind::kPendulum
                        ? poincare_section(trajectory, config.dt, config.section)
                        : map_section(trajectory);
  set.beta = beta;
  return set;
}

Projection projection_of(const ExperimentConfig& config) {
  return config.system == SystemKind::kPendulum ? pendulum_projection() : map_projection();
}

double observable_energy(const ExperimentConfig& config, const Eigen::Ref<const Vector>& u) {
  if (config.system != SystemKind::kPendulum)
    throw std::invalid_argument("energy is defined for the pendulum only");
  return pendulum_energy(u);
}

std::vector<BetaOutcome> run_kam(const ExperimentConfig& config, const TrainedModel& model,
                                 const std::vector<double>& betas, const KamOptions& options) {
  if (betas.empty()) throw ConfigError("kam: empty beta list");
  std::vector<BetaOutcome> out(betas.size());
  parallel_for(betas.size(), config.threads, [&](std::size_t i) {
    BetaOutcome& o = out[i];
    o.beta = betas[i];
    try {
      const PredictionRun run = predict_at(config, model, o.beta, config.prediction_steps);
      o.diverged_at = run.diverged_at;
      if (run.diverged()) throw NumericalError("closed loop diverged");
      o.model = section_of(config, run.outputs, o.beta);
      if (options.lyapunov) o.model_lyapunov = series_lyapunov(run.outputs, config.dt, config.lyapunov);
      if (options.ground_truth) {
        const Matrix truth = ground_truth(config, o.beta, config.prediction_steps);
        o.machine = section_of(config, truth, o.beta);
        if (options.lyapunov) o.machine_lyapunov = series_lyapunov(truth, config.dt, config.lyapunov);
        if (o.model->size() > 0 && o.machine->size() > 0)
          o.distance = climate_distance(*o.machine, *o.model, projection_of(config));
        else
          o.error = "empty section";
      }
    } catch (const std::exception& e) {
      o.error = e.what();
    }
  });
  return out;
}

std::vector<BetaOutcome> run_standard_kam(const ExperimentConfig& config,
                                          const std::vector<double>& betas,
                                          const KamOptions& options) {
  if (betas.empty()) throw ConfigError("kam: empty beta list");
  std::vector<BetaOutcome> out(betas.size());
  parallel_for(betas.size(), config.threads, [&](std::size_t i) {
    BetaOutcome& o = out[i];
    o.beta = betas[i];
    try {
      ExperimentConfig single = config;
      single.mode = TrainingMode::kStandard;
      single.training_betas = {o.beta};
      single.threads = 1;
      const TrainedModel model = train_model(single);
      const Forecast f = forecast(single, model, config.prediction_steps);
      o.diverged_at = f.run.diverged_at;
      if (f.run.diverged()) throw NumericalError("closed loop diverged");
      o.model = section_of(config, f.run.outputs, o.beta);
      if (options.lyapunov) o.model_lyapunov = series_lyapunov(f.run.outputs, config.dt, config.lyapunov);
      if (options.ground_truth) {
        o.machine = section_of(config, f.truth, o.beta);
        if (options.lyapunov) o.machine_lyapunov = series_lyapunov(f.truth, config.dt, config.lyapunov);
        if (o.model->size() > 0 && o.machine->size() > 0)
          o.distance = climate_distance(*o.machine, *o.model, projection_of(config));
        else
          o.error = "empty section";
      }
    } catch (const std::exception& e) {
      o.error = e.what();
    }
  });
  return out;
}

namespace {

double log_uniform(Rng& rng, const std::array<double, 2>& log10_range) {
  return std::pow(10.0, rng.uniform(log10_range[0], log10_range[1]));
}

double draw(Rng& rng, const std::array<double, 2>& range) {
  return range[0] == range[1] ? range[0] : rng.uniform(range[0], range[1]);
}

void score_trial(const ExperimentConfig& config, const Corpus& corpus, const Matrix& held_out,
                 HyperoptTrial& trial) {
  auto res = std::make_shared<const Reservoir>(build_reservoir(trial.reservoir));
  const TrainedModel model = train(res, corpus, config.washout, config.state_seed);
  const double beta = corpus.segments().back().beta;

  // One-step error on the held-out span, teacher-forced from the final state.
  ReservoirState r = model.final_state;
  Vector scratch;
  double sq = 0.0;
  for (Eigen::Index k = 0; k < held_out.cols(); ++k) {
    sq += (model.readout(r) - held_out.col(k)).squaredNorm();
    res->advance(r, held_out.col(k), beta, scratch);
  }
  trial.validation_rmse = std::sqrt(sq / static_cast<double>(held_out.size()));

  const PredictionRun run = continue_from_training(model, beta, held_out.cols(), loop_options(config));
  const double span = static_cast<double>(held_out.cols()) * config.dt;
  if (run.diverged()) {
    trial.valid_time = 0.0;
    if (run.outputs.cols() > 0)
      trial.valid_time = valid_time(run.outputs, held_out.leftCols(run.outputs.cols()),
                                    config.valid_threshold, 0.0, config.dt);
  } else {
    trial.valid_time = valid_time(run.outputs, held_out, config.valid_threshold, 0.0, config.dt);
  }
  if (!std::isfinite(trial.validation_rmse)) throw NumericalError("non-finite validation error");
  trial.score = std::log(std::max(trial.validation_rmse, 1e-300)) - trial.valid_time / span;
}

}  // namespace

std::vector<HyperoptTrial> hyperopt(const ExperimentConfig& config) {
  const auto& h = config.hyperopt;
  if (h.budget < 1) throw ConfigError("hyperopt.budget: must be >= 1");
  std::vector<HyperoptTrial> trials(static_cast<std::size_t>(h.budget));
  Rng rng(derive_seed(config.seed, kStreamHyperopt));
  for (int i = 0; i < h.budget; ++i) {
    HyperoptTrial& t = trials[static_cast<std::size_t>(i)];
    t.index = i;
    t.reservoir = config.reservoir;
    t.reservoir.seed = config.seed;
    t.reservoir.dt = config.dt;
    t.reservoir.density = draw(rng, h.ranges.density);
    t.reservoir.spectral_radius = draw(rng, h.ranges.spectral_radius);
    t.reservoir.leak = draw(rng, h.ranges.leak);
    t.reservoir.input_scale = draw(rng, h.ranges.input_scale);
    t.reservoir.ridge = h.ranges.log10_ridge[0] == h.ranges.log10_ridge[1]
                            ? std::pow(10.0, h.ranges.log10_ridge[0])
                            : log_uniform(rng, h.ranges.log10_ridge);
  }

  const Corpus corpus = training_corpus(config);
  const double last = config.training_betas.back();
  const Matrix held_out = ground_truth(config, last, config.segment_length + h.validation_steps)
                              .rightCols(h.validation_steps);
  parallel_for(trials.size(), config.threads, [&](std::size_t i) {
    HyperoptTrial& t = trials[i];
    try {
      score_trial(config, corpus, held_out, t);
    } catch (const std::exception& e) {
      t.error = e.what();
      t.score = std::numeric_limits<double>::infinity();
    }
  });
  std::stable_sort(trials.begin(), trials.end(),
                   [](const HyperoptTrial& a, const HyperoptTrial& b) { return a.score < b.score; });
  return trials;
}

}  // namespace hamrc

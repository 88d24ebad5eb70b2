#pragma once

#include <atomic>
#include <functional>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "hamrc/analysis.hpp"
#include "hamrc/config.hpp"
#include "hamrc/prediction.hpp"
#include "hamrc/training.hpp"

namespace hamrc {

/// Runs fn(i) for i in [0, n) on up to `threads` workers. The first
/// exception thrown by any task is rethrown after all workers finish.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

/// Observable at the initial condition encoded by beta: pendulum
/// [0.6, 0, beta, 0]; standard map (theta, p) = (pi, 2 pi beta).
Vector initial_observation(const ExperimentConfig& config, double beta);

/// `samples` observables starting with the initial condition itself.
Matrix ground_truth(const ExperimentConfig& config, double beta, Eigen::Index samples);

/// Value of the parameter channel: beta in parameter-aware mode, 0 otherwise.
double drive_beta(const ExperimentConfig& config, double beta);

Corpus training_corpus(const ExperimentConfig& config);
TrainedModel train_model(const ExperimentConfig& config);

ClosedLoopOptions loop_options(const ExperimentConfig& config);

/// Closed loop from initial_observation(beta) and the final training state;
/// the first config.transient outputs are discarded.
PredictionRun predict_at(const ExperimentConfig& config, const TrainedModel& model, double beta,
                         Eigen::Index steps);

/// Forecast continuing the last training segment, with the matching truth.
struct Forecast {
  PredictionRun run;
  Matrix truth;
};
Forecast forecast(const ExperimentConfig& config, const TrainedModel& model, Eigen::Index steps);

PoincareSet section_of(const ExperimentConfig& config, const Matrix& trajectory, double beta);
Projection projection_of(const ExperimentConfig& config);
double observable_energy(const ExperimentConfig& config, const Eigen::Ref<const Vector>& u);

/// Per-beta result of a diagram sweep. `error` is set when that beta failed.
struct BetaOutcome {
  double beta = 0.0;
  std::optional<PoincareSet> model;
  std::optional<PoincareSet> machine;
  std::optional<double> distance;
  std::optional<double> model_lyapunov;
  std::optional<double> machine_lyapunov;
  std::optional<Eigen::Index> diverged_at;
  std::string error;
};

struct KamOptions {
  bool ground_truth = true;
  bool lyapunov = false;
};

/// Sections of model and (optionally) machine trajectories for each beta,
/// with their climate distance. Failures are isolated per beta.
std::vector<BetaOutcome> run_kam(const ExperimentConfig& config, const TrainedModel& model,
                                 const std::vector<double>& betas, const KamOptions& options);

/// Standard-mode sweep: one model per beta, trained on that beta's own
/// trajectory and run on from the end of training; the machine reference is
/// the true continuation. Model seeds are config.seed for every beta.
std::vector<BetaOutcome> run_standard_kam(const ExperimentConfig& config,
                                          const std::vector<double>& betas,
                                          const KamOptions& options);

struct HyperoptTrial {
  int index = 0;
  ReservoirConfig reservoir;
  double validation_rmse = 0.0;
  /// Raw time until the forecast leaves the threshold.
  double valid_time = 0.0;
  /// ln(validation_rmse) - valid_time / span; lower is better.
  double score = 0.0;
  std::string error;
};

/// Draws config.hyperopt.budget reservoir configs uniformly in the
/// configured ranges (nodes fixed, ridge log-uniform), trains each on the
/// training corpus and scores it on the span following the last segment.
/// Returns all trials, best first.
std::vector<HyperoptTrial> hyperopt(const ExperimentConfig& config);

}  // namespace hamrc

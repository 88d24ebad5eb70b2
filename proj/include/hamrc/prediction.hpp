#pragma once

#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "hamrc/training.hpp"

namespace hamrc {

struct ClosedLoopOptions {
  /// Any output component above this magnitude stops the run.
  double divergence_limit = 1e6;
  /// Index pairs (sin, cos) projected back onto the unit circle before being
  /// fed back. Empty by default: raw outputs are fed back.
  std::vector<std::pair<int, int>> unit_circle_pairs;
};

/// Outcome of running a trained model as an autonomous system.
struct PredictionRun {
  std::vector<double> betas;  // one entry for constant-beta runs
  Vector initial_input;
  ReservoirState initial_state;
  Matrix outputs;  // d_out x (steps actually taken)
  ReservoirState final_state;
  /// Step index (0-based) at which an output exceeded the divergence limit;
  /// `outputs` holds only the steps before it.
  std::optional<Eigen::Index> diverged_at;

  bool diverged() const { return diverged_at.has_value(); }
};

/// Iterates r <- step(r, u, beta); u <- W_out r and records u each step.
PredictionRun closed_loop(const TrainedModel& model, double beta, const Vector& u0,
                          const ReservoirState& r0, Eigen::Index steps,
                          const ClosedLoopOptions& options = {});

/// Variant driven by a beta schedule; one step per schedule entry.
PredictionRun closed_loop(const TrainedModel& model, std::span<const double> betas,
                          const Vector& u0, const ReservoirState& r0,
                          const ClosedLoopOptions& options = {});

/// Forecast continuing straight after training: the first column is
/// W_out applied to the final training state, each later column is a
/// closed-loop step. Columns line up with the samples following the corpus.
PredictionRun continue_from_training(const TrainedModel& model, double beta,
                                     Eigen::Index steps,
                                     const ClosedLoopOptions& options = {});

inline constexpr double kDefaultValidThreshold = 0.25;

/// Lyapunov-scaled time until the error ||pred(t) - truth(t)|| / RMS(truth)
/// first exceeds `threshold`; sample k sits at time k*dt and RMS(truth) is
/// sqrt(mean_t ||truth(t)||^2). Returns
/// lyapunov * N * dt when the threshold is never crossed, and raw time when
/// lyapunov <= 0.
double valid_time(const Matrix& pred, const Matrix& truth, double threshold,
                  double lyapunov, double dt);

}  // namespace hamrc

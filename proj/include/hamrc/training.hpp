#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "hamrc/reservoir.hpp"

namespace hamrc {

/// Observed states recorded under one control-parameter value. Columns of
/// `states` are successive samples.
struct TrajectorySegment {
  double beta = 0.0;
  Matrix states;
  double dt = 1.0;
};

/// Ordered training segments; beta(t) is a step function over their
/// concatenation.
class Corpus {
 public:
  const std::vector<TrajectorySegment>& segments() const { return segments_; }
  int input_dim() const;
  double dt() const { return segments_.front().dt; }
  Eigen::Index total_length() const;

  /// beta(t) expanded over every sample of the concatenated corpus.
  std::vector<double> beta_series() const;
  /// All samples concatenated column-wise.
  Matrix concatenated() const;

 private:
  friend Corpus assemble_corpus(std::vector<TrajectorySegment> segments);
  std::vector<TrajectorySegment> segments_;
};

/// Validates and wraps segments. Throws ConfigError naming the first
/// segment whose dimension, dt, length or entries are inconsistent.
Corpus assemble_corpus(std::vector<TrajectorySegment> segments);

/// Paired reservoir states and one-step-ahead targets.
struct Harvest {
  Matrix states;   // d_r x L'
  Matrix targets;  // d_in x L'
  ReservoirState final_state;
};

/// Drives the reservoir open-loop through every sample of every segment
/// without resetting between segments. The state produced by consuming
/// sample t is paired with sample t+1 of the same segment; the first
/// `washout` pairs of each segment are dropped, so each segment contributes
/// T - washout - 1 columns.
Harvest harvest_states(const Reservoir& res, const Corpus& corpus, int washout,
                       const ReservoirState& initial_state);

struct RidgeOptions {
  /// Reciprocal condition estimate below which an unregularized solve is
  /// rejected as singular.
  double singular_rcond = 1e-15;
  /// Reciprocal condition estimate below which a warning is emitted.
  double warn_rcond = 1e-12;
};

/// W_out = U V^T (V V^T + lambda I)^-1, solved through a Cholesky
/// factorization of the regularized Gram matrix (no explicit inverse).
Matrix ridge_readout(const Matrix& states, const Matrix& targets, double lambda,
                     const RidgeOptions& options = {});

/// Everything needed to replay a training run.
struct TrainingManifest {
  std::vector<double> betas;
  std::vector<Eigen::Index> lengths;
  int washout = 0;
  double ridge = 0.0;
  std::uint64_t reservoir_seed = 0;
  std::uint64_t state_seed = 0;
  Eigen::Index harvested_columns = 0;
  double training_rmse = 0.0;

  bool operator==(const TrainingManifest&) const = default;
};

/// A reservoir with its fitted readout. Immutable and shareable.
struct TrainedModel {
  std::shared_ptr<const Reservoir> reservoir;
  Matrix w_out;
  ReservoirState final_state;
  TrainingManifest manifest;

  Vector readout(const ReservoirState& r) const { return w_out * r; }
};

/// Harvests states from `corpus` (starting at initial_reservoir_state(state_seed))
/// and fits the readout with the reservoir's ridge parameter.
TrainedModel train(std::shared_ptr<const Reservoir> res, const Corpus& corpus,
                   int washout, std::uint64_t state_seed);

/// Root-mean-square one-step error of `model` over harvested pairs.
double one_step_rmse(const Matrix& w_out, const Harvest& harvest);

}  // namespace hamrc

#pragma once

#include <cstdint>
#include <span>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace hamrc {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Node states r(t) of the reservoir network.
using ReservoirState = Eigen::VectorXd;

/// Hyperparameters of a parameter-aware echo-state reservoir.
///
/// The six tuned quantities follow the usual (nodes, density, spectral
/// radius, leak, input scale, ridge) ordering used by the presets.
struct ReservoirConfig {
  int nodes = 500;
  double density = 0.1;
  double spectral_radius = 1.0;
  double leak = 1.0;
  double input_scale = 1.0;
  double ridge = 1e-6;
  int input_dim = 4;
  int output_dim = 4;
  double dt = 0.2;
  std::uint64_t seed = 0;

  /// Throws ConfigError naming the first violated constraint.
  void validate() const;

  bool operator==(const ReservoirConfig&) const = default;
};

/// Fixed random network: adjacency A, input weights W_in and control bias b.
///
/// Immutable after construction and safe to share across threads. Dense
/// adjacency graphs are additionally cached in dense form so that the state
/// update runs at matrix-vector speed; the sparse form stays authoritative.
class Reservoir {
 public:
  /// Assembles a reservoir from explicit parts. Only dimensions and the leak
  /// range are checked, so degenerate networks (e.g. A = 0) can be built.
  Reservoir(ReservoirConfig config, SparseMatrix adjacency, Matrix input_weights,
            Vector bias);

  const ReservoirConfig& config() const { return config_; }
  const SparseMatrix& adjacency() const { return adjacency_; }
  const Matrix& input_weights() const { return input_weights_; }
  const Vector& bias() const { return bias_; }
  int size() const { return static_cast<int>(bias_.size()); }
  int input_dim() const { return static_cast<int>(input_weights_.cols()); }

  /// In-place state update. `scratch` is resized as needed. Throws
  /// NumericalError("non-finite drive") on non-finite input.
  void advance(Eigen::Ref<Vector> state, const Eigen::Ref<const Vector>& input,
               double beta, Vector& scratch) const;

  bool operator==(const Reservoir& other) const;

 private:
  ReservoirConfig config_;
  SparseMatrix adjacency_;
  Matrix input_weights_;
  Vector bias_;
  Matrix dense_adjacency_;
  bool use_dense_ = false;
};

/// Draws A (pattern, then values), W_in and b from one generator seeded with
/// `seed`, in that order, and rescales A to the configured spectral radius.
/// Raw draws with spectral radius below 1e-12 are redrawn up to 16 times.
Reservoir build_reservoir(const ReservoirConfig& config, std::uint64_t seed);
inline Reservoir build_reservoir(const ReservoirConfig& config) {
  return build_reservoir(config, config.seed);
}

/// Largest eigenvalue magnitude by Arnoldi iteration with full
/// re-orthogonalization. Complex-conjugate dominant pairs and nearly
/// degenerate magnitudes are resolved through the Ritz values of the
/// projected Hessenberg matrix.
double estimate_spectral_radius(const SparseMatrix& m);

/// Returns m scaled so that its spectral radius equals `rho`.
SparseMatrix rescale_spectral_radius(const SparseMatrix& m, double rho);

/// Reservoir initial condition: components uniform in [-1, 1], drawn from a
/// stream derived from `seed` that is independent of the network draw.
ReservoirState initial_reservoir_state(int nodes, std::uint64_t seed);

/// r' = (1 - alpha) r + alpha tanh(A r + W_in u + beta b)
ReservoirState step(const Reservoir& res, const ReservoirState& state,
                    const Vector& input, double beta);

/// Open-loop drive. Column k of the result is the state after consuming
/// input column k under betas[k].
Matrix drive(const Reservoir& res, const ReservoirState& state0,
             const Matrix& inputs, std::span<const double> betas);

}  // namespace hamrc

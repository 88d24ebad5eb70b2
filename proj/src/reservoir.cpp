#include "hamrc/reservoir.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "hamrc/errors.hpp"
#include "hamrc/rng.hpp"

namespace hamrc {

namespace {

constexpr double kDegenerateRadius = 1e-12;
constexpr int kMaxRedraws = 16;
// Adjacency graphs at least this dense are stepped through a dense copy.
constexpr double kDenseStepThreshold = 0.1;

bool all_finite(const Eigen::Ref<const Vector>& v) {
  return v.allFinite();
}

SparseMatrix draw_adjacency(int n, double density, Rng& rng) {
  // Pattern first, then values, so the draw order is fixed and documented.
  std::vector<std::pair<int, int>> pattern;
  pattern.reserve(static_cast<std::size_t>(
      std::ceil(density * static_cast<double>(n) * n * 1.05) + 16));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (rng.bernoulli(density)) pattern.emplace_back(i, j);
    }
  }
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(pattern.size());
  for (const auto& [i, j] : pattern) {
    triplets.emplace_back(i, j, rng.uniform(-1.0, 1.0));
  }
  SparseMatrix a(n, n);
  a.setFromTriplets(triplets.begin(), triplets.end());
  return a;
}

// Ritz value of largest magnitude of the leading k x k block of h.
struct TopRitz {
  std::complex<double> value;
  Eigen::VectorXcd vector;
};

TopRitz top_ritz(const Matrix& h, int k, bool with_vector) {
  Eigen::EigenSolver<Matrix> solver(h.topLeftCorner(k, k), with_vector);
  const auto& values = solver.eigenvalues();
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < values.size(); ++i) {
    if (std::abs(values[i]) > std::abs(values[best])) best = i;
  }
  TopRitz out{values[best], {}};
  if (with_vector) {
    out.vector = solver.eigenvectors().col(best);
    out.vector.normalize();
  }
  return out;
}

}  // namespace

void ReservoirConfig::validate() const {
  auto fail = [](const std::string& what) {
    throw ConfigError("invalid reservoir config: " + what);
  };
  if (nodes < 1) fail("nodes must be >= 1");
  if (!(density >= 0.0 && density <= 1.0)) fail("density must lie in [0, 1]");
  if (!(spectral_radius > 0.0) || !std::isfinite(spectral_radius))
    fail("spectral_radius must be > 0");
  if (!(leak > 0.0 && leak <= 1.0)) fail("leak must lie in (0, 1]");
  if (!(input_scale > 0.0) || !std::isfinite(input_scale))
    fail("input_scale must be > 0");
  if (!(ridge >= 0.0) || !std::isfinite(ridge)) fail("ridge must be >= 0");
  if (input_dim < 1) fail("input_dim must be >= 1");
  if (output_dim != input_dim) fail("output_dim must equal input_dim");
  if (!(dt > 0.0) || !std::isfinite(dt)) fail("dt must be > 0");
}

Reservoir::Reservoir(ReservoirConfig config, SparseMatrix adjacency,
                     Matrix input_weights, Vector bias)
    : config_(config),
      adjacency_(std::move(adjacency)),
      input_weights_(std::move(input_weights)),
      bias_(std::move(bias)) {
  const auto n = bias_.size();
  if (n < 1) throw std::invalid_argument("reservoir needs at least one node");
  if (adjacency_.rows() != n || adjacency_.cols() != n)
    throw std::invalid_argument("adjacency must be nodes x nodes");
  if (input_weights_.rows() != n)
    throw std::invalid_argument("input weights must have one row per node");
  if (!(config_.leak >= 0.0 && config_.leak <= 1.0))
    throw std::invalid_argument("leak must lie in [0, 1]");
  adjacency_.makeCompressed();
  const double fill = static_cast<double>(adjacency_.nonZeros()) /
                      (static_cast<double>(n) * static_cast<double>(n));
  use_dense_ = fill >= kDenseStepThreshold && n > 1;
  if (use_dense_) dense_adjacency_ = Matrix(adjacency_);
}

void Reservoir::advance(Eigen::Ref<Vector> state,
                        const Eigen::Ref<const Vector>& input, double beta,
                        Vector& scratch) const {
  if (input.size() != input_weights_.cols() || state.size() != bias_.size())
    throw std::invalid_argument("reservoir step: dimension mismatch");
  if (!all_finite(input) || !std::isfinite(beta))
    throw NumericalError("non-finite drive");
  if (use_dense_) {
    scratch.noalias() = dense_adjacency_ * state;
  } else {
    scratch.noalias() = adjacency_ * state;
  }
  scratch.noalias() += input_weights_ * input;
  scratch += beta * bias_;
  const double alpha = config_.leak;
  state = (1.0 - alpha) * state + alpha * scratch.array().tanh().matrix();
}

bool Reservoir::operator==(const Reservoir& other) const {
  if (!(config_ == other.config_)) return false;
  if (bias_ != other.bias_ || input_weights_ != other.input_weights_)
    return false;
  if (adjacency_.nonZeros() != other.adjacency_.nonZeros()) return false;
  return Matrix(adjacency_) == Matrix(other.adjacency_);
}

namespace {

// A matrix whose directed graph has no cycle (self-loops included) is nilpotent.
bool acyclic_pattern(const SparseMatrix& m) {
  const auto n = m.rows();
  std::vector<int> indegree(static_cast<std::size_t>(n), 0);
  for (Eigen::Index r = 0; r < n; ++r) {
    for (SparseMatrix::InnerIterator it(m, r); it; ++it) {
      if (it.value() != 0.0) ++indegree[static_cast<std::size_t>(it.col())];
    }
  }
  std::vector<Eigen::Index> ready;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (indegree[static_cast<std::size_t>(i)] == 0) ready.push_back(i);
  }
  Eigen::Index removed = 0;
  while (!ready.empty()) {
    const Eigen::Index r = ready.back();
    ready.pop_back();
    ++removed;
    for (SparseMatrix::InnerIterator it(m, r); it; ++it) {
      if (it.value() != 0.0 && --indegree[static_cast<std::size_t>(it.col())] == 0)
        ready.push_back(it.col());
    }
  }
  return removed == n;
}

}  // namespace

double estimate_spectral_radius(const SparseMatrix& m) {
  if (m.rows() != m.cols())
    throw std::invalid_argument("spectral radius requires a square matrix");
  const int n = static_cast<int>(m.rows());
  if (n == 0 || m.nonZeros() == 0) return 0.0;
  for (Eigen::Index outer = 0; outer < m.outerSize(); ++outer) {
    for (SparseMatrix::InnerIterator it(m, outer); it; ++it) {
      if (!std::isfinite(it.value()))
        throw std::invalid_argument("spectral radius requires finite entries");
    }
  }
  if (acyclic_pattern(m)) return 0.0;

  constexpr int kMaxRestarts = 12;
  constexpr double kResidualTol = 1e-10;
  constexpr double kStableTol = 1e-12;
  const int max_dim = std::min(n, 600);

  Rng rng(derive_seed(0x5EC7A1ULL, kStreamSpectralStart));
  Vector start(n);
  for (int i = 0; i < n; ++i) start[i] = rng.uniform(-1.0, 1.0);

  double best = 0.0;
  for (int restart = 0; restart <= kMaxRestarts; ++restart) {
    Matrix q(n, max_dim + 1);
    Matrix h = Matrix::Zero(max_dim + 1, max_dim);
    q.col(0) = start / start.norm();
    double previous = -1.0;
    int next_check = std::min(max_dim, 10);
    Vector w(n);
    int k = 0;
    bool breakdown = false;
    for (int j = 0; j < max_dim; ++j) {
      w.noalias() = m * q.col(j);
      const double w_norm0 = w.norm();
      // Classical Gram-Schmidt, applied twice.
      for (int pass = 0; pass < 2; ++pass) {
        Vector coeff = q.leftCols(j + 1).transpose() * w;
        w.noalias() -= q.leftCols(j + 1) * coeff;
        h.col(j).head(j + 1) += coeff;
      }
      const double beta = w.norm();
      h(j + 1, j) = beta;
      k = j + 1;
      if (beta <= 1e-13 * std::max(w_norm0, 1e-300)) {
        breakdown = true;  // invariant subspace: Ritz values are exact
        break;
      }
      q.col(j + 1) = w / beta;
      if (k == next_check) {
        const double mag = std::abs(top_ritz(h, k, false).value);
        if (std::abs(mag - previous) <= kStableTol * mag) {
          const TopRitz ritz = top_ritz(h, k, true);
          const double residual = beta * std::abs(ritz.vector[k - 1]);
          best = std::abs(ritz.value);
          if (residual <= kResidualTol * best) return best;
        }
        previous = mag;
        next_check = std::min(max_dim, k + std::max(10, k / 10));
      }
    }
    const TopRitz ritz = top_ritz(h, k, true);
    best = std::abs(ritz.value);
    if (breakdown || k == n) return best;
    // Explicit restart from the dominant Ritz direction. For a complex pair
    // the real and imaginary parts span the invariant plane.
    const Eigen::VectorXcd x = q.leftCols(k).cast<std::complex<double>>() * ritz.vector;
    start = x.real() + x.imag();
    if (!(start.norm() > 0.0)) start = q.col(0);
  }
  return best;
}

SparseMatrix rescale_spectral_radius(const SparseMatrix& m, double rho) {
  const double radius = estimate_spectral_radius(m);
  if (!(radius > 0.0))
    throw NumericalError("cannot rescale a matrix with zero spectral radius");
  SparseMatrix out = m * (rho / radius);
  out.makeCompressed();
  return out;
}

Reservoir build_reservoir(const ReservoirConfig& config, std::uint64_t seed) {
  config.validate();
  ReservoirConfig cfg = config;
  cfg.seed = seed;
  const int n = cfg.nodes;
  Rng rng(seed);
  for (int attempt = 0; attempt <= kMaxRedraws; ++attempt) {
    SparseMatrix raw = draw_adjacency(n, cfg.density, rng);
    const double radius = estimate_spectral_radius(raw);
    if (radius < kDegenerateRadius) continue;
    SparseMatrix a = raw * (cfg.spectral_radius / radius);
    a.makeCompressed();
    Matrix w_in(n, cfg.input_dim);
    for (int j = 0; j < cfg.input_dim; ++j) {
      for (int i = 0; i < n; ++i) {
        w_in(i, j) = rng.uniform(-cfg.input_scale, cfg.input_scale);
      }
    }
    Vector b(n);
    for (int i = 0; i < n; ++i) b[i] = rng.uniform(-cfg.input_scale, cfg.input_scale);
    return Reservoir(cfg, std::move(a), std::move(w_in), std::move(b));
  }
  throw NumericalError("degenerate reservoir draw");
}

ReservoirState initial_reservoir_state(int nodes, std::uint64_t seed) {
  Rng rng(derive_seed(seed, kStreamInitialState));
  ReservoirState r(nodes);
  for (int i = 0; i < nodes; ++i) r[i] = rng.uniform(-1.0, 1.0);
  return r;
}

ReservoirState step(const Reservoir& res, const ReservoirState& state,
                    const Vector& input, double beta) {
  ReservoirState next = state;
  Vector scratch(res.size());
  res.advance(next, input, beta, scratch);
  return next;
}

Matrix drive(const Reservoir& res, const ReservoirState& state0,
             const Matrix& inputs, std::span<const double> betas) {
  if (static_cast<std::size_t>(inputs.cols()) != betas.size())
    throw std::invalid_argument("drive: inputs and betas differ in length");
  Matrix out(res.size(), inputs.cols());
  ReservoirState r = state0;
  Vector scratch(res.size());
  for (Eigen::Index t = 0; t < inputs.cols(); ++t) {
    res.advance(r, inputs.col(t), betas[static_cast<std::size_t>(t)], scratch);
    out.col(t) = r;
  }
  return out;
}

}  // namespace hamrc

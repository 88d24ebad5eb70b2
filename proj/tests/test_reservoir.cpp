#include "doctest.h"

#include <cmath>
#include <functional>
#include <vector>

#include <Eigen/Eigenvalues>

#include "hamrc/errors.hpp"
#include "hamrc/reservoir.hpp"
#include "hamrc/rng.hpp"

using namespace hamrc;

namespace {

SparseMatrix sparse(const Matrix& m) { return m.sparseView(0.0, 0.0); }

double dense_radius(const SparseMatrix& m) {
  const Matrix d(m);
  return Eigen::EigenSolver<Matrix>(d, false).eigenvalues().cwiseAbs().maxCoeff();
}

Reservoir scalar_reservoir(double a, double w, double b, double leak) {
  ReservoirConfig c;
  c.nodes = 1;
  c.input_dim = c.output_dim = 1;
  c.leak = leak;
  SparseMatrix adj(1, 1);
  if (a != 0.0) adj.insert(0, 0) = a;
  return Reservoir(c, adj, Matrix::Constant(1, 1, w), Vector::Constant(1, b));
}

}  // namespace

TEST_SUITE("reservoir") {

TEST_CASE("spectral radius of small exact cases") {
  Matrix d = Matrix::Zero(2, 2);
  d(0, 0) = 2.0;
  d(1, 1) = -3.0;
  CHECK(estimate_spectral_radius(sparse(d)) == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(estimate_spectral_radius(SparseMatrix(4, 4)) == 0.0);

  // Rotation block: complex pair of modulus 2.
  Matrix rot(2, 2);
  rot << 0.0, -2.0, 2.0, 0.0;
  CHECK(estimate_spectral_radius(sparse(rot)) == doctest::Approx(2.0).epsilon(1e-12));

  // Nilpotent shift.
  Matrix shift = Matrix::Zero(5, 5);
  for (int i = 0; i + 1 < 5; ++i) shift(i, i + 1) = 1.0;
  CHECK(estimate_spectral_radius(sparse(shift)) == 0.0);
  Matrix single = Matrix::Zero(2, 2);
  single(0, 1) = 0.7;
  CHECK_THROWS_AS(rescale_spectral_radius(sparse(single), 1.0), NumericalError);
}

TEST_CASE("spectral radius agrees with a dense eigensolver") {
  Rng rng(17);
  for (int trial = 0; trial < 10; ++trial) {
    Matrix m(50, 50);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-1.0, 1.0);
    const SparseMatrix s = sparse(m);
    CHECK(estimate_spectral_radius(s) == doctest::Approx(dense_radius(s)).epsilon(1e-6));
  }
}

TEST_CASE("spectral radius on nearly degenerate sparse draws") {
  // Near-tied dominant magnitudes are common for large sparse random graphs.
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    ReservoirConfig c;
    c.nodes = 400;
    c.density = 0.05;
    c.spectral_radius = 1.0;
    const Reservoir r = build_reservoir(c, seed);
    CHECK(dense_radius(r.adjacency()) == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("spectral radius rejects non-square input") {
  CHECK_THROWS_AS(estimate_spectral_radius(SparseMatrix(3, 4)), std::invalid_argument);
}

TEST_CASE("rescaling") {
  SparseMatrix id(3, 3);
  id.setIdentity();
  const Matrix scaled(rescale_spectral_radius(id, 2.0));
  CHECK((scaled - 2.0 * Matrix::Identity(3, 3)).norm() < 1e-14);

  Matrix four = Matrix::Zero(2, 2);
  four << 4.0, 0.0, 1.0, -2.0;  // eigenvalues 4, -2
  const Matrix q(rescale_spectral_radius(sparse(four), 1.0));
  CHECK((q - four / 4.0).norm() < 1e-14);

  CHECK_THROWS_AS(rescale_spectral_radius(SparseMatrix(2, 2), 1.0), NumericalError);

  Rng rng(5);
  std::vector<Eigen::Triplet<double>> t;
  for (int i = 0; i < 300; ++i) {
    for (int j = 0; j < 300; ++j) {
      if (rng.bernoulli(0.01)) t.emplace_back(i, j, rng.uniform(-1.0, 1.0));
    }
  }
  SparseMatrix m(300, 300);
  m.setFromTriplets(t.begin(), t.end());
  const SparseMatrix r = rescale_spectral_radius(m, 1.62);
  CHECK(r.nonZeros() == m.nonZeros());
  CHECK(dense_radius(r) == doctest::Approx(1.62).epsilon(1e-6));
}

TEST_CASE("build: tiny dense config hits the target radius") {
  ReservoirConfig c;
  c.nodes = 2;
  c.density = 1.0;
  c.spectral_radius = 0.5;
  c.input_scale = 1.0;
  const Reservoir r = build_reservoir(c, 9);
  CHECK(dense_radius(r.adjacency()) == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("build: determinism and seed sensitivity") {
  ReservoirConfig c;
  c.nodes = 60;
  c.density = 0.2;
  c.spectral_radius = 0.9;
  c.input_scale = 0.7;
  const Reservoir a = build_reservoir(c, 42);
  const Reservoir b = build_reservoir(c, 42);
  const Reservoir other = build_reservoir(c, 43);
  CHECK(a == b);
  CHECK_FALSE(a == other);
  CHECK(Matrix(a.adjacency()) == Matrix(b.adjacency()));
  CHECK(a.input_weights() == b.input_weights());
  CHECK(a.bias() == b.bias());
}

TEST_CASE("build: weights in range and density near target") {
  ReservoirConfig c;
  c.nodes = 500;
  c.density = 0.48;
  c.spectral_radius = 1.48;
  c.leak = 0.25;
  c.input_scale = 1.52;
  c.ridge = 1e-9;
  const Reservoir r = build_reservoir(c, 1);
  CHECK(r.input_weights().cwiseAbs().maxCoeff() <= 1.52);
  CHECK(r.bias().cwiseAbs().maxCoeff() <= 1.52);
  const double n2 = 500.0 * 500.0;
  const double frac = static_cast<double>(r.adjacency().nonZeros()) / n2;
  CHECK(std::abs(frac - 0.48) <= 0.01);
  const double sd = std::sqrt(0.48 * 0.52 / n2);
  CHECK(std::abs(frac - 0.48) <= 3.0 * sd);
  CHECK(estimate_spectral_radius(r.adjacency()) == doctest::Approx(1.48).epsilon(1e-6));
}

TEST_CASE("build: degenerate draws are rejected") {
  ReservoirConfig c;
  c.nodes = 5;
  c.density = 0.0;
  CHECK_THROWS_WITH_AS(build_reservoir(c, 1), "degenerate reservoir draw", NumericalError);
}

TEST_CASE("config validation") {
  ReservoirConfig c;
  c.leak = 0.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.density = 1.5;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.output_dim = 3;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.ridge = -1.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  CHECK_NOTHROW(ReservoirConfig{}.validate());
}

TEST_CASE("step: closed-form cases") {
  const Reservoir scalar = scalar_reservoir(0.5, 1.0, 1.0, 0.5);
  Vector r0 = Vector::Zero(1);
  const Vector r1 = step(scalar, r0, Vector::Ones(1), 2.0);
  CHECK(std::abs(r1[0] - 0.5 * std::tanh(3.0)) <= 1e-15);
  CHECK(r1[0] == doctest::Approx(0.49752).epsilon(1e-5));

  // Nonzero prior state: (1 - a) r + a tanh(0.5 r + u + beta).
  Vector r = Vector::Constant(1, 0.3);
  const Vector next = step(scalar, r, Vector::Constant(1, -0.2), 0.7);
  CHECK(std::abs(next[0] - (0.5 * 0.3 + 0.5 * std::tanh(0.15 - 0.2 + 0.7))) <= 1e-15);

  const Reservoir frozen = scalar_reservoir(0.5, 1.0, 1.0, 0.0);
  const Vector same = step(frozen, Vector::Constant(1, 0.37), Vector::Constant(1, 9.0), -4.0);
  CHECK(same[0] == 0.37);

  ReservoirConfig c;
  c.nodes = 3;
  c.input_dim = c.output_dim = 2;
  c.leak = 1.0;
  const Reservoir zero(c, SparseMatrix(3, 3), Matrix::Zero(3, 2), Vector::Zero(3));
  CHECK(step(zero, Vector::Constant(3, 0.8), Vector::Ones(2), 3.0).isZero(0.0));
}

TEST_CASE("step: non-finite drive and dimension errors") {
  const Reservoir s = scalar_reservoir(0.5, 1.0, 1.0, 0.5);
  CHECK_THROWS_WITH_AS(step(s, Vector::Zero(1), Vector::Constant(1, NAN), 0.0),
                       "non-finite drive", NumericalError);
  CHECK_THROWS_AS(step(s, Vector::Zero(1), Vector::Constant(1, 1.0), INFINITY), NumericalError);
  CHECK_THROWS_AS(step(s, Vector::Zero(2), Vector::Zero(1), 0.0), std::invalid_argument);
  CHECK_THROWS_AS(step(s, Vector::Zero(1), Vector::Zero(3), 0.0), std::invalid_argument);
}

TEST_CASE("step: boundedness for random drives") {
  ReservoirConfig c;
  c.nodes = 40;
  c.density = 0.3;
  c.spectral_radius = 2.5;
  c.input_scale = 3.0;
  Rng rng(3);
  for (double leak : {1.0, 0.6, 0.05}) {
    c.leak = leak;
    const Reservoir res = build_reservoir(c, 11);
    Vector r = initial_reservoir_state(40, 2);
    for (int k = 0; k < 200; ++k) {
      Vector u(4);
      for (int i = 0; i < 4; ++i) u[i] = rng.uniform(-50.0, 50.0);
      r = step(res, r, u, rng.uniform(-10.0, 10.0));
      REQUIRE(r.allFinite());
      REQUIRE(r.cwiseAbs().maxCoeff() <= 1.0);
    }
  }
}

TEST_CASE("initial state") {
  const ReservoirState a = initial_reservoir_state(1000, 7);
  CHECK(a.size() == 1000);
  CHECK(a.cwiseAbs().maxCoeff() <= 1.0);
  CHECK(std::abs(a.mean()) < 0.1);
  CHECK(a == initial_reservoir_state(1000, 7));
  CHECK_FALSE(a == initial_reservoir_state(1000, 8));
}

TEST_CASE("drive matches iterated step") {
  ReservoirConfig c;
  c.nodes = 4;
  c.density = 0.8;
  c.spectral_radius = 0.9;
  c.leak = 0.7;
  const Reservoir res = build_reservoir(c, 21);
  const ReservoirState r0 = initial_reservoir_state(4, 1);

  CHECK(drive(res, r0, Matrix(4, 0), std::vector<double>{}).cols() == 0);

  Rng rng(8);
  Matrix inputs(4, 25);
  for (Eigen::Index i = 0; i < inputs.size(); ++i) inputs.data()[i] = rng.uniform(-1.0, 1.0);
  const std::vector<double> betas(25, 0.4);
  const Matrix states = drive(res, r0, inputs, betas);
  REQUIRE(states.cols() == 25);
  CHECK(states.col(0) == step(res, r0, inputs.col(0), 0.4));

  // Recursive oracle.
  std::function<Vector(int)> rec = [&](int k) -> Vector {
    return k < 0 ? Vector(r0) : step(res, rec(k - 1), inputs.col(k), 0.4);
  };
  CHECK((states.col(24) - rec(24)).norm() == 0.0);

  CHECK_THROWS_AS(drive(res, r0, inputs, std::vector<double>(3, 0.0)), std::invalid_argument);
}

TEST_CASE("derive_seed streams are distinct and stable") {
  CHECK(derive_seed(1, kStreamInitialState) != derive_seed(1, kStreamSpectralStart));
  CHECK(derive_seed(1, kStreamInitialState) != derive_seed(2, kStreamInitialState));
  CHECK(derive_seed(5, 3) == derive_seed(5, 3));
  Rng r(1);
  for (int i = 0; i < 1000; ++i) {
    const double u = r.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
  }
}

}  // TEST_SUITE

#pragma once

#include <array>
#include <functional>
#include <numbers>
#include <vector>

#include "hamrc/reservoir.hpp"

namespace hamrc {

// ---------------------------------------------------------------------------
// Double pendulum (identical rods, nondimensional time t = sqrt(g/l) tau)
// ---------------------------------------------------------------------------

struct PendulumState {
  double theta1 = 0.0;
  double theta2 = 0.0;
  double omega1 = 0.0;
  double omega2 = 0.0;
};

/// Observation vector [theta1, omega1, theta2, omega2], the layout used for
/// reservoir inputs and trajectory files.
Vector to_observation(const PendulumState& s);
PendulumState from_observation(const Eigen::Ref<const Vector>& u);

/// (omega1, omega2, d omega1/dt, d omega2/dt).
std::array<double, 4> pendulum_derivs(const PendulumState& s);

/// E = 2 w1^2/3 + w2^2/6 + [w1 w2 cos(t1 - t2) - cos t2 - 3 cos t1] / 2
double pendulum_energy(const PendulumState& s);
double pendulum_energy(const Eigen::Ref<const Vector>& observation);

struct PendulumIntegratorOptions {
  int substeps = 8;
  double newton_tol = 1e-13;
  int max_newton = 25;
  /// Relative energy drift above which a trajectory is flagged.
  double drift_budget = 1e-6;
};

struct PendulumTrajectory {
  Matrix samples;  // 4 x steps, observation layout, angles unwrapped
  double dt = 0.0;
  double max_relative_drift = 0.0;
  bool drift_flagged = false;
};

/// Advances `s` by `dt` with `substeps` steps of the three-stage
/// Gauss-Legendre collocation scheme (order 6, symmetric and symplectic).
PendulumState pendulum_advance(const PendulumState& s, double dt,
                               const PendulumIntegratorOptions& options = {});

/// Samples at t = dt, 2 dt, ..., steps * dt.
PendulumTrajectory pendulum_integrate(const PendulumState& s0, Eigen::Index steps,
                                      double dt,
                                      const PendulumIntegratorOptions& options = {});

/// Largest Lyapunov exponent by the two-trajectory Benettin method:
/// separation renormalized to 1e-8 after every unit of time.
double pendulum_lyapunov(const PendulumState& s0, double horizon,
                         const PendulumIntegratorOptions& options = {});

/// Generic Benettin estimator. `advance` maps a state over one
/// renormalization interval of length `interval`; the result is the mean log
/// stretch per unit time over `intervals` intervals.
double benettin_exponent(const std::function<Vector(const Vector&)>& advance,
                         const Vector& x0, double interval, long intervals,
                         double separation = 1e-8);

/// Wraps an angle to [-pi, pi).
double wrap_pi(double angle);

// ---------------------------------------------------------------------------
// Chirikov standard map on the torus [0, 2pi)^2
// ---------------------------------------------------------------------------

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct MapState {
  double theta = 0.0;
  double p = 0.0;
};

/// Wraps to [0, 2pi).
double wrap_two_pi(double angle);

/// theta' = (theta + p) mod 2pi, p' = (p + K sin theta') mod 2pi. With
/// `literal_kick` the kick is K * theta' instead of K sin theta'.
MapState standard_map_step(const MapState& s, double k, bool literal_kick = false);

/// n successive iterates of (theta0, p0), excluding the starting point.
std::vector<MapState> standard_map_orbit(double theta0, double p0, double k, long n,
                                         bool literal_kick = false);

/// [sin theta, sin p, cos theta, cos p]
Vector encode_map_state(const MapState& s);

/// Inverse of encode_map_state via atan2 on the (sin, cos) pairs. Inputs need
/// not lie on the unit circle. Throws NumericalError("undetermined angle") for
/// a (0, 0) pair.
MapState decode_map_state(const Eigen::Ref<const Vector>& observable);

/// Benettin exponent of the (sine-kick) standard map, renormalizing a
/// tangent vector every iteration.
double standard_map_lyapunov(const MapState& s0, double k, long iterations);

}  // namespace hamrc

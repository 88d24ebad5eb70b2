#include "hamrc/models.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/LU>

#include "hamrc/errors.hpp"

namespace hamrc {

namespace {

using State4 = Eigen::Vector4d;

State4 pack(const PendulumState& s) { return {s.theta1, s.theta2, s.omega1, s.omega2}; }
PendulumState unpack(const State4& y) { return {y[0], y[1], y[2], y[3]}; }

State4 rhs(const State4& y) {
  const auto d = pendulum_derivs(unpack(y));
  return {d[0], d[1], d[2], d[3]};
}

Eigen::Matrix4d jacobian(const State4& y) {
  Eigen::Matrix4d j;
  for (int c = 0; c < 4; ++c) {
    const double h = 1e-6 * (1.0 + std::abs(y[c]));
    State4 plus = y;
    State4 minus = y;
    plus[c] += h;
    minus[c] -= h;
    j.col(c) = (rhs(plus) - rhs(minus)) / (2.0 * h);
  }
  return j;
}

// Three-stage Gauss-Legendre tableau.
struct Gauss3 {
  Eigen::Matrix3d a;
  Eigen::Vector3d b;
  Gauss3() {
    const double r = std::sqrt(15.0);
    a << 5.0 / 36, 2.0 / 9 - r / 15, 5.0 / 36 - r / 30,  //
        5.0 / 36 + r / 24, 2.0 / 9, 5.0 / 36 - r / 24,     //
        5.0 / 36 + r / 30, 2.0 / 9 + r / 15, 5.0 / 36;
    b << 5.0 / 18, 4.0 / 9, 5.0 / 18;
  }
};

const Gauss3& tableau() {
  static const Gauss3 t;
  return t;
}

State4 gauss_step(const State4& y, double h, const PendulumIntegratorOptions& opt) {
  const auto& [a, b] = tableau();
  using Vec12 = Eigen::Matrix<double, 12, 1>;
  using Mat12 = Eigen::Matrix<double, 12, 12>;
  // Stage increments Z_i = h sum_j a_ij f(y + Z_j), solved by simplified Newton.
  const State4 f0 = rhs(y);
  Vec12 z;
  for (int i = 0; i < 3; ++i) z.segment<4>(4 * i) = h * a.row(i).sum() * f0;
  const Eigen::Matrix4d jac = jacobian(y);
  Mat12 newton = Mat12::Identity();
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) newton.block<4, 4>(4 * i, 4 * j) -= h * a(i, j) * jac;
  }
  const Eigen::PartialPivLU<Mat12> lu(newton);
  std::array<State4, 3> f;
  for (int it = 0; it < opt.max_newton; ++it) {
    for (int i = 0; i < 3; ++i) f[i] = rhs(y + z.segment<4>(4 * i));
    Vec12 residual;
    for (int i = 0; i < 3; ++i) {
      State4 acc = State4::Zero();
      for (int j = 0; j < 3; ++j) acc += a(i, j) * f[j];
      residual.segment<4>(4 * i) = h * acc - z.segment<4>(4 * i);
    }
    const Vec12 delta = lu.solve(residual);
    z += delta;
    if (delta.lpNorm<Eigen::Infinity>() <= opt.newton_tol) break;
  }
  for (int i = 0; i < 3; ++i) f[i] = rhs(y + z.segment<4>(4 * i));
  return y + h * (b[0] * f[0] + b[1] * f[1] + b[2] * f[2]);
}

}  // namespace

Vector to_observation(const PendulumState& s) {
  Vector u(4);
  u << s.theta1, s.omega1, s.theta2, s.omega2;
  return u;
}

PendulumState from_observation(const Eigen::Ref<const Vector>& u) {
  if (u.size() != 4) throw std::invalid_argument("pendulum observation must have 4 entries");
  return {u[0], u[2], u[1], u[3]};
}

std::array<double, 4> pendulum_derivs(const PendulumState& s) {
  const double d = s.theta1 - s.theta2;
  const double c = std::cos(d);
  const double sn = std::sin(d);
  const double w1s = s.omega1 * s.omega1;
  const double w2s = s.omega2 * s.omega2;
  const double st1 = std::sin(s.theta1);
  const double st2 = std::sin(s.theta2);
  const double den = 9.0 * c * c - 16.0;
  const double dw1 = (9.0 * c * sn * w1s + 6.0 * sn * w2s + 18.0 * st1 - 9.0 * c * st2) / den;
  const double dw2 =
      (24.0 * sn * w1s + 9.0 * c * sn * w2s + 27.0 * c * st1 - 24.0 * st2) / (-den);
  return {s.omega1, s.omega2, dw1, dw2};
}

double pendulum_energy(const PendulumState& s) {
  return 2.0 * s.omega1 * s.omega1 / 3.0 + s.omega2 * s.omega2 / 6.0 +
         (s.omega1 * s.omega2 * std::cos(s.theta1 - s.theta2) - std::cos(s.theta2) -
          3.0 * std::cos(s.theta1)) /
             2.0;
}

double pendulum_energy(const Eigen::Ref<const Vector>& observation) {
  return pendulum_energy(from_observation(observation));
}

PendulumState pendulum_advance(const PendulumState& s, double dt,
                               const PendulumIntegratorOptions& options) {
  if (!(dt > 0.0)) throw std::invalid_argument("pendulum: dt must be > 0");
  if (options.substeps < 1) throw std::invalid_argument("pendulum: substeps must be >= 1");
  const double h = dt / options.substeps;
  State4 y = pack(s);
  for (int i = 0; i < options.substeps; ++i) y = gauss_step(y, h, options);
  return unpack(y);
}

PendulumTrajectory pendulum_integrate(const PendulumState& s0, Eigen::Index steps,
                                      double dt,
                                      const PendulumIntegratorOptions& options) {
  if (!(dt > 0.0)) throw std::invalid_argument("pendulum: dt must be > 0");
  if (steps < 0) throw std::invalid_argument("pendulum: steps must be >= 0");
  PendulumTrajectory out;
  out.dt = dt;
  out.samples.resize(4, steps);
  const double e0 = pendulum_energy(s0);
  const double scale = std::abs(e0) > 1e-12 ? std::abs(e0) : 1.0;
  PendulumState s = s0;
  for (Eigen::Index k = 0; k < steps; ++k) {
    s = pendulum_advance(s, dt, options);
    out.samples.col(k) = to_observation(s);
    out.max_relative_drift =
        std::max(out.max_relative_drift, std::abs(pendulum_energy(s) - e0) / scale);
  }
  out.drift_flagged = out.max_relative_drift > options.drift_budget;
  return out;
}

double benettin_exponent(const std::function<Vector(const Vector&)>& advance,
                         const Vector& x0, double interval, long intervals,
                         double separation) {
  if (intervals < 1 || !(interval > 0.0) || !(separation > 0.0))
    throw std::invalid_argument("benettin: invalid schedule");
  Vector x = x0;
  Vector dir = Vector::Ones(x0.size()).normalized();
  Vector y = x + separation * dir;
  double log_sum = 0.0;
  for (long i = 0; i < intervals; ++i) {
    x = advance(x);
    y = advance(y);
    const Vector diff = y - x;
    const double d = diff.norm();
    if (!(d > 0.0) || !std::isfinite(d)) {
      y = x + separation * dir;
      continue;
    }
    log_sum += std::log(d / separation);
    dir = diff / d;
    y = x + separation * dir;
  }
  return log_sum / (static_cast<double>(intervals) * interval);
}

double pendulum_lyapunov(const PendulumState& s0, double horizon,
                         const PendulumIntegratorOptions& options) {
  constexpr double kInterval = 1.0;
  constexpr int kSamplesPerInterval = 5;  // dt = 0.2
  const long intervals = std::max(1L, static_cast<long>(std::lround(horizon / kInterval)));
  auto advance = [&](const Vector& u) {
    PendulumState s = from_observation(u);
    for (int k = 0; k < kSamplesPerInterval; ++k)
      s = pendulum_advance(s, kInterval / kSamplesPerInterval, options);
    return to_observation(s);
  };
  return benettin_exponent(advance, to_observation(s0), kInterval, intervals);
}

double wrap_pi(double angle) {
  double w = std::fmod(angle + std::numbers::pi, kTwoPi);
  if (w < 0.0) w += kTwoPi;
  w -= std::numbers::pi;
  if (w >= std::numbers::pi) w -= kTwoPi;
  return w;
}

double wrap_two_pi(double angle) {
  double w = std::fmod(angle, kTwoPi);
  if (w < 0.0) w += kTwoPi;
  if (w >= kTwoPi) w -= kTwoPi;
  return w;
}

MapState standard_map_step(const MapState& s, double k, bool literal_kick) {
  const double theta = wrap_two_pi(s.theta + s.p);
  const double kick = literal_kick ? k * theta : k * std::sin(theta);
  return {theta, wrap_two_pi(s.p + kick)};
}

std::vector<MapState> standard_map_orbit(double theta0, double p0, double k, long n,
                                         bool literal_kick) {
  if (n < 0) throw std::invalid_argument("standard map: n must be >= 0");
  std::vector<MapState> orbit;
  orbit.reserve(static_cast<std::size_t>(n));
  MapState s{wrap_two_pi(theta0), wrap_two_pi(p0)};
  for (long i = 0; i < n; ++i) {
    s = standard_map_step(s, k, literal_kick);
    orbit.push_back(s);
  }
  return orbit;
}

Vector encode_map_state(const MapState& s) {
  Vector o(4);
  o << std::sin(s.theta), std::sin(s.p), std::cos(s.theta), std::cos(s.p);
  return o;
}

MapState decode_map_state(const Eigen::Ref<const Vector>& o) {
  if (o.size() != 4) throw std::invalid_argument("map observable must have 4 entries");
  if ((o[0] == 0.0 && o[2] == 0.0) || (o[1] == 0.0 && o[3] == 0.0))
    throw NumericalError("undetermined angle");
  return {wrap_two_pi(std::atan2(o[0], o[2])), wrap_two_pi(std::atan2(o[1], o[3]))};
}

double standard_map_lyapunov(const MapState& s0, double k, long iterations) {
  if (iterations < 1) throw std::invalid_argument("standard map: iterations must be >= 1");
  // Tangent-vector form of Benettin's method; the tangent map is exact.
  MapState s{wrap_two_pi(s0.theta), wrap_two_pi(s0.p)};
  Eigen::Vector2d v(1.0, 1.0);
  v.normalize();
  double log_sum = 0.0;
  for (long i = 0; i < iterations; ++i) {
    s = standard_map_step(s, k);
    const double d_theta = v[0] + v[1];
    const double d_p = v[1] + k * std::cos(s.theta) * d_theta;
    v << d_theta, d_p;
    const double norm = v.norm();
    log_sum += std::log(norm);
    v /= norm;
  }
  return log_sum / static_cast<double>(iterations);
}

}  // namespace hamrc

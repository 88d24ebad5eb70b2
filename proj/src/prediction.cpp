#include "hamrc/prediction.hpp"

#include <cmath>
#include <stdexcept>

#include "hamrc/errors.hpp"

namespace hamrc {

namespace {

void project_pairs(Eigen::Ref<Vector> u, const ClosedLoopOptions& options) {
  for (const auto& [s, c] : options.unit_circle_pairs) {
    const double norm = std::hypot(u[s], u[c]);
    if (norm > 0.0) {
      u[s] /= norm;
      u[c] /= norm;
    }
  }
}

PredictionRun run(const TrainedModel& model, std::span<const double> betas,
                  const Vector& u0, const ReservoirState& r0,
                  const ClosedLoopOptions& options) {
  const Reservoir& res = *model.reservoir;
  if (u0.size() != res.input_dim() || r0.size() != res.size())
    throw std::invalid_argument("closed loop: dimension mismatch");
  if (betas.empty()) throw std::invalid_argument("closed loop: steps must be >= 1");
  for (const auto& [s, c] : options.unit_circle_pairs) {
    if (s < 0 || c < 0 || s >= u0.size() || c >= u0.size())
      throw std::invalid_argument("closed loop: projection index out of range");
  }
  PredictionRun out;
  out.betas.assign(betas.begin(), betas.end());
  out.initial_input = u0;
  out.initial_state = r0;
  const auto steps = static_cast<Eigen::Index>(betas.size());
  out.outputs.resize(u0.size(), steps);
  ReservoirState r = r0;
  Vector u = u0;
  Vector scratch(res.size());
  Eigen::Index taken = 0;
  for (; taken < steps; ++taken) {
    res.advance(r, u, betas[static_cast<std::size_t>(taken)], scratch);
    u.noalias() = model.w_out * r;
    if (!u.allFinite() || u.cwiseAbs().maxCoeff() > options.divergence_limit) {
      out.diverged_at = taken;
      break;
    }
    out.outputs.col(taken) = u;
    project_pairs(u, options);
  }
  out.outputs.conservativeResize(Eigen::NoChange, taken);
  out.final_state = std::move(r);
  return out;
}

}  // namespace

PredictionRun closed_loop(const TrainedModel& model, double beta, const Vector& u0,
                          const ReservoirState& r0, Eigen::Index steps,
                          const ClosedLoopOptions& options) {
  if (steps < 1) throw std::invalid_argument("closed loop: steps must be >= 1");
  std::vector<double> schedule(static_cast<std::size_t>(steps), beta);
  PredictionRun out = run(model, schedule, u0, r0, options);
  out.betas.assign(1, beta);
  return out;
}

PredictionRun closed_loop(const TrainedModel& model, std::span<const double> betas,
                          const Vector& u0, const ReservoirState& r0,
                          const ClosedLoopOptions& options) {
  return run(model, betas, u0, r0, options);
}

PredictionRun continue_from_training(const TrainedModel& model, double beta,
                                     Eigen::Index steps,
                                     const ClosedLoopOptions& options) {
  if (steps < 1) throw std::invalid_argument("closed loop: steps must be >= 1");
  Vector u0 = model.readout(model.final_state);
  if (!u0.allFinite() || u0.cwiseAbs().maxCoeff() > options.divergence_limit) {
    PredictionRun out;
    out.betas.assign(1, beta);
    out.initial_input = u0;
    out.initial_state = model.final_state;
    out.outputs.resize(u0.size(), 0);
    out.final_state = model.final_state;
    out.diverged_at = 0;
    return out;
  }
  const Vector first = u0;
  project_pairs(u0, options);
  PredictionRun out;
  if (steps > 1) {
    out = closed_loop(model, beta, u0, model.final_state, steps - 1, options);
  } else {
    out.betas.assign(1, beta);
    out.initial_input = u0;
    out.initial_state = model.final_state;
    out.final_state = model.final_state;
    out.outputs.resize(u0.size(), 0);
  }
  Matrix joined(first.size(), out.outputs.cols() + 1);
  joined.col(0) = first;
  joined.rightCols(out.outputs.cols()) = out.outputs;
  out.outputs = std::move(joined);
  if (out.diverged_at) *out.diverged_at += 1;
  return out;
}

double valid_time(const Matrix& pred, const Matrix& truth, double threshold,
                  double lyapunov, double dt) {
  if (pred.rows() != truth.rows() || pred.cols() != truth.cols())
    throw std::invalid_argument("valid_time: shape mismatch");
  if (truth.cols() == 0) throw std::invalid_argument("valid_time: empty series");
  const double rms = std::sqrt(truth.colwise().squaredNorm().mean());
  if (!(rms > 0.0)) throw NumericalError("valid_time: truth has zero RMS");
  const double scale = lyapunov > 0.0 ? lyapunov : 1.0;
  for (Eigen::Index k = 0; k < truth.cols(); ++k) {
    const double err = (pred.col(k) - truth.col(k)).norm() / rms;
    if (err > threshold) return scale * static_cast<double>(k) * dt;
  }
  return scale * static_cast<double>(truth.cols()) * dt;
}

}  // namespace hamrc

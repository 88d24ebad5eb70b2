#include "hamrc/training.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <stdexcept>
#include <string>

#include <Eigen/Cholesky>

#include "hamrc/errors.hpp"

namespace hamrc {

int Corpus::input_dim() const {
  return static_cast<int>(segments_.front().states.rows());
}

Eigen::Index Corpus::total_length() const {
  Eigen::Index total = 0;
  for (const auto& s : segments_) total += s.states.cols();
  return total;
}

std::vector<double> Corpus::beta_series() const {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(total_length()));
  for (const auto& s : segments_) out.insert(out.end(), s.states.cols(), s.beta);
  return out;
}

Matrix Corpus::concatenated() const {
  Matrix out(input_dim(), total_length());
  Eigen::Index col = 0;
  for (const auto& s : segments_) {
    out.middleCols(col, s.states.cols()) = s.states;
    col += s.states.cols();
  }
  return out;
}

Corpus assemble_corpus(std::vector<TrajectorySegment> segments) {
  if (segments.empty()) throw ConfigError("corpus needs at least one segment");
  const auto dim = segments.front().states.rows();
  const double dt = segments.front().dt;
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const auto& s = segments[i];
    const std::string where = "segment " + std::to_string(i) + ": ";
    if (s.states.rows() != dim || dim < 1)
      throw ConfigError(where + "state dimension " + std::to_string(s.states.rows()) +
                        " differs from " + std::to_string(dim));
    if (s.dt != dt) throw ConfigError(where + "sampling step differs");
    if (s.states.cols() < 1) throw ConfigError(where + "empty segment");
    if (!s.states.allFinite() || !std::isfinite(s.beta))
      throw ConfigError(where + "non-finite entries");
  }
  Corpus corpus;
  corpus.segments_ = std::move(segments);
  return corpus;
}

Harvest harvest_states(const Reservoir& res, const Corpus& corpus, int washout,
                       const ReservoirState& initial_state) {
  if (washout < 0) throw std::invalid_argument("washout must be >= 0");
  if (corpus.input_dim() != res.input_dim())
    throw std::invalid_argument("corpus dimension does not match reservoir input");
  Eigen::Index columns = 0;
  for (std::size_t i = 0; i < corpus.segments().size(); ++i) {
    const auto t = corpus.segments()[i].states.cols();
    if (washout >= t)
      throw ConfigError("washout " + std::to_string(washout) +
                        " is not shorter than segment " + std::to_string(i));
    columns += std::max<Eigen::Index>(t - washout - 1, 0);
  }
  if (columns == 0) throw ConfigError("corpus yields no training pairs");
  Harvest out;
  out.states.resize(res.size(), columns);
  out.targets.resize(corpus.input_dim(), columns);
  ReservoirState r = initial_state;
  Vector scratch(res.size());
  Eigen::Index col = 0;
  for (const auto& seg : corpus.segments()) {
    const auto t_len = seg.states.cols();
    for (Eigen::Index t = 0; t < t_len; ++t) {
      res.advance(r, seg.states.col(t), seg.beta, scratch);
      if (t >= washout && t + 1 < t_len) {
        out.states.col(col) = r;
        out.targets.col(col) = seg.states.col(t + 1);
        ++col;
      }
    }
  }
  out.final_state = std::move(r);
  return out;
}

Matrix ridge_readout(const Matrix& states, const Matrix& targets, double lambda,
                     const RidgeOptions& options) {
  if (states.cols() != targets.cols() || states.cols() < 1)
    throw std::invalid_argument("ridge: states and targets need matching, nonzero length");
  if (!(lambda >= 0.0)) throw std::invalid_argument("ridge: lambda must be >= 0");
  const auto n = states.rows();
  Matrix gram = Matrix::Zero(n, n);
  gram.selfadjointView<Eigen::Lower>().rankUpdate(states);
  gram.diagonal().array() += lambda;
  const Matrix rhs = states * targets.transpose();  // V U^T

  Eigen::LLT<Matrix, Eigen::Lower> llt(gram);
  if (llt.info() != Eigen::Success) {
    if (lambda == 0.0) throw NumericalError("regularization required");
    throw NumericalError("ridge system is not positive definite");
  }
  const double rcond = llt.rcond();
  if (lambda == 0.0 && rcond < options.singular_rcond)
    throw NumericalError("regularization required");
  if (lambda == 0.0 && rcond < options.warn_rcond) {
    std::cerr << "warning: unregularized readout solve is ill-conditioned (rcond "
              << rcond << ")\n";
  }
  // (V V^T + lambda I) X = V U^T, W_out = X^T
  return llt.solve(rhs).transpose();
}

double one_step_rmse(const Matrix& w_out, const Harvest& harvest) {
  const Matrix err = w_out * harvest.states - harvest.targets;
  return std::sqrt(err.squaredNorm() / static_cast<double>(err.size()));
}

TrainedModel train(std::shared_ptr<const Reservoir> res, const Corpus& corpus,
                   int washout, std::uint64_t state_seed) {
  if (!res) throw std::invalid_argument("train: null reservoir");
  const Harvest harvest =
      harvest_states(*res, corpus, washout, initial_reservoir_state(res->size(), state_seed));
  TrainedModel model;
  model.w_out = ridge_readout(harvest.states, harvest.targets, res->config().ridge);
  model.final_state = harvest.final_state;
  auto& m = model.manifest;
  for (const auto& s : corpus.segments()) {
    m.betas.push_back(s.beta);
    m.lengths.push_back(s.states.cols());
  }
  m.washout = washout;
  m.ridge = res->config().ridge;
  m.reservoir_seed = res->config().seed;
  m.state_seed = state_seed;
  m.harvested_columns = harvest.states.cols();
  m.training_rmse = one_step_rmse(model.w_out, harvest);
  model.reservoir = std::move(res);
  return model;
}

}  // namespace hamrc

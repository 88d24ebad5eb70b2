#include "doctest.h"

#include <cmath>
#include <memory>
#include <vector>

#include "hamrc/config.hpp"
#include "hamrc/errors.hpp"
#include "hamrc/experiments.hpp"
#include "hamrc/models.hpp"
#include "hamrc/prediction.hpp"
#include "hamrc/rng.hpp"

using namespace hamrc;

namespace {

TrainedModel constant_model(const Vector& c) {
  ReservoirConfig rc;
  rc.nodes = 30;
  rc.input_dim = rc.output_dim = static_cast<int>(c.size());
  rc.density = 0.3;
  rc.spectral_radius = 0.5;
  rc.leak = 0.8;
  rc.input_scale = 0.5;
  rc.ridge = 1e-10;
  auto res = std::make_shared<const Reservoir>(build_reservoir(rc, 3));
  return train(res, assemble_corpus({{0.0, c.replicate(1, 500), 1.0}}), 100, 1);
}

// Small pendulum model, shared by several cases.
const ExperimentConfig& pendulum_config() {
  static const ExperimentConfig cfg = [] {
    ExperimentConfig c = load_config(resolve_config_path("fig1a"));
    c.reservoir.nodes = 150;
    c.segment_length = 1000;
    return c;
  }();
  return cfg;
}

const TrainedModel& pendulum_model() {
  static const TrainedModel m = train_model(pendulum_config());
  return m;
}

TrainedModel scaled(const TrainedModel& m, double factor) {
  TrainedModel out = m;
  out.w_out *= factor;
  return out;
}

}  // namespace

TEST_SUITE("prediction") {

TEST_CASE("constant model stays at its fixed point") {
  Vector c(2);
  c << 0.4, -0.25;
  const TrainedModel m = constant_model(c);
  const PredictionRun run = closed_loop(m, 0.0, c, m.final_state, 1000);
  REQUIRE_FALSE(run.diverged());
  REQUIRE(run.outputs.cols() == 1000);
  CHECK((run.outputs.colwise() - c).cwiseAbs().maxCoeff() < 1e-4);
}

TEST_CASE("divergence truncates the run") {
  const TrainedModel& base = pendulum_model();
  const TrainedModel blown = scaled(base, 1e9);
  const Vector u0 = initial_observation(pendulum_config(), 1.35);
  const PredictionRun run = closed_loop(blown, 0.0, u0, base.final_state, 50);
  REQUIRE(run.diverged());
  CHECK(run.outputs.cols() == *run.diverged_at);
  CHECK(run.outputs.cols() < 50);

  ClosedLoopOptions tight;
  tight.divergence_limit = 1e-3;
  const PredictionRun early = closed_loop(base, 0.0, u0, base.final_state, 20, tight);
  CHECK(early.diverged_at == Eigen::Index{0});
  CHECK(early.outputs.cols() == 0);
}

TEST_CASE("closed loop is consistent with open-loop drive of its own outputs") {
  const TrainedModel& m = pendulum_model();
  const Vector u0 = to_observation({0.6, 1.35, 0.0, 0.0});
  const PredictionRun run = closed_loop(m, 0.0, u0, m.final_state, 200);
  REQUIRE(run.outputs.cols() == 200);
  Matrix inputs(4, 200);
  inputs.col(0) = u0;
  inputs.rightCols(199) = run.outputs.leftCols(199);
  const Matrix states = drive(*m.reservoir, m.final_state, inputs, std::vector<double>(200, 0.0));
  const Matrix replay = m.w_out * states;
  CHECK((replay - run.outputs).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((states.col(199) - run.final_state).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("schedule and constant-beta variants agree") {
  const TrainedModel& m = pendulum_model();
  const Vector u0 = to_observation({0.6, 1.35, 0.0, 0.0});
  const PredictionRun a = closed_loop(m, 0.3, u0, m.final_state, 40);
  const PredictionRun b = closed_loop(m, std::vector<double>(40, 0.3), u0, m.final_state);
  CHECK(a.outputs == b.outputs);
  CHECK(a.betas.size() == 1);
  CHECK(b.betas.size() == 40);
}

TEST_CASE("beta continuity over the first steps") {
  const TrainedModel& m = pendulum_model();
  const Vector u0 = to_observation({0.6, 1.35, 0.0, 0.0});
  const PredictionRun a = closed_loop(m, 1.0, u0, m.final_state, 10);
  const PredictionRun b = closed_loop(m, 1.0 + 1e-6, u0, m.final_state, 10);
  CHECK((a.outputs - b.outputs).cwiseAbs().maxCoeff() <= 1e-3);
}

TEST_CASE("determinism") {
  const TrainedModel& m = pendulum_model();
  const Vector u0 = to_observation({0.6, 2.0, 0.0, 0.0});
  const PredictionRun a = closed_loop(m, 0.7, u0, m.final_state, 300);
  const PredictionRun b = closed_loop(m, 0.7, u0, m.final_state, 300);
  CHECK(a.outputs == b.outputs);
  CHECK(a.final_state == b.final_state);
}

TEST_CASE("continue_from_training starts with the readout of the final state") {
  const TrainedModel& m = pendulum_model();
  const PredictionRun run = continue_from_training(m, 0.0, 30);
  REQUIRE(run.outputs.cols() == 30);
  CHECK(run.outputs.col(0) == m.readout(m.final_state));
  const PredictionRun tail = closed_loop(m, 0.0, run.outputs.col(0), m.final_state, 29);
  CHECK(run.outputs.rightCols(29) == tail.outputs);
  CHECK(continue_from_training(m, 0.0, 1).outputs.cols() == 1);
  CHECK_THROWS_AS(continue_from_training(m, 0.0, 0), std::invalid_argument);
}

TEST_CASE("unit-circle projection feeds back normalized pairs") {
  Vector c(4);
  c << 0.6, 0.0, 0.8, 1.0;
  const TrainedModel m = constant_model(c);
  ClosedLoopOptions o;
  o.unit_circle_pairs = {{0, 2}, {1, 3}};
  const PredictionRun run = closed_loop(m, 0.0, c, m.final_state, 20, o);
  CHECK((run.outputs.colwise() - c).cwiseAbs().maxCoeff() < 1e-4);
  o.unit_circle_pairs = {{0, 7}};
  CHECK_THROWS_AS(closed_loop(m, 0.0, c, m.final_state, 5, o), std::invalid_argument);
}

TEST_CASE("valid_time examples") {
  Rng rng(3);
  Matrix truth(2, 50);
  for (Eigen::Index i = 0; i < truth.size(); ++i) truth.data()[i] = rng.uniform(-1.0, 1.0);
  CHECK(valid_time(truth, truth, 0.25, 0.0, 0.2) == doctest::Approx(10.0));
  CHECK(valid_time(truth, truth, 0.25, 0.5, 0.2) == doctest::Approx(5.0));
  const Matrix shifted = truth.array() + 5.0;
  CHECK(valid_time(shifted, truth, 0.25, 0.163, 0.2) == 0.0);

  Matrix late = truth;
  late.rightCols(20).array() += 10.0;
  CHECK(valid_time(late, truth, 0.25, 0.0, 0.2) == doctest::Approx(30 * 0.2));

  CHECK_THROWS_AS(valid_time(Matrix::Zero(2, 5), Matrix::Zero(2, 5), 0.25, 0.0, 1.0), NumericalError);
  CHECK_THROWS_AS(valid_time(truth, truth.leftCols(3), 0.25, 0.0, 1.0), std::invalid_argument);
}

TEST_CASE("trained pendulum model stays near the torus from its own start") {
  const ExperimentConfig& cfg = pendulum_config();
  const TrainedModel& m = pendulum_model();
  const Forecast f = forecast(cfg, m, 200);
  REQUIRE_FALSE(f.run.diverged());
  CHECK(valid_time(f.run.outputs, f.truth, 0.25, 0.0, cfg.dt) > 4.0);
}

}  // TEST_SUITE

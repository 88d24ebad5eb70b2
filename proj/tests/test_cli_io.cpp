#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "hamrc/config.hpp"
#include "hamrc/csv.hpp"
#include "hamrc/errors.hpp"
#include "hamrc/experiments.hpp"
#include "hamrc/model_io.hpp"
#include "hamrc/models.hpp"
#include "hamrc/svg.hpp"

using namespace hamrc;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::path(HAMRC_TEST_TMP) / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ExperimentConfig small_pendulum() {
  ExperimentConfig cfg = load_config(resolve_config_path("fig4"));
  cfg.reservoir.nodes = 60;
  cfg.segment_length = 400;
  cfg.prediction_steps = 600;
  cfg.transient = 100;
  return cfg;
}

const char* kMinimal = R"({
  "name": "t",
  "system": "pendulum",
  "mode": "standard",
  "training": {"betas": [1.35], "segment_length": 500, "washout": 50},
  "reservoir": {"nodes": 40, "density": 0.2, "spectral_radius": 1.1, "leak": 0.5,
                "input_scale": 1.0, "ridge": 1e-6}
})";

}  // namespace

TEST_SUITE("cli_io") {

TEST_CASE("config: presets load and validate") {
  for (const char* name : {"fig1a", "fig1b", "fig2", "fig4", "fig5", "fig6", "fig7"}) {
    CAPTURE(name);
    const ExperimentConfig cfg = load_config(resolve_config_path(name));
    CHECK(cfg.name == name);
    CHECK_NOTHROW(cfg.validate());
    CHECK_FALSE(cfg.resolved_evaluation_betas().empty());
  }
  const ExperimentConfig f4 = load_config(resolve_config_path("fig4"));
  CHECK(f4.training_betas == std::vector<double>{-1.84, 1.0, 1.45, 1.98});
  CHECK(f4.reservoir.nodes == 1000);
  CHECK(f4.resolved_evaluation_betas() == std::vector<double>{-1.84, 1.0, 1.45, 1.98, 2.0});

  const ExperimentConfig f7 = load_config(resolve_config_path("fig7"));
  CHECK(f7.system == SystemKind::kStandardMap);
  CHECK(f7.k == 1.0);
  CHECK(f7.training_betas.size() == 6);
  CHECK(f7.training_betas.front() * kTwoPi == doctest::Approx(0.58));
  CHECK(f7.reservoir.nodes == 1000);
  CHECK(f7.reservoir.density == 0.66);
  CHECK(f7.reservoir.spectral_radius == 0.77);
  CHECK(f7.reservoir.leak == 0.55);
  CHECK(f7.reservoir.input_scale == 3.0);
  CHECK(f7.reservoir.ridge == 1e-9);
  CHECK(f7.resolved_evaluation_betas().size() == 30);

  const auto f2 = load_config(resolve_config_path("fig2")).resolved_evaluation_betas();
  CHECK(f2.size() == 34);
  for (double b : f2) {
    CHECK(b >= -M_PI);
    CHECK(b < M_PI);
  }
  CHECK_THROWS_AS(resolve_config_path("no_such_preset"), ConfigError);
}

TEST_CASE("config: errors name the offending field") {
  std::string text = kMinimal;
  CHECK_NOTHROW(parse_config(text));

  auto fails_with = [](const std::string& doc, const std::string& field) {
    try {
      parse_config(doc);
    } catch (const ConfigError& e) {
      return std::string(e.what()).find(field) != std::string::npos;
    }
    return false;
  };
  std::string typo = text;
  typo.replace(typo.find("segment_length"), 14, "segment_lenght");
  CHECK(fails_with(typo, "training.segment_lenght"));

  std::string wrong_type = text;
  wrong_type.replace(wrong_type.find("\"nodes\": 40"), 11, "\"nodes\": \"many\"");
  CHECK(fails_with(wrong_type, "reservoir.nodes"));

  std::string bad_leak = text;
  bad_leak.replace(bad_leak.find("\"leak\": 0.5"), 11, "\"leak\": 1.5");
  CHECK(fails_with(bad_leak, "leak"));

  std::string bad_system = text;
  bad_system.replace(bad_system.find("\"pendulum\""), 10, "\"rotor\"");
  CHECK(fails_with(bad_system, "system"));

  CHECK(fails_with("{ not json", ""));
  std::string two_betas = text;
  two_betas.replace(two_betas.find("[1.35]"), 6, "[1.35, 2.0]");
  CHECK(fails_with(two_betas, "training.betas"));
}

TEST_CASE("config: canonical form is a fixed point") {
  for (const char* name : {"fig1a", "fig4", "fig6"}) {
    const ExperimentConfig cfg = load_config(resolve_config_path(name));
    const std::string once = config_to_json(cfg);
    const ExperimentConfig again = parse_config(once);
    CHECK(config_to_json(again) == once);
    CHECK(again.reservoir == cfg.reservoir);
    CHECK(again.training_betas == cfg.training_betas);
  }
}

TEST_CASE("csv: header and 17 significant digits") {
  CHECK(format_number(0.1) == "0.10000000000000001");
  CHECK(format_number(1.0) == "1");
  CHECK(std::stod(format_number(M_PI)) == M_PI);

  CsvTable t{{"a", "b"}, Matrix(2, 2)};
  t.rows << 1.0 / 3.0, -2.5e-300, 7.0, 1e17;
  std::stringstream ss;
  write_csv(ss, t);
  const std::string text = ss.str();
  CHECK(text.substr(0, 4) == "a,b\n");
  CHECK(text.find("0.33333333333333331") != std::string::npos);
  std::stringstream in(text);
  const CsvTable back = read_csv(in);
  CHECK(back.header == t.header);
  CHECK(back.rows == t.rows);

  std::stringstream ragged("a,b\n1,2\n3\n");
  CHECK_THROWS_WITH_AS(read_csv(ragged), doctest::Contains("line 3"), ConfigError);
  std::stringstream junk("a\nx\n");
  CHECK_THROWS_AS(read_csv(junk), ConfigError);
}

TEST_CASE("csv: trajectory tables") {
  const Matrix s = Matrix::Zero(4, 0);
  const CsvTable empty = trajectory_table(s, 0.2, 0.2, pendulum_columns());
  CHECK(empty.header == std::vector<std::string>{"t", "theta1", "omega1", "theta2", "omega2"});
  std::stringstream ss;
  write_csv(ss, empty);
  CHECK(ss.str() == "t,theta1,omega1,theta2,omega2\n");

  const ExperimentConfig cfg = load_config(resolve_config_path("fig1a"));
  const Matrix truth = ground_truth(cfg, 1.35, 3001);
  const CsvTable t = trajectory_table(truth.rightCols(3000), cfg.dt, cfg.dt, pendulum_columns());
  CHECK(t.rows.rows() == 3000);
  CHECK(t.rows.cols() == 5);
  CHECK(t.rows(2999, 0) == doctest::Approx(600.0));
  CHECK(map_columns().size() == 4);
}

TEST_CASE("model: save, load and predict round trip") {
  const ExperimentConfig cfg = small_pendulum();
  const TrainedModel model = train_model(cfg);
  const fs::path dir = scratch_dir("model_roundtrip");
  save_model(dir / "model.json", {model, config_to_json(cfg)});
  const ModelDocument doc = load_model(dir / "model.json");
  CHECK(*doc.model.reservoir == *model.reservoir);
  CHECK(doc.model.manifest == model.manifest);
  CHECK(doc.experiment == config_to_json(cfg));

  const PredictionRun a = predict_at(cfg, model, 2.0, 1000);
  const PredictionRun b = predict_at(cfg, doc.model, 2.0, 1000);
  REQUIRE(a.outputs.cols() == b.outputs.cols());
  CHECK((a.outputs - b.outputs).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("model: tampering is detected") {
  const ExperimentConfig cfg = small_pendulum();
  const TrainedModel model = train_model(cfg);
  std::string text = model_to_json({model, ""});
  CHECK_NOTHROW(model_from_json(text));

  nlohmann::json j = nlohmann::json::parse(text);
  j["bias"][0] = j["bias"][0].get<double>() + 1e-9;
  CHECK_THROWS_WITH_AS(model_from_json(j.dump()), doctest::Contains("hash"), ConfigError);

  nlohmann::json v = nlohmann::json::parse(text);
  v["version"] = kModelFormatVersion + 1;
  CHECK_THROWS_AS(model_from_json(v.dump()), ConfigError);
  CHECK_THROWS_AS(model_from_json("[1, 2"), ConfigError);
  CHECK_THROWS_AS(load_model(fs::path(HAMRC_TEST_TMP) / "missing.json"), ConfigError);
}

TEST_CASE("sha256") {
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("manifest lists outputs with hashes") {
  const fs::path dir = scratch_dir("manifest");
  {
    std::ofstream(dir / "a.csv") << "x\n1\n";
  }
  RunManifest m("simulate", config_to_json(small_pendulum()));
  m.results()["value"] = 3;
  m.add_output(dir / "a.csv");
  m.write(dir);
  const auto j = nlohmann::json::parse(slurp(dir / "manifest.json"));
  CHECK(j["command"] == "simulate");
  CHECK(j["results"]["value"] == 3);
  CHECK(j["config"]["name"] == "fig4");
  CHECK(j.contains("timestamp"));
  CHECK(j["outputs"].dump().find(sha256_hex("x\n1\n")) != std::string::npos);
}

TEST_CASE("svg scatter") {
  const std::string svg = scatter_svg({{"b=1", {0.0, 1.0}, {0.0, 1.0}}, {"b=2", {0.5}, {0.5}}},
                                      {"title", "x", "y", std::nullopt, std::nullopt, 640, 520, 1.1});
  CHECK(svg.find("<svg") == 0);
  CHECK(svg.find("</svg>") != std::string::npos);
  CHECK(svg.find("b=2") != std::string::npos);
  std::size_t circles = 0;
  for (std::size_t p = svg.find("<circle"); p != std::string::npos; p = svg.find("<circle", p + 1)) ++circles;
  CHECK(circles == 3);
}

TEST_CASE("kam sweep isolates failures and rejects empty lists") {
  const ExperimentConfig cfg = small_pendulum();
  const TrainedModel model = train_model(cfg);
  CHECK_THROWS_AS(run_kam(cfg, model, {}, {}), ConfigError);
  TrainedModel broken = model;
  broken.w_out *= 1e12;
  const auto out = run_kam(cfg, broken, {1.0, 2.0}, {});
  REQUIRE(out.size() == 2);
  for (const auto& o : out) {
    CHECK_FALSE(o.error.empty());
    CHECK(o.diverged_at.has_value());
  }
  const auto ok = run_kam(cfg, model, {-1.84, 1.98}, {});
  CHECK(ok[0].beta == -1.84);
  CHECK(ok[1].beta == 1.98);
}

TEST_CASE("hyperopt: budget one and collapsed ranges") {
  ExperimentConfig cfg = small_pendulum();
  cfg.hyperopt.budget = 1;
  cfg.hyperopt.validation_steps = 100;
  const auto one = hyperopt(cfg);
  REQUIRE(one.size() == 1);
  CHECK(one[0].reservoir.nodes == cfg.reservoir.nodes);
  CHECK(one[0].reservoir.density >= 0.01);

  auto& r = cfg.hyperopt.ranges;
  r.density = {0.3, 0.3};
  r.spectral_radius = {0.9, 0.9};
  r.leak = {0.6, 0.6};
  r.input_scale = {0.8, 0.8};
  r.log10_ridge = {-4.0, -4.0};
  cfg.hyperopt.budget = 3;
  const auto point = hyperopt(cfg);
  for (const auto& t : point) {
    CHECK(t.reservoir.density == 0.3);
    CHECK(t.reservoir.spectral_radius == 0.9);
    CHECK(t.reservoir.leak == 0.6);
    CHECK(t.reservoir.input_scale == 0.8);
    CHECK(t.reservoir.ridge == doctest::Approx(1e-4).epsilon(1e-15));
    CHECK(t.score == point[0].score);
  }
}

TEST_CASE("hyperopt: deterministic and ranked") {
  ExperimentConfig cfg = small_pendulum();
  cfg.hyperopt.budget = 6;
  cfg.hyperopt.validation_steps = 100;
  const auto a = hyperopt(cfg);
  const auto b = hyperopt(cfg);
  REQUIRE(a.size() == 6);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].index == b[i].index);
    CHECK(a[i].score == b[i].score);
    CHECK(a[i].reservoir == b[i].reservoir);
    if (i > 0) CHECK(a[i - 1].score <= a[i].score);
  }
}

TEST_CASE("hyperopt: search near the quasi-periodic preset keeps its accuracy") {
  ExperimentConfig cfg = load_config(resolve_config_path("fig1a"));
  cfg.hyperopt.validation_steps = 500;
  const auto& p = cfg.reservoir;
  auto& r = cfg.hyperopt.ranges;
  r.density = {0.8 * p.density, 1.2 * p.density};
  r.spectral_radius = {0.8 * p.spectral_radius, 1.2 * p.spectral_radius};
  r.leak = {0.8 * p.leak, 1.2 * p.leak};
  r.input_scale = {0.8 * p.input_scale, 1.2 * p.input_scale};
  r.log10_ridge = {std::log10(p.ridge) - 1.0, std::log10(p.ridge) + 1.0};

  cfg.hyperopt.budget = 1;
  auto baseline_cfg = cfg;
  baseline_cfg.hyperopt.ranges = {{p.density, p.density},
                                  {p.spectral_radius, p.spectral_radius},
                                  {p.leak, p.leak},
                                  {p.input_scale, p.input_scale},
                                  {std::log10(p.ridge), std::log10(p.ridge)}};
  const double baseline = hyperopt(baseline_cfg).front().validation_rmse;

  cfg.hyperopt.budget = 50;
  const auto trials = hyperopt(cfg);
  REQUIRE(trials.front().error.empty());
  CHECK(trials.front().validation_rmse <= 2.0 * baseline);
}

}  // TEST_SUITE

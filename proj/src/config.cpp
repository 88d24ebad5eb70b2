#include "hamrc/config.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "hamrc/errors.hpp"
#include "hamrc/models.hpp"
#include "hamrc/rng.hpp"

namespace hamrc {

using nlohmann::json;

namespace {

// Walks one JSON object, tracking its dotted path and the keys consumed.
class Node {
 public:
  Node(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where() + "expected an object");
  }

  bool present(const std::string& key) const { return j_.contains(key); }
  bool has(const std::string& key) const { return present(key) && !j_.at(key).is_null(); }

  Node child(const std::string& key) {
    seen_.insert(key);
    return Node(j_.at(key), join(key));
  }

  const json& raw(const std::string& key) {
    seen_.insert(key);
    return j_.at(key);
  }

  double number(const std::string& key, double fallback) {
    if (!has(key)) return fallback;
    const json& v = raw(key);
    if (!v.is_number()) throw ConfigError(join(key) + ": expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw ConfigError(join(key) + ": must be finite");
    return x;
  }

  long long integer(const std::string& key, long long fallback) {
    if (!has(key)) return fallback;
    const json& v = raw(key);
    if (!v.is_number_integer()) throw ConfigError(join(key) + ": expected an integer");
    return v.get<long long>();
  }

  std::uint64_t seed(const std::string& key, std::uint64_t fallback) {
    const long long v = integer(key, static_cast<long long>(fallback));
    if (v < 0) throw ConfigError(join(key) + ": seeds must be non-negative");
    return static_cast<std::uint64_t>(v);
  }

  bool boolean(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const json& v = raw(key);
    if (!v.is_boolean()) throw ConfigError(join(key) + ": expected true or false");
    return v.get<bool>();
  }

  std::string text(const std::string& key, const std::string& fallback) {
    if (!has(key)) return fallback;
    const json& v = raw(key);
    if (!v.is_string()) throw ConfigError(join(key) + ": expected a string");
    return v.get<std::string>();
  }

  std::vector<double> numbers(const std::string& key) {
    std::vector<double> out;
    if (!has(key)) return out;
    const json& v = raw(key);
    if (!v.is_array()) throw ConfigError(join(key) + ": expected an array of numbers");
    for (const auto& e : v) {
      if (!e.is_number() || !std::isfinite(e.get<double>()))
        throw ConfigError(join(key) + ": expected an array of finite numbers");
      out.push_back(e.get<double>());
    }
    return out;
  }

  std::array<double, 2> range(const std::string& key, std::array<double, 2> fallback) {
    if (!has(key)) return fallback;
    const auto v = numbers(key);
    if (v.size() != 2) throw ConfigError(join(key) + ": expected [lo, hi]");
    return {v[0], v[1]};
  }

  void finish() const {
    for (const auto& [key, _] : j_.items()) {
      if (!seen_.count(key)) throw ConfigError(join(key) + ": unknown key");
    }
  }

  std::string join(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

 private:
  std::string where() const { return path_.empty() ? "config: " : path_ + ": "; }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

CrossingDirection parse_direction(const std::string& s, const std::string& path) {
  if (s == "any") return CrossingDirection::kAny;
  if (s == "ascending") return CrossingDirection::kAscending;
  if (s == "descending") return CrossingDirection::kDescending;
  throw ConfigError(path + ": expected any, ascending or descending");
}

const char* direction_name(CrossingDirection d) {
  switch (d) {
    case CrossingDirection::kAscending: return "ascending";
    case CrossingDirection::kDescending: return "descending";
    default: return "any";
  }
}

void parse_betas(Node& node, std::vector<double>& out, bool map) {
  const bool b = node.has("betas");
  const bool p = node.has("p0");
  if (b && p) throw ConfigError(node.join("p0") + ": give either betas or p0, not both");
  if (p && !map) throw ConfigError(node.join("p0") + ": only valid for the standard map");
  if (b) out = node.numbers("betas");
  if (p) {
    for (double p0 : node.numbers("p0")) out.push_back(p0 / kTwoPi);
  }
}

void check(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

}  // namespace

const char* system_name(SystemKind kind) {
  return kind == SystemKind::kPendulum ? "pendulum" : "standard_map";
}

std::vector<double> ExperimentConfig::resolved_evaluation_betas() const {
  std::vector<double> out;
  if (evaluate_training_betas) out = training_betas;
  out.insert(out.end(), evaluation_betas.begin(), evaluation_betas.end());
  if (evaluation_draw) {
    Rng rng(derive_seed(evaluation_draw->seed, kStreamBetaDraw));
    for (int i = 0; i < evaluation_draw->count; ++i)
      out.push_back(rng.uniform(evaluation_draw->lo, evaluation_draw->hi));
  }
  return out;
}

void ExperimentConfig::validate() const {
  reservoir.validate();
  check(dt > 0.0, "dt: must be > 0");
  check(!training_betas.empty(), "training.betas: at least one training value required");
  check(mode == TrainingMode::kParameterAware || training_betas.size() == 1,
        "training.betas: standard mode trains on exactly one trajectory");
  check(segment_length >= 2, "training.segment_length: must be >= 2");
  check(washout >= 0 && washout < segment_length,
        "training.washout: must be in [0, segment_length)");
  check(prediction_steps >= 0, "prediction.steps: must be >= 0");
  check(transient >= 0, "prediction.transient: must be >= 0");
  check(valid_threshold > 0.0, "prediction.valid_threshold: must be > 0");
  check(divergence_limit > 0.0, "prediction.divergence_limit: must be > 0");
  check(threads >= 1, "threads: must be >= 1");
  check(reservoir.input_dim == 4 && reservoir.output_dim == 4,
        "reservoir: both systems use 4-dimensional observables");
  if (evaluation_draw) {
    check(evaluation_draw->count >= 0, "evaluation.random.count: must be >= 0");
    check(evaluation_draw->lo < evaluation_draw->hi, "evaluation.random: lo must be < hi");
  }
  if (system == SystemKind::kPendulum) {
    check(section.trigger >= 0 && section.trigger < 4, "section.trigger: must be in [0, 4)");
    check(!section.gate || (*section.gate >= 0 && *section.gate < 4),
          "section.gate: must be in [0, 4)");
  }
  const auto& r = hyperopt.ranges;
  for (const auto& [name, rg] : {std::pair{"density", r.density},
                                 {"spectral_radius", r.spectral_radius},
                                 {"leak", r.leak},
                                 {"input_scale", r.input_scale},
                                 {"log10_ridge", r.log10_ridge}}) {
    check(rg[0] <= rg[1], std::string("hyperopt.ranges.") + name + ": empty range");
  }
  check(r.density[0] > 0.0 && r.density[1] <= 1.0, "hyperopt.ranges.density: must lie in (0, 1]");
  check(r.leak[0] > 0.0 && r.leak[1] <= 1.0, "hyperopt.ranges.leak: must lie in (0, 1]");
  check(r.spectral_radius[0] > 0.0, "hyperopt.ranges.spectral_radius: must be > 0");
  check(r.input_scale[0] > 0.0, "hyperopt.ranges.input_scale: must be > 0");
  check(hyperopt.budget >= 1, "hyperopt.budget: must be >= 1");
  check(hyperopt.validation_steps >= 2, "hyperopt.validation_steps: must be >= 2");
}

ExperimentConfig parse_config(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: malformed JSON: ") + e.what());
  }
  ExperimentConfig c;
  Node root(doc, "");
  c.name = root.text("name", c.name);

  const std::string system = root.text("system", "pendulum");
  if (system == "pendulum") {
    c.system = SystemKind::kPendulum;
  } else if (system == "standard_map") {
    c.system = SystemKind::kStandardMap;
    c.dt = 1.0;
    c.section = {};
  } else {
    throw ConfigError("system: expected pendulum or standard_map");
  }
  const bool map = c.system == SystemKind::kStandardMap;

  const std::string mode = root.text("mode", "parameter_aware");
  if (mode == "standard") {
    c.mode = TrainingMode::kStandard;
  } else if (mode == "parameter_aware") {
    c.mode = TrainingMode::kParameterAware;
  } else {
    throw ConfigError("mode: expected standard or parameter_aware");
  }

  c.k = root.number("K", c.k);
  c.literal_kick = root.boolean("literal_kick", c.literal_kick);
  c.dt = root.number("dt", c.dt);
  c.output_dir = root.text("output_dir", c.output_dir);
  c.threads = static_cast<int>(root.integer("threads", c.threads));

  if (root.has("training")) {
    Node t = root.child("training");
    parse_betas(t, c.training_betas, map);
    c.segment_length = static_cast<int>(t.integer("segment_length", c.segment_length));
    c.washout = static_cast<int>(t.integer("washout", c.washout));
    t.finish();
  }

  if (root.has("reservoir")) {
    Node r = root.child("reservoir");
    auto& rc = c.reservoir;
    rc.nodes = static_cast<int>(r.integer("nodes", rc.nodes));
    rc.density = r.number("density", rc.density);
    rc.spectral_radius = r.number("spectral_radius", rc.spectral_radius);
    rc.leak = r.number("leak", rc.leak);
    rc.input_scale = r.number("input_scale", rc.input_scale);
    rc.ridge = r.number("ridge", rc.ridge);
    r.finish();
  }

  if (root.has("prediction")) {
    Node p = root.child("prediction");
    c.prediction_steps = static_cast<int>(p.integer("steps", c.prediction_steps));
    c.transient = static_cast<int>(p.integer("transient", c.transient));
    c.valid_threshold = p.number("valid_threshold", c.valid_threshold);
    c.project_outputs = p.boolean("project_outputs", c.project_outputs);
    c.divergence_limit = p.number("divergence_limit", c.divergence_limit);
    p.finish();
  }

  if (root.has("evaluation")) {
    Node e = root.child("evaluation");
    parse_betas(e, c.evaluation_betas, map);
    c.evaluate_training_betas = e.boolean("include_training", c.evaluate_training_betas);
    if (e.has("random")) {
      Node r = e.child("random");
      BetaDraw d;
      d.count = static_cast<int>(r.integer("count", 0));
      d.lo = r.number("lo", map ? 0.0 : -std::numbers::pi);
      d.hi = r.number("hi", map ? 1.0 : std::numbers::pi);
      d.seed = r.seed("seed", 0);
      r.finish();
      c.evaluation_draw = d;
    }
    e.finish();
  }

  if (root.has("section")) {
    Node s = root.child("section");
    c.section.trigger = static_cast<int>(s.integer("trigger", c.section.trigger));
    c.section.direction =
        parse_direction(s.text("direction", direction_name(c.section.direction)), "section.direction");
    if (s.present("gate")) {
      const json& g = s.raw("gate");
      if (g.is_null()) {
        c.section.gate.reset();
      } else if (g.is_number_integer()) {
        c.section.gate = g.get<int>();
      } else {
        throw ConfigError("section.gate: expected an integer or null");
      }
    }
    const std::string sign = s.text("gate_sign", "positive");
    if (sign != "positive" && sign != "negative")
      throw ConfigError("section.gate_sign: expected positive or negative");
    c.section.gate_sign = sign == "positive" ? GateSign::kPositive : GateSign::kNegative;
    s.finish();
  }

  if (root.has("seeds")) {
    Node s = root.child("seeds");
    c.seed = s.seed("reservoir", c.seed);
    c.state_seed = s.seed("state", c.state_seed);
    s.finish();
  }

  if (root.has("lyapunov")) {
    Node l = root.child("lyapunov");
    auto& o = c.lyapunov;
    o.theiler_window = static_cast<int>(l.integer("theiler_window", o.theiler_window));
    o.neighbors = static_cast<int>(l.integer("neighbors", o.neighbors));
    o.horizon = static_cast<int>(l.integer("horizon", o.horizon));
    o.fit_window = static_cast<int>(l.integer("fit_window", o.fit_window));
    o.max_references = static_cast<int>(l.integer("max_references", o.max_references));
    l.finish();
  }

  if (root.has("hyperopt")) {
    Node h = root.child("hyperopt");
    c.hyperopt.budget = static_cast<int>(h.integer("budget", c.hyperopt.budget));
    c.hyperopt.validation_steps =
        static_cast<int>(h.integer("validation_steps", c.hyperopt.validation_steps));
    if (h.has("ranges")) {
      Node r = h.child("ranges");
      auto& g = c.hyperopt.ranges;
      g.density = r.range("density", g.density);
      g.spectral_radius = r.range("spectral_radius", g.spectral_radius);
      g.leak = r.range("leak", g.leak);
      g.input_scale = r.range("input_scale", g.input_scale);
      g.log10_ridge = r.range("log10_ridge", g.log10_ridge);
      r.finish();
    }
    h.finish();
  }
  root.finish();

  c.reservoir.dt = c.dt;
  c.reservoir.seed = c.seed;
  c.lyapunov.periods = map ? std::vector<double>{0.0, 0.0, 0.0, 0.0}
                           : std::vector<double>{kTwoPi, 0.0, kTwoPi, 0.0};
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::filesystem::path resolve_config_path(const std::string& name_or_path) {
  namespace fs = std::filesystem;
  const fs::path direct(name_or_path);
  if (fs::exists(direct)) return direct;
  const char* env = std::getenv("HAMRC_PRESETS");
  const fs::path dir = env && *env ? fs::path(env) : fs::path(HAMRC_PRESET_DIR);
  const fs::path preset = dir / (name_or_path + ".json");
  if (fs::exists(preset)) return preset;
  throw ConfigError("no config file or preset named '" + name_or_path + "'");
}

std::string config_to_json(const ExperimentConfig& c) {
  json j;
  j["name"] = c.name;
  j["system"] = system_name(c.system);
  j["mode"] = c.mode == TrainingMode::kStandard ? "standard" : "parameter_aware";
  if (c.system == SystemKind::kStandardMap) {
    j["K"] = c.k;
    j["literal_kick"] = c.literal_kick;
  }
  j["dt"] = c.dt;
  j["training"] = {{"betas", c.training_betas},
                   {"segment_length", c.segment_length},
                   {"washout", c.washout}};
  const auto& r = c.reservoir;
  j["reservoir"] = {{"nodes", r.nodes},
                    {"density", r.density},
                    {"spectral_radius", r.spectral_radius},
                    {"leak", r.leak},
                    {"input_scale", r.input_scale},
                    {"ridge", r.ridge}};
  j["prediction"] = {{"steps", c.prediction_steps},
                     {"transient", c.transient},
                     {"valid_threshold", c.valid_threshold},
                     {"project_outputs", c.project_outputs},
                     {"divergence_limit", c.divergence_limit}};
  json eval = {{"betas", c.evaluation_betas}, {"include_training", c.evaluate_training_betas}};
  if (c.evaluation_draw) {
    const auto& d = *c.evaluation_draw;
    eval["random"] = {{"count", d.count}, {"lo", d.lo}, {"hi", d.hi}, {"seed", d.seed}};
  }
  j["evaluation"] = eval;
  if (c.system == SystemKind::kPendulum) {
    json s = {{"trigger", c.section.trigger}, {"direction", direction_name(c.section.direction)}};
    if (c.section.gate) {
      s["gate"] = *c.section.gate;
      s["gate_sign"] = c.section.gate_sign == GateSign::kPositive ? "positive" : "negative";
    }
    j["section"] = s;
  }
  j["seeds"] = {{"reservoir", c.seed}, {"state", c.state_seed}};
  j["output_dir"] = c.output_dir;
  j["threads"] = c.threads;
  const auto& l = c.lyapunov;
  j["lyapunov"] = {{"theiler_window", l.theiler_window},
                   {"neighbors", l.neighbors},
                   {"horizon", l.horizon},
                   {"fit_window", l.fit_window},
                   {"max_references", l.max_references}};
  const auto& g = c.hyperopt.ranges;
  j["hyperopt"] = {{"budget", c.hyperopt.budget},
                   {"validation_steps", c.hyperopt.validation_steps},
                   {"ranges",
                    {{"density", g.density},
                     {"spectral_radius", g.spectral_radius},
                     {"leak", g.leak},
                     {"input_scale", g.input_scale},
                     {"log10_ridge", g.log10_ridge}}}};
  return j.dump(2);
}

}  // namespace hamrc

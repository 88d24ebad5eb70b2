#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "hamrc/analysis.hpp"
#include "hamrc/reservoir.hpp"

namespace hamrc {

enum class SystemKind { kPendulum, kStandardMap };
enum class TrainingMode { kStandard, kParameterAware };

/// Evaluation betas drawn uniformly in [lo, hi) from a fixed seed.
struct BetaDraw {
  int count = 0;
  double lo = 0.0;
  double hi = 1.0;
  std::uint64_t seed = 0;
};

struct HyperoptRanges {
  std::array<double, 2> density{0.01, 1.0};
  std::array<double, 2> spectral_radius{0.1, 3.0};
  std::array<double, 2> leak{0.1, 1.0};
  std::array<double, 2> input_scale{0.1, 3.0};
  std::array<double, 2> log10_ridge{-10.0, -1.0};
};

struct HyperoptSettings {
  int budget = 50;
  /// Held-out samples following the last training segment.
  int validation_steps = 500;
  HyperoptRanges ranges;
};

struct ExperimentConfig {
  std::string name = "experiment";
  SystemKind system = SystemKind::kPendulum;
  TrainingMode mode = TrainingMode::kParameterAware;

  double k = 0.5;
  bool literal_kick = false;
  double dt = 0.2;

  std::vector<double> training_betas;
  /// Samples per training segment, the initial condition included.
  int segment_length = 3000;
  ReservoirConfig reservoir;
  int washout = 100;

  int prediction_steps = 10000;
  /// Closed-loop outputs discarded before climate statistics.
  int transient = 500;
  std::vector<double> evaluation_betas;
  std::optional<BetaDraw> evaluation_draw;
  bool evaluate_training_betas = false;

  SectionPredicate section = pendulum_section_gated();
  std::uint64_t seed = 1;
  std::uint64_t state_seed = 1;
  std::string output_dir = "out";
  double valid_threshold = 0.25;
  bool project_outputs = false;
  /// Output magnitude that stops a closed-loop run.
  double divergence_limit = 1e6;
  int threads = 1;

  LyapunovSeriesOptions lyapunov;
  HyperoptSettings hyperopt;

  /// Evaluation betas in run order: training betas (when requested), the
  /// explicit list, then the seeded draw.
  std::vector<double> resolved_evaluation_betas() const;

  /// Throws ConfigError naming the offending field.
  void validate() const;
};

/// Parses a JSON document. Unknown keys and ill-typed values raise
/// ConfigError with the dotted path of the field.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Resolves a file path or a preset name ("fig1a"). Presets are looked up in
/// $HAMRC_PRESETS when set, else in the source tree's presets directory.
std::filesystem::path resolve_config_path(const std::string& name_or_path);

/// Canonical JSON text; a fixed point of parse_config followed by config_to_json.
std::string config_to_json(const ExperimentConfig& config);

const char* system_name(SystemKind kind);

}  // namespace hamrc

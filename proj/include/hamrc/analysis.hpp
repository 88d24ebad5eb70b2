#pragma once

#include <functional>
#include <map>
#include <optional>
#include <vector>

#include "hamrc/reservoir.hpp"

namespace hamrc {

enum class CrossingDirection { kAscending, kDescending, kAny };
enum class GateSign { kPositive, kNegative };

/// Hypersurface trigger(x) = 0 crossed in `direction`, optionally gated on
/// the sign of another coordinate at the crossing.
struct SectionPredicate {
  int trigger = 0;
  CrossingDirection direction = CrossingDirection::kAny;
  std::optional<int> gate;
  GateSign gate_sign = GateSign::kPositive;
};

/// omega1 = 0 with theta1 > 0 (pendulum observation layout).
SectionPredicate pendulum_section_gated();
/// omega1 = 0 with d omega1/dt > 0.
SectionPredicate pendulum_section_ascending();

/// Crossing points of one trajectory.
struct PoincareSet {
  double beta = 0.0;
  Matrix points;  // d x M, full interpolated state
  std::vector<double> times;

  Eigen::Index size() const { return points.cols(); }
};

enum class DiagramSource { kMachine, kModel };

/// beta -> PoincareSet for one source. Betas are unique.
class KamDiagram {
 public:
  explicit KamDiagram(DiagramSource source) : source_(source) {}

  /// Throws std::invalid_argument on a duplicate beta.
  void add(PoincareSet set);
  DiagramSource source() const { return source_; }
  const std::map<double, PoincareSet>& entries() const { return entries_; }

 private:
  DiagramSource source_;
  std::map<double, PoincareSet> entries_;
};

/// Sign changes of the trigger coordinate between consecutive samples,
/// filtered by direction and gate, linearly interpolated to the zero
/// crossing. Sample k sits at time t0 + k*dt.
PoincareSet poincare_section(const Matrix& trajectory, double dt,
                             const SectionPredicate& predicate, double t0 = 0.0);

/// The standard map is its own section: decoded (theta, p) points.
PoincareSet map_section(const Matrix& observables);

/// Coordinates compared by climate_distance. A positive period marks an
/// angular coordinate compared by minimal image.
struct Projection {
  std::vector<int> indices;
  std::vector<double> periods;
};

/// (wrapped theta2, omega2) of pendulum section points.
Projection pendulum_projection();
/// (theta, p) on the torus.
Projection map_projection();

/// Symmetric mean nearest-neighbour distance between two point clouds.
double climate_distance(const PoincareSet& a, const PoincareSet& b,
                        const Projection& projection);

struct LyapunovSeriesOptions {
  /// Embedding dimension for scalar series; vector series are used as-is.
  int embedding_dim = 3;
  int delay = 1;
  int theiler_window = 50;
  int neighbors = 5;
  /// Divergence is followed for this many samples.
  int horizon = 50;
  /// Width of the sliding linear fit.
  int fit_window = 20;
  /// Upper bound on the number of reference points (evenly strided).
  int max_references = 2500;
  int min_pairs = 20;
  /// Coordinates treated as angles with this period (empty: none).
  std::vector<double> periods;
};

struct LyapunovSeriesResult {
  double exponent = 0.0;
  std::vector<double> divergence;  // mean log separation per step
  int fit_start = 0;
  double r_squared = 0.0;
  long pairs = 0;
};

/// Largest Lyapunov exponent from a time series by nearest-neighbour
/// divergence: mean log separation of neighbour pairs as a function of
/// elapsed time, slope taken from the sliding window with maximal R^2.
/// Throws NumericalError("insufficient recurrence") when too few pairs exist.
LyapunovSeriesResult series_lyapunov_detail(const Matrix& series, double dt,
                                            const LyapunovSeriesOptions& options = {});
double series_lyapunov(const Matrix& series, double dt,
                       const LyapunovSeriesOptions& options = {});

struct EnergyAudit {
  double mean = 0.0;
  double max_abs_dev = 0.0;
  std::vector<double> deviations;  // E(t) - E(first sample)
};

EnergyAudit energy_audit(const Matrix& trajectory,
                         const std::function<double(const Eigen::Ref<const Vector>&)>& energy);

}  // namespace hamrc

#include "hamrc/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "hamrc/errors.hpp"
#include "hamrc/models.hpp"

namespace hamrc {

namespace {

double periodic_delta(double a, double b, double period) {
  double d = a - b;
  if (period > 0.0) {
    d = std::remainder(d, period);
  }
  return d;
}

Matrix project(const PoincareSet& set, const Projection& proj) {
  Matrix out(static_cast<Eigen::Index>(proj.indices.size()), set.size());
  for (std::size_t r = 0; r < proj.indices.size(); ++r) {
    const int idx = proj.indices[r];
    if (idx < 0 || idx >= set.points.rows())
      throw std::invalid_argument("projection index out of range");
    out.row(static_cast<Eigen::Index>(r)) = set.points.row(idx);
  }
  return out;
}

double mean_nearest(const Matrix& from, const Matrix& to, const std::vector<double>& periods) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < from.cols(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < to.cols(); ++j) {
      double sq = 0.0;
      for (Eigen::Index r = 0; r < from.rows(); ++r) {
        const double d = periodic_delta(from(r, i), to(r, j), periods[static_cast<std::size_t>(r)]);
        sq += d * d;
        if (sq >= best) break;
      }
      best = std::min(best, sq);
    }
    total += std::sqrt(best);
  }
  return total / static_cast<double>(from.cols());
}

}  // namespace

SectionPredicate pendulum_section_gated() {
  return {1, CrossingDirection::kAny, 0, GateSign::kPositive};
}

SectionPredicate pendulum_section_ascending() {
  return {1, CrossingDirection::kAscending, std::nullopt, GateSign::kPositive};
}

void KamDiagram::add(PoincareSet set) {
  const double beta = set.beta;
  if (!entries_.emplace(beta, std::move(set)).second)
    throw std::invalid_argument("duplicate beta in KAM diagram: " + std::to_string(beta));
}

PoincareSet poincare_section(const Matrix& trajectory, double dt,
                             const SectionPredicate& predicate, double t0) {
  const auto d = trajectory.rows();
  if (predicate.trigger < 0 || predicate.trigger >= d ||
      (predicate.gate && (*predicate.gate < 0 || *predicate.gate >= d)))
    throw std::invalid_argument("section predicate index out of range");
  PoincareSet out;
  std::vector<Eigen::Index> left;
  std::vector<double> fraction;
  for (Eigen::Index k = 0; k + 1 < trajectory.cols(); ++k) {
    const double x0 = trajectory(predicate.trigger, k);
    const double x1 = trajectory(predicate.trigger, k + 1);
    const bool up = x0 < 0.0 && x1 >= 0.0;
    const bool down = x0 > 0.0 && x1 <= 0.0;
    const bool hit = (predicate.direction == CrossingDirection::kAscending && up) ||
                     (predicate.direction == CrossingDirection::kDescending && down) ||
                     (predicate.direction == CrossingDirection::kAny && (up || down));
    if (!hit) continue;
    const double s = x0 / (x0 - x1);
    if (predicate.gate) {
      const double g = (1.0 - s) * trajectory(*predicate.gate, k) +
                       s * trajectory(*predicate.gate, k + 1);
      const bool ok = predicate.gate_sign == GateSign::kPositive ? g > 0.0 : g < 0.0;
      if (!ok) continue;
    }
    left.push_back(k);
    fraction.push_back(s);
  }
  out.points.resize(d, static_cast<Eigen::Index>(left.size()));
  out.times.reserve(left.size());
  for (std::size_t i = 0; i < left.size(); ++i) {
    const auto k = left[i];
    const double s = fraction[i];
    auto col = out.points.col(static_cast<Eigen::Index>(i));
    col = (1.0 - s) * trajectory.col(k) + s * trajectory.col(k + 1);
    out.times.push_back(t0 + (static_cast<double>(k) + s) * dt);
  }
  return out;
}

PoincareSet map_section(const Matrix& observables) {
  PoincareSet out;
  out.points.resize(2, observables.cols());
  for (Eigen::Index k = 0; k < observables.cols(); ++k) {
    const MapState s = decode_map_state(observables.col(k));
    out.points(0, k) = s.theta;
    out.points(1, k) = s.p;
    out.times.push_back(static_cast<double>(k));
  }
  return out;
}

Projection pendulum_projection() { return {{2, 3}, {kTwoPi, 0.0}}; }

Projection map_projection() { return {{0, 1}, {kTwoPi, kTwoPi}}; }

double climate_distance(const PoincareSet& a, const PoincareSet& b,
                        const Projection& projection) {
  if (a.size() == 0 || b.size() == 0)
    throw std::invalid_argument("climate distance of an empty set");
  if (projection.indices.size() != projection.periods.size() || projection.indices.empty())
    throw std::invalid_argument("projection needs one period per index");
  const Matrix pa = project(a, projection);
  const Matrix pb = project(b, projection);
  return 0.5 * (mean_nearest(pa, pb, projection.periods) +
                mean_nearest(pb, pa, projection.periods));
}

LyapunovSeriesResult series_lyapunov_detail(const Matrix& series, double dt,
                                            const LyapunovSeriesOptions& opt) {
  if (!(dt > 0.0)) throw std::invalid_argument("series_lyapunov: dt must be > 0");
  if (opt.horizon < 2 || opt.fit_window < 2 || opt.fit_window > opt.horizon + 1 ||
      opt.neighbors < 1 || opt.delay < 1)
    throw std::invalid_argument("series_lyapunov: invalid options");
  // Delay-embed scalar series; use vector series directly.
  Matrix points;
  std::vector<double> periods = opt.periods;
  if (series.rows() == 1) {
    const Eigen::Index span = static_cast<Eigen::Index>(opt.embedding_dim - 1) * opt.delay;
    const Eigen::Index m = series.cols() - span;
    if (m < 1) throw NumericalError("insufficient recurrence");
    points.resize(opt.embedding_dim, m);
    for (int e = 0; e < opt.embedding_dim; ++e)
      points.row(e) = series.block(0, static_cast<Eigen::Index>(e) * opt.delay, 1, m);
    if (!periods.empty()) periods.assign(static_cast<std::size_t>(opt.embedding_dim), periods[0]);
  } else {
    points = series;
  }
  if (periods.empty()) periods.assign(static_cast<std::size_t>(points.rows()), 0.0);
  if (periods.size() != static_cast<std::size_t>(points.rows()))
    throw std::invalid_argument("series_lyapunov: one period per coordinate required");

  const Eigen::Index n = points.cols();
  const Eigen::Index usable = n - opt.horizon;
  if (usable < 2) throw NumericalError("insufficient recurrence");
  auto dist = [&](Eigen::Index i, Eigen::Index j) {
    double sq = 0.0;
    for (Eigen::Index r = 0; r < points.rows(); ++r) {
      const double d = periodic_delta(points(r, i), points(r, j), periods[static_cast<std::size_t>(r)]);
      sq += d * d;
    }
    return std::sqrt(sq);
  };

  const Eigen::Index stride =
      std::max<Eigen::Index>(1, (usable + opt.max_references - 1) / opt.max_references);
  std::vector<double> sum(static_cast<std::size_t>(opt.horizon) + 1, 0.0);
  std::vector<long> count(sum.size(), 0);
  long pairs = 0;
  std::vector<std::pair<double, Eigen::Index>> candidates;
  for (Eigen::Index i = 0; i < usable; i += stride) {
    candidates.clear();
    for (Eigen::Index j = 0; j < usable; ++j) {
      if (std::abs(i - j) <= opt.theiler_window) continue;
      const double d = dist(i, j);
      if (d > 0.0) candidates.emplace_back(d, j);
    }
    const auto k = std::min<std::size_t>(static_cast<std::size_t>(opt.neighbors), candidates.size());
    if (k == 0) continue;
    std::partial_sort(candidates.begin(), candidates.begin() + static_cast<long>(k), candidates.end());
    for (std::size_t c = 0; c < k; ++c) {
      const Eigen::Index j = candidates[c].second;
      for (int s = 0; s <= opt.horizon; ++s) {
        const double d = dist(i + s, j + s);
        if (d > 0.0) {
          sum[static_cast<std::size_t>(s)] += std::log(d);
          ++count[static_cast<std::size_t>(s)];
        }
      }
      ++pairs;
    }
  }
  if (pairs < opt.min_pairs) throw NumericalError("insufficient recurrence");

  LyapunovSeriesResult out;
  out.pairs = pairs;
  out.divergence.resize(sum.size());
  for (std::size_t s = 0; s < sum.size(); ++s)
    out.divergence[s] = count[s] > 0 ? sum[s] / static_cast<double>(count[s]) : 0.0;

  // Sliding least-squares fit; keep the window with maximal R^2.
  const int w = opt.fit_window;
  double best_r2 = -1.0;
  double best_slope = 0.0;
  int best_start = 0;
  for (int start = 0; start + w <= static_cast<int>(out.divergence.size()); ++start) {
    double mx = 0.0, my = 0.0;
    for (int t = 0; t < w; ++t) {
      mx += t;
      my += out.divergence[static_cast<std::size_t>(start + t)];
    }
    mx /= w;
    my /= w;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (int t = 0; t < w; ++t) {
      const double dx = t - mx;
      const double dy = out.divergence[static_cast<std::size_t>(start + t)] - my;
      sxx += dx * dx;
      sxy += dx * dy;
      syy += dy * dy;
    }
    const double slope = sxy / sxx;
    const double r2 = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 0.0;
    if (r2 > best_r2) {
      best_r2 = r2;
      best_slope = slope;
      best_start = start;
    }
  }
  out.exponent = best_slope / dt;
  out.fit_start = best_start;
  out.r_squared = best_r2;
  return out;
}

double series_lyapunov(const Matrix& series, double dt, const LyapunovSeriesOptions& options) {
  return series_lyapunov_detail(series, dt, options).exponent;
}

EnergyAudit energy_audit(const Matrix& trajectory,
                         const std::function<double(const Eigen::Ref<const Vector>&)>& energy) {
  EnergyAudit out;
  if (trajectory.cols() == 0) return out;
  const double e0 = energy(trajectory.col(0));
  out.deviations.reserve(static_cast<std::size_t>(trajectory.cols()));
  double total = 0.0;
  for (Eigen::Index k = 0; k < trajectory.cols(); ++k) {
    const double e = energy(trajectory.col(k));
    total += e;
    out.deviations.push_back(e - e0);
    out.max_abs_dev = std::max(out.max_abs_dev, std::abs(e - e0));
  }
  out.mean = total / static_cast<double>(trajectory.cols());
  return out;
}

}  // namespace hamrc

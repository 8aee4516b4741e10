#pragma once

#include <string>
#include <vector>

#include "coagsim/measures.hpp"

namespace coagsim {

struct TrajectorySample {
  double t = 0.0;
  MeasureState state;
  /// Cumulative mass vector removed by truncation (cutoff, pruning or lattice cap).
  Composition truncation_flux;
  /// Cumulative scalar gel observable (mass beyond the cap for lattice runs).
  double gel_mass = 0.0;
};

/// Picard telemetry for one time window of the regularized solver.
struct WindowReport {
  double t_start = 0.0;
  double length = 0.0;
  std::size_t iterations = 0;
  /// Max over grid times of the grid-TV distance between successive iterates.
  std::vector<double> distances;
  /// distances[k+1] / distances[k] for k >= 1 (ratios after the first iteration).
  double max_ratio_after_first = 0.0;
  /// sup_t ||g(t) - f0|| of the converged iterate (the contraction ball has radius 1).
  double ball_radius = 0.0;
  std::size_t max_particles = 0;
};

struct TrajectoryMeta {
  std::string solver;
  std::string kernel;
  double eps = 0.0;
  /// Set when the restricted initial state was empty.
  bool empty_initial = false;
  /// Requested output times and the grid times actually sampled.
  std::vector<std::pair<double, double>> output_times;
  std::vector<std::string> notes;
};

/// Time-ordered states with cached per-sample flux bookkeeping.
class Trajectory {
 public:
  explicit Trajectory(std::size_t dim = 1) : dim_(dim) {}

  /// Requires strictly increasing times and matching dimension.
  void append(TrajectorySample sample);

  std::size_t dim() const noexcept { return dim_; }
  const std::vector<TrajectorySample>& samples() const noexcept { return samples_; }
  std::size_t size() const noexcept { return samples_.size(); }
  bool empty() const noexcept { return samples_.empty(); }
  const TrajectorySample& front() const { return samples_.front(); }
  const TrajectorySample& back() const { return samples_.back(); }

  std::vector<double> times() const;
  std::vector<double> moment_series(double alpha) const;
  std::vector<Composition> mass_series() const;
  /// Sample whose time is nearest to t.
  const TrajectorySample& nearest(double t) const;

  TrajectoryMeta meta;
  std::vector<WindowReport> windows;

 private:
  std::size_t dim_;
  std::vector<TrajectorySample> samples_;
};

}  // namespace coagsim

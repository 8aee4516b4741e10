#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "coagsim/kernels.hpp"
#include "coagsim/measures.hpp"
#include "coagsim/trajectory.hpp"

namespace coagsim {

struct McParams {
  /// Initial particle count N (>= 2).
  std::size_t n_particles = 100000;
  double horizon = 1.0;
  std::uint64_t seed = 0;
  /// Times at which the empirical measure is emitted (t = 0 is always emitted).
  std::vector<double> record_times;
  /// Per-event and per-record mass-vector checks; InconsistencyError on failure.
  bool check_conservation = false;
};

struct McRun {
  /// Empirical measures: each particle carries weight M0(f0)/N; identical
  /// positions are pooled.
  Trajectory trajectory;
  std::size_t events = 0;
  std::size_t candidates = 0;
  /// Largest thinning acceptance ratio seen (always <= 1 for a valid envelope).
  double max_acceptance = 0.0;
  /// Mass fraction held by the largest particle at each emitted time.
  std::vector<double> largest_fraction;
};

/// Uniform double in [0, 1) from the top 53 bits.
double uniform01(std::mt19937_64& rng);

/// n i.i.d. draws from f0 / M0(f0).
std::vector<Composition> sample_initial(const MeasureState& f0, std::size_t n, std::mt19937_64& rng);

/// Marcus-Lushnikov process: every unordered pair coalesces at rate
/// K(x_i, x_j) M0(f0) / N. Candidates come from the majorant
/// 2 c2 omega(x_i) omega(x_j) through a Fenwick tree over omega and are
/// accepted with probability K / (2 c2 omega_i omega_j). A ratio above 1 means
/// the kernel breaks its declared envelope and raises InconsistencyError.
McRun simulate(const Kernel& kernel, const MeasureState& f0, const McParams& params);

/// `replicas` independent runs; replica r uses split_seed(params.seed, r).
/// Runs concurrently; the result does not depend on the worker count.
std::vector<McRun> ensemble(const Kernel& kernel, const MeasureState& f0, const McParams& params,
                            std::size_t replicas);

/// An observable read off a measure: a moment or the weight at one point.
struct Observable {
  enum class Kind { kMoment, kPointWeight };
  Kind kind = Kind::kMoment;
  double alpha = 0.0;
  Composition point;
  std::string label;

  static Observable moment(double alpha, std::string label);
  /// Weight of atoms within 1e-9 of `point`.
  static Observable point_weight(const Composition& point, std::string label);
  double operator()(const MeasureState& state) const;
};

struct ZScore {
  double t = 0.0;
  std::string label;
  double empirical_mean = 0.0;
  double empirical_sd = 0.0;  // replica standard deviation
  double deterministic = 0.0;
  double z = 0.0;
};

struct DeviationReport {
  std::vector<ZScore> scores;
  double max_abs_z = 0.0;
};

/// z = (mean - deterministic) / (sd / sqrt(R)) at every time shared (within
/// 1e-9) by all replicas and the deterministic trajectory. Relative gaps up
/// to 1e-12 count as zero; zero spread with a larger gap gives infinite z. Throws ParameterError when no time is shared.
DeviationReport compare(const std::vector<McRun>& empirical, const Trajectory& deterministic,
                        const std::vector<Observable>& observables);

}  // namespace coagsim

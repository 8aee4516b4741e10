#pragma once

#include <vector>

#include "coagsim/kernels.hpp"
#include "coagsim/measures.hpp"
#include "coagsim/pair_kernels.hpp"
#include "coagsim/trajectory.hpp"

namespace coagsim {

/// How long each Picard window is.
///   kTheorem:  window_length() of the window's initial state.
///   kFixed:    a constant length.
///   kAdaptive: steps_per_window * rate_step / abar, where abar is the
///              number-averaged loss rate of the window's initial state, so
///              each quadrature step has dt * abar = rate_step.
struct WindowPolicy {
  enum class Kind { kTheorem, kFixed, kAdaptive };
  Kind kind = Kind::kTheorem;
  double fixed_length = 0.0;
  double rate_step = 0.0;

  static WindowPolicy theorem() { return {}; }
  static WindowPolicy fixed(double length) { return {Kind::kFixed, length, 0.0}; }
  static WindowPolicy adaptive(double rate_step) { return {Kind::kAdaptive, 0.0, rate_step}; }
  friend bool operator==(const WindowPolicy&, const WindowPolicy&) = default;
};

struct GridSpec {
  /// Geometric growth ratio of the per-axis nodes.
  double q = kDefaultGridRatio;
  /// Unit lattice cells below this radius (0 disables).
  double lattice_radius = 0.0;
  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

struct RegularizationParams {
  double eps = 1e-3;
  double picard_tol = 1e-10;
  std::size_t max_picard_iters = 60;
  /// Quadrature steps per window (dt = window / steps_per_window).
  std::size_t steps_per_window = 64;
  GridSpec grid;
  WindowPolicy window;
  /// Atoms lighter than weight_floor * M0(window start) are dropped and logged as truncation.
  double weight_floor = 1e-20;
  /// Compaction budget: more atoms than this in one state is a resource error.
  std::size_t max_particles = 200000;
  Exec exec = default_exec();

  /// Throws ParameterError on eps outside (0,1), nonpositive tolerances or steps.
  void validate() const;
  BinGrid make_grid(std::size_t dim) const;
};

/// a[g](x) = sum_j w_j K(x, x_j).
double loss_rate(const Kernel& kernel, const MeasureState& state, const Composition& x);

/// Upper estimate of sup{K(x,y) : |x|, |y| in [eps, 2/eps]}: envelope at the
/// band corners {eps, 1, 2/eps}^2 joined with K over the support pairs.
double kernel_band_norm(const Kernel& kernel, const MeasureState& state, double eps);

/// 1 / (12 ||K||_eps (1 + M0)^2).
double window_length(double kernel_norm, double total_weight);
/// Same with ||K||_eps from kernel_band_norm; throws DegenerateKernelError when it is 0.
double window_length(const Kernel& kernel, const MeasureState& state, double eps);

/// sum_k w_k a[state](x_k) / sum_k w_k; 0 for an empty state.
double mean_loss_rate(const Kernel& kernel, const MeasureState& state, Exec exec = Exec::kSerial);

/// States on a uniform time grid.
struct GriddedPath {
  std::vector<double> times;
  std::vector<MeasureState> states;

  /// n + 1 copies of `state` at t0 + k (length / n).
  static GriddedPath constant(const MeasureState& state, double t0, double length, std::size_t n);
};

struct PicardOutput {
  GriddedPath path;
  /// Cumulative truncation mass vector at each grid time, relative to the window start.
  std::vector<Composition> flux;
  std::size_t max_particles = 0;
};

/// One application of the fixed-point operator: exponential survival of f0
/// under the loss rate of the iterate, plus the cutoff-damped gain of the
/// iterate transported with the same survival factor; trapezoid quadrature
/// in time; every grid state compacted on the parameter grid.
PicardOutput picard_apply(const Kernel& kernel, const RegularizationParams& params,
                          const MeasureState& f0, const GriddedPath& iterate);

struct WindowSolution {
  GriddedPath path;
  std::vector<Composition> flux;
  WindowReport report;
};

/// Iterates picard_apply from the constant-in-time iterate until successive
/// iterates are within picard_tol (max over grid times of grid-TV).
/// Throws NonContractionError when max_picard_iters is exhausted.
WindowSolution solve_window(const Kernel& kernel, const RegularizationParams& params,
                            const MeasureState& f0, double t0, double length);

/// Restricts f0 to the eps-band, then glues windows up to the horizon. Samples
/// are taken at window end points aligned with the requested output times.
Trajectory solve(const Kernel& kernel, const MeasureState& f0, double horizon,
                 std::vector<double> output_times, const RegularizationParams& params);

}  // namespace coagsim

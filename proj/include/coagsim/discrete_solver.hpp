#pragma once

#include <cstdint>
#include <vector>

#include "coagsim/kernels.hpp"
#include "coagsim/measures.hpp"
#include "coagsim/trajectory.hpp"

namespace coagsim {

enum class OverflowPolicy { kAbsorb };

/// Size-capped lattice system: every alpha in N_0^d with 1 <= |alpha| <= cap,
/// densely ranked. Pairs whose sum exceeds the cap feed the gel tally.
class DiscreteSystem {
 public:
  DiscreteSystem(Kernel kernel, std::size_t dim, std::int64_t cap,
                 OverflowPolicy overflow = OverflowPolicy::kAbsorb);

  const Kernel& kernel() const noexcept { return kernel_; }
  std::size_t dim() const noexcept { return dim_; }
  std::int64_t cap() const noexcept { return cap_; }
  OverflowPolicy overflow() const noexcept { return overflow_; }

  /// Number of lattice points.
  std::size_t size() const noexcept { return points_.size(); }
  const LatticePoint& point(std::size_t rank) const { return points_[rank]; }
  std::int64_t norm(std::size_t rank) const { return norms_[rank]; }
  /// Rank of alpha, or -1 when |alpha| > cap.
  std::ptrdiff_t rank_of(const LatticePoint& alpha) const;
  /// Rank of point(i) + point(j), or -1 when the sum leaves the lattice.
  std::ptrdiff_t sum_rank(std::size_t i, std::size_t j) const;
  /// K(point(i), point(j)); cached for small systems.
  double rate(std::size_t i, std::size_t j) const;
  /// Row i of the cached kernel matrix, or nullptr when it is not cached.
  const double* matrix_row(std::size_t i) const noexcept {
    return matrix_.empty() ? nullptr : matrix_.data() + i * points_.size();
  }

  std::vector<double> to_dense(const DiscreteState& state) const;
  DiscreteState to_state(std::span<const double> dense, double time) const;

 private:
  Kernel kernel_;
  std::size_t dim_;
  std::int64_t cap_;
  OverflowPolicy overflow_;
  std::vector<LatticePoint> points_;
  std::vector<std::int64_t> norms_;
  std::vector<Kernel::Prepared> feats_;
  std::vector<std::int32_t> index_;  // (cap+1)^d box -> rank
  std::vector<double> matrix_;       // P x P when cached
};

/// Time derivative of the dense state plus the gel mass-vector rate.
struct RateMap {
  std::vector<double> dn;
  Composition gel_rate;
};

/// dn/dt = 1/2 sum K(a-b,b) n(b) n(a-b) - n(a) sum_b K(a,b) n(b); pairs
/// leaving the cap contribute their mass to gel_rate. This is the plain
/// ordered-pair loop kept as the reference.
RateMap rhs_reference(const DiscreteSystem& system, std::span<const double> n);
/// Same rates from unordered occupied pairs, parallel over rows with
/// per-thread partials reduced in thread order.
RateMap rhs(const DiscreteSystem& system, std::span<const double> n);
/// Convenience overload on a sparse state.
RateMap rhs(const DiscreteSystem& system, const DiscreteState& state);

struct IntegrationParams {
  double rtol = 1e-8;
  /// Initial step; 0 picks one from the initial rates.
  double initial_step = 0.0;
  std::size_t max_steps = 10'000'000;
};

struct IntegrationStats {
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  std::size_t rhs_evaluations = 0;
  double min_step = 0.0;
};

struct DiscreteResult {
  /// Measure view: atoms at lattice points, truncation_flux = gel mass vector.
  Trajectory trajectory;
  std::vector<DiscreteState> lattice;
  IntegrationStats stats;
};

/// Dormand-Prince 5(4) integration of the capped system, landing exactly on
/// every output time (the horizon is always sampled). Error per entry is
/// weighted by (1 + |alpha|). Throws StiffnessError when the step falls below
/// 1e-14 * horizon.
DiscreteResult integrate(const DiscreteSystem& system, const DiscreteState& n0, double horizon,
                         std::vector<double> output_times, const IntegrationParams& params = {});

}  // namespace coagsim

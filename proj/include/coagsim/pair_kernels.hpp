#pragma once

#include <span>
#include <vector>

#include "coagsim/kernels.hpp"
#include "coagsim/measures.hpp"

namespace coagsim {

/// Which implementation of the O(P^2) pair loops to run. Both produce
/// bit-identical results: the parallel path reduces per-row partials in row
/// order.
enum class Exec { kSerial, kParallel };

/// kParallel when more than one OpenMP thread is available.
Exec default_exec() noexcept;
int worker_count() noexcept;
/// Caps OpenMP workers (COAGSIM_THREADS); n <= 0 leaves the runtime default.
void set_worker_count(int n) noexcept;

/// Kernel-prepared view of a set of atoms.
struct PreparedCloud {
  std::vector<Kernel::Prepared> feats;
  std::vector<double> w;

  std::size_t size() const noexcept { return w.size(); }
};

PreparedCloud prepare_cloud(const Kernel& kernel, std::span<const Particle> atoms);

/// out[k] = sum_j K(target_k, field_j) w_j.
void loss_rates_serial(const Kernel& kernel, const PreparedCloud& targets,
                       const PreparedCloud& field, std::span<double> out);
void loss_rates_parallel(const Kernel& kernel, const PreparedCloud& targets,
                         const PreparedCloud& field, std::span<double> out);
void loss_rates(Exec exec, const Kernel& kernel, const PreparedCloud& targets,
                const PreparedCloud& field, std::span<double> out);

/// Gain measure of one state: for each unordered pair {i, j} an atom at
/// x_i + x_j with weight K w_i w_j zeta_eps(x_i + x_j) (halved when i == j),
/// times `scale`. Atoms with zeta = 0 are not materialized. Adds into `sink`
/// and returns the (scaled) mass vector annihilated by the cutoff.
Composition accumulate_gain_serial(const Kernel& kernel, std::span<const Particle> atoms,
                                   const PreparedCloud& cloud, double eps, double scale,
                                   Compactor& sink);
Composition accumulate_gain_parallel(const Kernel& kernel, std::span<const Particle> atoms,
                                     const PreparedCloud& cloud, double eps, double scale,
                                     Compactor& sink);
Composition accumulate_gain(Exec exec, const Kernel& kernel, std::span<const Particle> atoms,
                            const PreparedCloud& cloud, double eps, double scale,
                            Compactor& sink);

}  // namespace coagsim

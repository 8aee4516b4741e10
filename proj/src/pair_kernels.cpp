#include "coagsim/pair_kernels.hpp"

#include <omp.h>

#include "coagsim/errors.hpp"

namespace coagsim {

Exec default_exec() noexcept { return worker_count() > 1 ? Exec::kParallel : Exec::kSerial; }

int worker_count() noexcept { return omp_get_max_threads(); }

void set_worker_count(int n) noexcept {
  if (n > 0) omp_set_num_threads(n);
}

PreparedCloud prepare_cloud(const Kernel& kernel, std::span<const Particle> atoms) {
  PreparedCloud c;
  c.feats.reserve(atoms.size());
  c.w.reserve(atoms.size());
  for (const auto& p : atoms) {
    c.feats.push_back(kernel.prepare(p.x));
    c.w.push_back(p.w);
  }
  return c;
}

namespace {

inline double row_rate(const Kernel& kernel, const Kernel::Prepared& x, const PreparedCloud& field) {
  double s = 0.0;
  const std::size_t n = field.size();
  for (std::size_t j = 0; j < n; ++j) s += kernel.eval(x, field.feats[j]) * field.w[j];
  return s;
}

void check_sizes(const PreparedCloud& targets, std::span<double> out) {
  if (out.size() != targets.size()) throw ParameterError("loss_rates: output size mismatch");
}

/// Gain atoms and annihilated mass of row i (pairs (i, j), j >= i).
struct RowGain {
  std::vector<Particle> atoms;
  Composition cut;
};

inline void row_gain(const Kernel& kernel, std::span<const Particle> atoms, const PreparedCloud& cloud,
                     double eps, double scale, std::size_t i, RowGain& out) {
  const std::size_t n = atoms.size();
  const double inv_eps = 1.0 / eps;
  const double hi = 2.0 / eps;
  const auto& xi = atoms[i];
  const double ri = cloud.feats[i].r;
  for (std::size_t j = i; j < n; ++j) {
    const double r = ri + cloud.feats[j].r;
    if (r >= hi) {
      // Entire gain annihilated by the cutoff.
      const double k = kernel.eval(cloud.feats[i], cloud.feats[j]);
      const double w = (i == j ? 0.5 : 1.0) * scale * k * xi.w * atoms[j].w;
      if (w > 0.0) out.cut += (xi.x + atoms[j].x) * w;
      continue;
    }
    const double k = kernel.eval(cloud.feats[i], cloud.feats[j]);
    const double w = (i == j ? 0.5 : 1.0) * scale * k * xi.w * atoms[j].w;
    if (!(w > 0.0)) continue;
    const Composition pos = xi.x + atoms[j].x;
    if (r <= inv_eps) {
      out.atoms.push_back({pos, w});
    } else {
      const double z = 2.0 - eps * r;
      out.cut += pos * ((1.0 - z) * w);
      if (z * w > 0.0) out.atoms.push_back({pos, z * w});
    }
  }
}

void check_eps(double eps) {
  if (!(eps > 0.0 && eps < 1.0)) throw ParameterError("gain: eps must lie in (0,1)");
}

}  // namespace

void loss_rates_serial(const Kernel& kernel, const PreparedCloud& targets, const PreparedCloud& field,
                       std::span<double> out) {
  check_sizes(targets, out);
  for (std::size_t k = 0; k < targets.size(); ++k) out[k] = row_rate(kernel, targets.feats[k], field);
}

void loss_rates_parallel(const Kernel& kernel, const PreparedCloud& targets, const PreparedCloud& field,
                         std::span<double> out) {
  check_sizes(targets, out);
  const auto n = static_cast<std::ptrdiff_t>(targets.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t k = 0; k < n; ++k) out[k] = row_rate(kernel, targets.feats[k], field);
}

void loss_rates(Exec exec, const Kernel& kernel, const PreparedCloud& targets,
                const PreparedCloud& field, std::span<double> out) {
  if (exec == Exec::kParallel) {
    loss_rates_parallel(kernel, targets, field, out);
  } else {
    loss_rates_serial(kernel, targets, field, out);
  }
}

Composition accumulate_gain_serial(const Kernel& kernel, std::span<const Particle> atoms,
                                   const PreparedCloud& cloud, double eps, double scale,
                                   Compactor& sink) {
  check_eps(eps);
  const std::size_t dim = sink.grid().dim();
  Composition cut(dim);
  RowGain row{{}, Composition(dim)};
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    row.atoms.clear();
    row.cut = Composition(dim);
    row_gain(kernel, atoms, cloud, eps, scale, i, row);
    sink.add(row.atoms);
    cut += row.cut;
  }
  return cut;
}

Composition accumulate_gain_parallel(const Kernel& kernel, std::span<const Particle> atoms,
                                     const PreparedCloud& cloud, double eps, double scale,
                                     Compactor& sink) {
  check_eps(eps);
  const std::size_t dim = sink.grid().dim();
  const std::size_t n = atoms.size();
  std::vector<RowGain> rows(n, RowGain{{}, Composition(dim)});
  const auto sn = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(dynamic, 8)
  for (std::ptrdiff_t i = 0; i < sn; ++i) {
    row_gain(kernel, atoms, cloud, eps, scale, static_cast<std::size_t>(i), rows[i]);
  }
  Composition cut(dim);
  for (const auto& row : rows) {
    sink.add(row.atoms);
    cut += row.cut;
  }
  return cut;
}

Composition accumulate_gain(Exec exec, const Kernel& kernel, std::span<const Particle> atoms,
                            const PreparedCloud& cloud, double eps, double scale, Compactor& sink) {
  if (exec == Exec::kParallel) return accumulate_gain_parallel(kernel, atoms, cloud, eps, scale, sink);
  return accumulate_gain_serial(kernel, atoms, cloud, eps, scale, sink);
}

}  // namespace coagsim

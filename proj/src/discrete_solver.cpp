#include "coagsim/discrete_solver.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "coagsim/errors.hpp"

namespace coagsim {

namespace {

constexpr std::size_t kMaxBox = std::size_t{1} << 26;
constexpr std::size_t kMatrixCacheLimit = 3000;

}  // namespace

DiscreteSystem::DiscreteSystem(Kernel kernel, std::size_t dim, std::int64_t cap, OverflowPolicy overflow)
    : kernel_(std::move(kernel)), dim_(dim), cap_(cap), overflow_(overflow) {
  if (dim == 0 || dim > kMaxDim) throw ParameterError("discrete system: dimension must lie in [1, 4]");
  if (cap < 2) throw ParameterError("discrete system: cap must be >= 2");
  const auto side = static_cast<std::size_t>(cap + 1);
  double box = 1.0;
  for (std::size_t i = 0; i < dim; ++i) box *= static_cast<double>(side);
  if (box > static_cast<double>(kMaxBox)) {
    throw ResourceError("discrete system: lattice box (cap+1)^d too large; lower the cap");
  }
  index_.assign(static_cast<std::size_t>(box), -1);
  for (std::size_t b = 0; b < index_.size(); ++b) {
    LatticePoint p;
    p.dim = dim;
    std::size_t rest = b;
    std::int64_t norm = 0;
    for (std::size_t i = 0; i < dim; ++i) {
      p.a[i] = static_cast<std::int64_t>(rest % side);
      rest /= side;
      norm += p.a[i];
    }
    if (norm == 0 || norm > cap) continue;
    index_[b] = static_cast<std::int32_t>(points_.size());
    points_.push_back(p);
    norms_.push_back(norm);
    feats_.push_back(kernel_.prepare(p.to_composition()));
  }
  const std::size_t n = points_.size();
  if (n <= kMatrixCacheLimit) {
    matrix_.resize(n * n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i; j < n; ++j) {
        const double k = kernel_.eval(feats_[i], feats_[j]);
        matrix_[i * n + j] = k;
        matrix_[j * n + i] = k;
      }
    }
  }
}

std::ptrdiff_t DiscreteSystem::rank_of(const LatticePoint& alpha) const {
  if (alpha.dim != dim_) throw DomainError("discrete system: key dimension mismatch");
  if (alpha.norm() > cap_) return -1;
  const auto side = static_cast<std::size_t>(cap_ + 1);
  std::size_t b = 0;
  std::size_t stride = 1;
  for (std::size_t i = 0; i < dim_; ++i) {
    if (alpha.a[i] < 0) throw DomainError("discrete system: negative multi-index entry");
    b += static_cast<std::size_t>(alpha.a[i]) * stride;
    stride *= side;
  }
  return index_[b];
}

std::ptrdiff_t DiscreteSystem::sum_rank(std::size_t i, std::size_t j) const {
  if (norms_[i] + norms_[j] > cap_) return -1;
  if (dim_ == 1) return static_cast<std::ptrdiff_t>(norms_[i] + norms_[j] - 1);
  LatticePoint s = points_[i];
  for (std::size_t k = 0; k < dim_; ++k) s.a[k] += points_[j].a[k];
  return rank_of(s);
}

double DiscreteSystem::rate(std::size_t i, std::size_t j) const {
  if (!matrix_.empty()) return matrix_[i * points_.size() + j];
  return kernel_.eval(feats_[i], feats_[j]);
}

std::vector<double> DiscreteSystem::to_dense(const DiscreteState& state) const {
  if (state.dim() != dim_) throw ParameterError("discrete system: state dimension mismatch");
  std::vector<double> n(points_.size(), 0.0);
  for (const auto& [alpha, v] : state.entries()) {
    const auto r = rank_of(alpha);
    if (r < 0) throw DomainError("discrete system: state entry beyond the cap");
    n[static_cast<std::size_t>(r)] = v;
  }
  return n;
}

DiscreteState DiscreteSystem::to_state(std::span<const double> dense, double time) const {
  DiscreteState s(dim_, cap_, time);
  for (std::size_t r = 0; r < dense.size(); ++r) {
    if (dense[r] > 0.0) s.set(points_[r], dense[r]);
  }
  return s;
}

namespace {

void check_dense(const DiscreteSystem& system, std::span<const double> n) {
  if (n.size() != system.size()) throw ParameterError("rhs: state size does not match the lattice");
}

void add_gel(const DiscreteSystem& system, std::size_t i, std::size_t j, double rate, double* gel) {
  const auto& a = system.point(i);
  const auto& b = system.point(j);
  for (std::size_t k = 0; k < system.dim(); ++k) gel[k] += rate * static_cast<double>(a.a[k] + b.a[k]);
}

}  // namespace

RateMap rhs_reference(const DiscreteSystem& system, std::span<const double> n) {
  check_dense(system, n);
  const std::size_t p = system.size();
  RateMap out{std::vector<double>(p, 0.0), Composition(system.dim())};
  for (std::size_t i = 0; i < p; ++i) {
    if (n[i] == 0.0) continue;
    for (std::size_t j = 0; j < p; ++j) {
      if (n[j] == 0.0) continue;
      const double k = system.rate(i, j) * n[i] * n[j];
      out.dn[i] -= k;
      const auto s = system.sum_rank(i, j);
      if (s >= 0) {
        out.dn[static_cast<std::size_t>(s)] += 0.5 * k;
      } else {
        add_gel(system, i, j, 0.5 * k, &out.gel_rate[0]);
      }
    }
  }
  return out;
}

namespace {

/// d = 1 with a cached matrix: rank r holds size r + 1 and the sum of ranks
/// i, j lands at rank i + j + 1, so every row is a contiguous sweep.
void line_rows(const DiscreteSystem& system, std::span<const double> n, std::size_t i, double* buf,
               double* gel) {
  const std::size_t p = system.size();
  const double ni = n[i];
  const double* row = system.matrix_row(i);
  double dot = 0.0;
#pragma omp simd reduction(+ : dot)
  for (std::size_t j = 0; j < p; ++j) dot += row[j] * n[j];
  buf[i] -= ni * dot;

  // Pairs (i, j) with j >= i: inside the cap while i + j + 1 < p.
  const std::size_t inside_end = p - 1 > i ? p - 1 - i : 0;  // j < inside_end stays in the lattice
  if (i < inside_end) {
    buf[2 * i + 1] += 0.5 * row[i] * ni * ni;
    double* dst = buf + i + 1;
#pragma omp simd
    for (std::size_t j = i + 1; j < inside_end; ++j) dst[j] += ni * row[j] * n[j];
  }
  double out = 0.0;
  for (std::size_t j = std::max(i, inside_end); j < p; ++j) {
    const double k = (j == i ? 0.5 : 1.0) * ni * row[j] * n[j];
    out += k * static_cast<double>(i + j + 2);
  }
  gel[0] += out;
}

}  // namespace

RateMap rhs(const DiscreteSystem& system, std::span<const double> n) {
  check_dense(system, n);
  const std::size_t p = system.size();
  const std::size_t d = system.dim();
  if (d == 1 && system.matrix_row(0) != nullptr) {
    const auto sp = static_cast<std::ptrdiff_t>(p);
    const int threads = p > 64 ? omp_get_max_threads() : 1;
    const std::size_t width = p + 1;
    std::vector<double> partial(static_cast<std::size_t>(threads) * width, 0.0);
#pragma omp parallel num_threads(threads)
    {
      double* buf = partial.data() + static_cast<std::size_t>(omp_get_thread_num()) * width;
#pragma omp for schedule(static, 1)
      for (std::ptrdiff_t i = 0; i < sp; ++i) {
        if (n[static_cast<std::size_t>(i)] != 0.0) line_rows(system, n, static_cast<std::size_t>(i), buf, buf + p);
      }
    }
    RateMap out{std::vector<double>(p, 0.0), Composition(1)};
    for (int t = 0; t < threads; ++t) {
      const double* buf = partial.data() + static_cast<std::size_t>(t) * width;
      for (std::size_t i = 0; i < p; ++i) out.dn[i] += buf[i];
      out.gel_rate[0] += buf[p];
    }
    return out;
  }
  std::vector<std::size_t> occ;
  for (std::size_t i = 0; i < p; ++i) {
    if (n[i] != 0.0) occ.push_back(i);
  }
  const auto m = static_cast<std::ptrdiff_t>(occ.size());
  const std::size_t width = p + d;
  const int threads = m > 64 ? omp_get_max_threads() : 1;
  std::vector<double> partial(static_cast<std::size_t>(threads) * width, 0.0);

#pragma omp parallel num_threads(threads)
  {
    double* buf = partial.data() + static_cast<std::size_t>(omp_get_thread_num()) * width;
    double* gel = buf + p;
#pragma omp for schedule(static, 1)
    for (std::ptrdiff_t a = 0; a < m; ++a) {
      const std::size_t i = occ[static_cast<std::size_t>(a)];
      const double ni = n[i];
      double loss_i = 0.0;
      for (std::ptrdiff_t b = a; b < m; ++b) {
        const std::size_t j = occ[static_cast<std::size_t>(b)];
        const double k = system.rate(i, j) * ni * n[j];
        const double gain = a == b ? 0.5 * k : k;
        loss_i += k;
        if (a != b) buf[j] -= k;
        const auto s = system.sum_rank(i, j);
        if (s >= 0) {
          buf[static_cast<std::size_t>(s)] += gain;
        } else {
          add_gel(system, i, j, gain, gel);
        }
      }
      buf[i] -= loss_i;
    }
  }

  RateMap out{std::vector<double>(p, 0.0), Composition(d)};
  for (int t = 0; t < threads; ++t) {
    const double* buf = partial.data() + static_cast<std::size_t>(t) * width;
    for (std::size_t i = 0; i < p; ++i) out.dn[i] += buf[i];
    for (std::size_t k = 0; k < d; ++k) out.gel_rate[k] += buf[p + k];
  }
  return out;
}

RateMap rhs(const DiscreteSystem& system, const DiscreteState& state) {
  const auto n = system.to_dense(state);
  return rhs(system, n);
}

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;

/// Lattice entries followed by the gel mass vector.
class Rhs {
 public:
  Rhs(const DiscreteSystem& system, IntegrationStats& stats) : system_(system), stats_(stats) {}

  void operator()(const std::vector<double>& y, std::vector<double>& f) {
    const std::size_t p = system_.size();
    auto r = rhs(system_, std::span<const double>(y.data(), p));
    std::copy(r.dn.begin(), r.dn.end(), f.begin());
    for (std::size_t k = 0; k < system_.dim(); ++k) f[p + k] = r.gel_rate[k];
    ++stats_.rhs_evaluations;
  }

 private:
  const DiscreteSystem& system_;
  IntegrationStats& stats_;
};

}  // namespace

DiscreteResult integrate(const DiscreteSystem& system, const DiscreteState& n0, double horizon,
                         std::vector<double> output_times, const IntegrationParams& params) {
  if (!(params.rtol > 0.0)) throw ParameterError("integrate: rtol must be > 0");
  if (!(horizon >= 0.0)) throw ParameterError("integrate: horizon must be >= 0");
  if (n0.size_cap() > system.cap()) throw ParameterError("integrate: initial state cap exceeds the system cap");

  const std::size_t p = system.size();
  const std::size_t d = system.dim();
  const std::size_t len = p + d;

  std::vector<double> targets;
  for (double t : output_times) {
    if (!(t >= 0.0)) throw ParameterError("integrate: output times must be >= 0");
    if (t > 0.0 && t <= horizon) targets.push_back(t);
  }
  if (horizon > 0.0) targets.push_back(horizon);
  std::sort(targets.begin(), targets.end());
  targets.erase(std::unique(targets.begin(), targets.end()), targets.end());

  DiscreteResult res;
  res.trajectory = Trajectory(d);
  res.trajectory.meta.solver = "discrete";
  res.trajectory.meta.kernel = system.kernel().name();

  std::vector<double> y(len, 0.0);
  {
    const auto dense = system.to_dense(n0);
    std::copy(dense.begin(), dense.end(), y.begin());
  }
  double m1_0 = 0.0;
  for (std::size_t r = 0; r < p; ++r) m1_0 += static_cast<double>(system.norm(r)) * y[r];
  const double atol_base = params.rtol * (m1_0 > 0.0 ? m1_0 : 1.0);
  std::vector<double> atol(len, atol_base);
  for (std::size_t r = 0; r < p; ++r) atol[r] = atol_base / (1.0 + static_cast<double>(system.norm(r)));

  auto record = [&](double t, const std::vector<double>& v) {
    std::vector<double> clamped(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(p));
    for (double& x : clamped) x = std::max(x, 0.0);
    DiscreteState s = system.to_state(clamped, t);
    Composition gel(d);
    for (std::size_t k = 0; k < d; ++k) gel[k] = v[p + k];
    res.trajectory.append({t, to_measure(s), gel, gel.norm()});
    res.lattice.push_back(std::move(s));
  };
  record(0.0, y);
  if (targets.empty()) return res;

  Rhs f(system, res.stats);
  std::vector<double> k1(len), k2(len), k3(len), k4(len), k5(len), k6(len), k7(len), tmp(len), ynew(len);
  f(y, k1);

  auto error_ratio = [&](double h) {
    double e = 0.0;
    for (std::size_t i = 0; i < len; ++i) {
      const double err = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
      const double sc = atol[i] + params.rtol * std::max(std::abs(y[i]), std::abs(ynew[i]));
      e = std::max(e, std::abs(err) / sc);
    }
    return e;
  };

  double h = params.initial_step;
  if (!(h > 0.0)) {
    double d0 = 0.0;
    for (std::size_t i = 0; i < len; ++i) {
      d0 = std::max(d0, std::abs(k1[i]) / (atol[i] + params.rtol * std::abs(y[i])));
    }
    h = d0 > 0.0 ? std::min(horizon, 0.01 / std::pow(d0, 0.2) * std::pow(params.rtol, 0.2)) : horizon;
    h = std::max(h, 1e-6 * horizon);
  }
  const double h_min = 1e-14 * horizon;
  res.stats.min_step = h;

  double t = 0.0;
  std::size_t steps = 0;
  for (double target : targets) {
    while (t < target) {
      if (++steps > params.max_steps) throw StiffnessError("integrate: step budget exhausted");
      const bool clipped = t + h >= target;
      const double hs = clipped ? target - t : h;

      for (std::size_t i = 0; i < len; ++i) tmp[i] = y[i] + hs * a21 * k1[i];
      f(tmp, k2);
      for (std::size_t i = 0; i < len; ++i) tmp[i] = y[i] + hs * (a31 * k1[i] + a32 * k2[i]);
      f(tmp, k3);
      for (std::size_t i = 0; i < len; ++i) tmp[i] = y[i] + hs * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
      f(tmp, k4);
      for (std::size_t i = 0; i < len; ++i) {
        tmp[i] = y[i] + hs * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
      }
      f(tmp, k5);
      for (std::size_t i = 0; i < len; ++i) {
        tmp[i] = y[i] + hs * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
      }
      f(tmp, k6);
      for (std::size_t i = 0; i < len; ++i) {
        ynew[i] = y[i] + hs * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
      }
      f(ynew, k7);

      const double err = error_ratio(hs);
      if (err <= 1.0) {
        t = clipped ? target : t + hs;
        y.swap(ynew);
        k1.swap(k7);
        ++res.stats.accepted;
        res.stats.min_step = std::min(res.stats.min_step, hs);
        const double grow = err > 0.0 ? std::clamp(0.9 * std::pow(err, -0.2), 0.2, 2.0) : 2.0;
        if (!clipped || hs >= h) h = hs * grow;
      } else {
        ++res.stats.rejected;
        h = 0.5 * hs;
        if (h < h_min) {
          std::ostringstream os;
          os << "integrate: step size " << h << " fell below " << h_min << " at t=" << t;
          throw StiffnessError(os.str());
        }
      }
    }
    record(target, y);
    res.trajectory.meta.output_times.emplace_back(target, target);
  }
  return res;
}

}  // namespace coagsim

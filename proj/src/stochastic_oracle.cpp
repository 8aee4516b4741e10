#include "coagsim/stochastic_oracle.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <map>

#include "coagsim/errors.hpp"
#include "coagsim/rng.hpp"

namespace coagsim {

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::vector<Composition> sample_initial(const MeasureState& f0, std::size_t n, std::mt19937_64& rng) {
  const auto atoms = f0.particles();
  if (atoms.empty()) throw ParameterError("sample_initial: initial measure is empty");
  std::vector<double> cdf;
  cdf.reserve(atoms.size());
  double s = 0.0;
  for (const auto& p : atoms) cdf.push_back(s += p.w);
  std::vector<Composition> out;
  out.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double u = uniform01(rng) * s;
    auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    if (it == cdf.end()) --it;
    out.push_back(atoms[static_cast<std::size_t>(it - cdf.begin())].x);
  }
  return out;
}

namespace {

/// Prefix sums over nonnegative weights with weighted sampling.
class Fenwick {
 public:
  explicit Fenwick(std::span<const double> w) : tree_(w.size() + 1, 0.0), value_(w.begin(), w.end()) {
    rebuild();
  }

  void set(std::size_t i, double w) {
    const double delta = w - value_[i];
    value_[i] = w;
    for (std::size_t k = i + 1; k < tree_.size(); k += k & (~k + 1)) tree_[k] += delta;
    if (++updates_ >= value_.size()) rebuild();
  }

  double total() const noexcept { return total_from_tree(); }
  double value(std::size_t i) const noexcept { return value_[i]; }

  /// Smallest index whose prefix sum exceeds u, skipping zero weights.
  std::size_t find(double u) const {
    std::size_t pos = 0;
    std::size_t step = std::bit_floor(tree_.size() - 1);
    for (; step > 0; step >>= 1) {
      const std::size_t next = pos + step;
      if (next < tree_.size() && tree_[next] <= u) {
        pos = next;
        u -= tree_[next];
      }
    }
    // pos is now the 0-based candidate; guard against rounding landing on a dead slot.
    std::size_t i = std::min(pos, value_.size() - 1);
    while (value_[i] == 0.0 && i > 0) --i;
    while (value_[i] == 0.0 && i + 1 < value_.size()) ++i;
    return i;
  }

  void rebuild() {
    std::fill(tree_.begin(), tree_.end(), 0.0);
    for (std::size_t i = 0; i < value_.size(); ++i) {
      const std::size_t k = i + 1;
      tree_[k] += value_[i];
      const std::size_t parent = k + (k & (~k + 1));
      if (parent < tree_.size()) tree_[parent] += tree_[k];
    }
    updates_ = 0;
  }

 private:
  double total_from_tree() const noexcept {
    double s = 0.0;
    for (std::size_t k = tree_.size() - 1; k > 0; k -= k & (~k + 1)) s += tree_[k];
    return s;
  }

  std::vector<double> tree_;
  std::vector<double> value_;
  std::size_t updates_ = 0;
};

MeasureState empirical(std::size_t dim, const std::vector<Composition>& xs, const std::vector<char>& alive,
                       double weight, double t) {
  std::map<std::vector<double>, std::size_t> pooled;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!alive[i]) continue;
    const auto v = xs[i].values();
    ++pooled[std::vector<double>(v.begin(), v.end())];
  }
  std::vector<Particle> ps;
  ps.reserve(pooled.size());
  for (const auto& [key, count] : pooled) {
    ps.push_back({Composition::from_span(key), weight * static_cast<double>(count)});
  }
  return MeasureState::from_trusted(dim, std::move(ps), t);
}

Composition total_mass(const std::vector<Composition>& xs, const std::vector<char>& alive, std::size_t dim) {
  Composition m(dim);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (alive[i]) m += xs[i];
  }
  return m;
}

}  // namespace

McRun simulate(const Kernel& kernel, const MeasureState& f0, const McParams& params) {
  if (params.n_particles < 2) throw ParameterError("simulate: N must be >= 2");
  if (!(params.horizon >= 0.0)) throw ParameterError("simulate: horizon must be >= 0");
  const std::size_t dim = f0.dim();
  const std::size_t n = params.n_particles;
  const double m0 = f0.total_weight();
  const double weight = m0 / static_cast<double>(n);

  std::vector<double> records;
  for (double t : params.record_times) {
    if (!(t >= 0.0)) throw ParameterError("simulate: record times must be >= 0");
    if (t > 0.0 && t <= params.horizon) records.push_back(t);
  }
  std::sort(records.begin(), records.end());
  records.erase(std::unique(records.begin(), records.end()), records.end());

  std::mt19937_64 rng(params.seed);
  std::vector<Composition> xs = sample_initial(f0, n, rng);
  std::vector<char> alive(n, 1);
  const auto omega_fn = kernel.weight();
  std::vector<double> omega(n);
  std::vector<Kernel::Prepared> feats(n);
  double sum_sq = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    omega[i] = omega_fn(xs[i]);
    feats[i] = kernel.prepare(xs[i]);
    sum_sq += omega[i] * omega[i];
  }
  Fenwick tree(omega);
  const double c2 = kernel.envelope().c2;
  const Composition mass0 = total_mass(xs, alive, dim);
  const bool integral = std::all_of(xs.begin(), xs.end(), [](const Composition& x) {
    for (double v : x.values()) {
      if (v != std::floor(v)) return false;
    }
    return true;
  });

  McRun run;
  run.trajectory = Trajectory(dim);
  run.trajectory.meta.solver = "marcus-lushnikov";
  run.trajectory.meta.kernel = kernel.name();
  std::size_t count = n;
  double largest = 0.0;
  for (const auto& x : xs) largest = std::max(largest, x.norm());
  const double total_size = mass0.norm();

  auto emit = [&](double t) {
    if (params.check_conservation) {
      const Composition m = total_mass(xs, alive, dim);
      const bool ok = integral ? m == mass0 : l1_distance(m, mass0) <= 1e-12 * mass0.norm();
      if (!ok) throw InconsistencyError("simulate: ensemble mass vector changed");
    }
    run.trajectory.append({t, empirical(dim, xs, alive, weight, t), Composition(dim), 0.0});
    run.largest_fraction.push_back(total_size > 0.0 ? largest / total_size : 0.0);
  };
  emit(0.0);

  std::size_t next_record = 0;
  double t = 0.0;
  const bool zero = kernel.identically_zero() || c2 == 0.0;
  while (true) {
    const double s = tree.total();
    const double rate = zero || count < 2 ? 0.0 : c2 * weight * std::max(s * s - sum_sq, 0.0);
    const double t_next = rate > 0.0 ? t - std::log1p(-uniform01(rng)) / rate
                                     : std::numeric_limits<double>::infinity();
    while (next_record < records.size() && records[next_record] < t_next) emit(records[next_record++]);
    if (t_next > params.horizon) break;
    t = t_next;

    std::size_t i = 0;
    std::size_t j = 0;
    do {
      i = tree.find(uniform01(rng) * s);
      j = tree.find(uniform01(rng) * s);
    } while (i == j);
    ++run.candidates;
    const double k = kernel.eval(feats[i], feats[j]);
    const double ratio = k / (2.0 * c2 * omega[i] * omega[j]);
    run.max_acceptance = std::max(run.max_acceptance, ratio);
    if (ratio > 1.0 + 1e-12) {
      throw InconsistencyError("simulate: kernel " + kernel.name() + " exceeds its majorant 2 c2 omega omega (ratio " +
                               format_double(ratio) + ")");
    }
    if (!(uniform01(rng) < ratio)) continue;

    Composition merged = xs[i] + xs[j];
    if (params.check_conservation) {
      const Composition back = merged - xs[i] - xs[j];
      for (double v : back.values()) {
        if (v != 0.0 && integral) throw InconsistencyError("simulate: coalescence changed the mass vector");
      }
    }
    xs[i] = merged;
    feats[i] = kernel.prepare(merged);
    alive[j] = 0;
    sum_sq -= omega[i] * omega[i] + omega[j] * omega[j];
    omega[i] = omega_fn(merged);
    omega[j] = 0.0;
    sum_sq += omega[i] * omega[i];
    tree.set(i, omega[i]);
    tree.set(j, 0.0);
    largest = std::max(largest, merged.norm());
    --count;
    ++run.events;
  }
  return run;
}

std::vector<McRun> ensemble(const Kernel& kernel, const MeasureState& f0, const McParams& params,
                            std::size_t replicas) {
  if (replicas == 0) throw ParameterError("ensemble: need at least one replica");
  std::vector<McRun> runs(replicas);
  std::vector<std::string> errors(replicas);
  const auto n = static_cast<std::ptrdiff_t>(replicas);
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t r = 0; r < n; ++r) {
    McParams p = params;
    p.seed = split_seed(params.seed, static_cast<std::uint64_t>(r));
    try {
      runs[static_cast<std::size_t>(r)] = simulate(kernel, f0, p);
    } catch (const std::exception& e) {
      errors[static_cast<std::size_t>(r)] = e.what();
    }
  }
  for (const auto& e : errors) {
    if (!e.empty()) throw InconsistencyError(e);
  }
  return runs;
}

Observable Observable::moment(double alpha, std::string label) {
  Observable o;
  o.kind = Kind::kMoment;
  o.alpha = alpha;
  o.label = std::move(label);
  return o;
}

Observable Observable::point_weight(const Composition& point, std::string label) {
  Observable o;
  o.kind = Kind::kPointWeight;
  o.point = point;
  o.label = std::move(label);
  return o;
}

double Observable::operator()(const MeasureState& state) const {
  if (kind == Kind::kMoment) return coagsim::moment(state, alpha);
  double s = 0.0;
  for (const auto& p : state.particles()) {
    if (p.x.dim() == point.dim() && l1_distance(p.x, point) <= 1e-9) s += p.w;
  }
  return s;
}

namespace {

/// Relative gaps below this are rounding noise (e.g. pooled weights at t = 0).
constexpr double kDeadBand = 1e-12;

}  // namespace

DeviationReport compare(const std::vector<McRun>& empirical, const Trajectory& deterministic,
                        const std::vector<Observable>& observables) {
  if (empirical.empty()) throw ParameterError("compare: no empirical replicas");
  auto find_time = [](const Trajectory& tr, double t) -> const TrajectorySample* {
    for (const auto& s : tr.samples()) {
      if (std::abs(s.t - t) <= 1e-9 * std::max(1.0, std::abs(t))) return &s;
    }
    return nullptr;
  };
  DeviationReport rep;
  const double r = static_cast<double>(empirical.size());
  bool shared = false;
  for (const auto& det : deterministic.samples()) {
    std::vector<const TrajectorySample*> hits;
    for (const auto& run : empirical) {
      const auto* s = find_time(run.trajectory, det.t);
      if (s == nullptr) break;
      hits.push_back(s);
    }
    if (hits.size() != empirical.size()) continue;
    shared = true;
    for (const auto& obs : observables) {
      double mean = 0.0;
      std::vector<double> vals;
      vals.reserve(hits.size());
      for (const auto* s : hits) vals.push_back(obs(s->state));
      for (double v : vals) mean += v;
      mean /= r;
      double var = 0.0;
      for (double v : vals) var += (v - mean) * (v - mean);
      var = vals.size() > 1 ? var / (r - 1.0) : 0.0;
      ZScore z;
      z.t = det.t;
      z.label = obs.label;
      z.empirical_mean = mean;
      z.empirical_sd = std::sqrt(var);
      z.deterministic = obs(det.state);
      const double gap = mean - z.deterministic;
      const double se = z.empirical_sd / std::sqrt(r);
      if (std::abs(gap) <= kDeadBand * std::max(std::abs(z.deterministic), std::abs(mean))) {
        z.z = 0.0;
      } else if (se > 0.0) {
        z.z = gap / se;
      } else {
        z.z = std::copysign(std::numeric_limits<double>::infinity(), gap);
      }
      rep.max_abs_z = std::max(rep.max_abs_z, std::abs(z.z));
      rep.scores.push_back(std::move(z));
    }
  }
  if (!shared) throw ParameterError("compare: empirical and deterministic trajectories share no times");
  return rep;
}

}  // namespace coagsim

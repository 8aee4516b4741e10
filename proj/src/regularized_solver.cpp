#include "coagsim/regularized_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "coagsim/errors.hpp"

namespace coagsim {

void RegularizationParams::validate() const {
  if (!(eps > 0.0 && eps < 1.0)) throw ParameterError("eps must lie in (0,1)");
  if (!(picard_tol > 0.0)) throw ParameterError("picard_tol must be > 0");
  if (max_picard_iters == 0) throw ParameterError("max_picard_iters must be >= 1");
  if (steps_per_window == 0) throw ParameterError("steps_per_window must be >= 1");
  if (window.kind == WindowPolicy::Kind::kFixed && !(window.fixed_length > 0.0)) {
    throw ParameterError("fixed window length must be > 0");
  }
  if (window.kind == WindowPolicy::Kind::kAdaptive && !(window.rate_step > 0.0)) {
    throw ParameterError("adaptive window rate_step must be > 0");
  }
  if (!(weight_floor >= 0.0)) throw ParameterError("weight_floor must be >= 0");
}

BinGrid RegularizationParams::make_grid(std::size_t dim) const {
  return BinGrid::for_band(dim, eps, grid.q, grid.lattice_radius);
}

double loss_rate(const Kernel& kernel, const MeasureState& state, const Composition& x) {
  require_positive_composition(x, "loss_rate");
  const auto px = kernel.prepare(x);
  double s = 0.0;
  for (const auto& p : state.particles()) s += p.w * kernel.eval(px, kernel.prepare(p.x));
  return s;
}

double kernel_band_norm(const Kernel& kernel, const MeasureState& state, double eps) {
  if (!(eps > 0.0 && eps < 1.0)) throw ParameterError("kernel_band_norm: eps must lie in (0,1)");
  const double corners[] = {eps, 1.0, 2.0 / eps};
  double norm = 0.0;
  for (double a : corners) {
    for (double b : corners) norm = std::max(norm, envelope_value(kernel.envelope(), a, b));
  }
  const auto cloud = prepare_cloud(kernel, state.particles());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    for (std::size_t j = i; j < cloud.size(); ++j) {
      norm = std::max(norm, kernel.eval(cloud.feats[i], cloud.feats[j]));
    }
  }
  return norm;
}

double window_length(double kernel_norm, double total_weight) {
  if (!(kernel_norm > 0.0)) throw DegenerateKernelError("window_length: ||K||_eps vanishes");
  const double m = 1.0 + total_weight;
  return 1.0 / (12.0 * kernel_norm * m * m);
}

double window_length(const Kernel& kernel, const MeasureState& state, double eps) {
  return window_length(kernel_band_norm(kernel, state, eps), state.total_weight());
}

double mean_loss_rate(const Kernel& kernel, const MeasureState& state, Exec exec) {
  const double m0 = state.total_weight();
  if (!(m0 > 0.0)) return 0.0;
  const auto cloud = prepare_cloud(kernel, state.particles());
  std::vector<double> rates(cloud.size());
  loss_rates(exec, kernel, cloud, cloud, rates);
  double s = 0.0;
  for (std::size_t k = 0; k < rates.size(); ++k) s += cloud.w[k] * rates[k];
  return s / m0;
}

GriddedPath GriddedPath::constant(const MeasureState& state, double t0, double length, std::size_t n) {
  GriddedPath g;
  g.times.reserve(n + 1);
  g.states.reserve(n + 1);
  for (std::size_t k = 0; k <= n; ++k) {
    const double t = k == n ? t0 + length : t0 + length * static_cast<double>(k) / static_cast<double>(n);
    g.times.push_back(t);
    MeasureState s = state;
    s.set_time(t);
    g.states.push_back(std::move(s));
  }
  return g;
}

namespace {

void require_uniform(const GriddedPath& g) {
  if (g.times.size() < 2 || g.times.size() != g.states.size()) {
    throw ParameterError("picard_apply: iterate needs >= 2 grid times with one state each");
  }
  const double dt = (g.times.back() - g.times.front()) / static_cast<double>(g.times.size() - 1);
  if (!(dt > 0.0)) throw ParameterError("picard_apply: grid times must increase");
  for (std::size_t k = 1; k < g.times.size(); ++k) {
    const double slack = 1e-9 * dt + 64.0 * std::numeric_limits<double>::epsilon() * std::abs(g.times[k]);
    if (std::abs((g.times[k] - g.times[k - 1]) - dt) > slack) {
      throw ParameterError("picard_apply: iterate grid is not uniform");
    }
  }
}

void check_budget(std::size_t n, const RegularizationParams& params) {
  if (n > params.max_particles) {
    throw ResourceError("picard_apply: " + std::to_string(n) + " atoms exceed the compaction budget of " +
                        std::to_string(params.max_particles));
  }
}

}  // namespace

PicardOutput picard_apply(const Kernel& kernel, const RegularizationParams& params,
                          const MeasureState& f0, const GriddedPath& iterate) {
  params.validate();
  require_uniform(iterate);
  const std::size_t dim = f0.dim();
  const BinGrid grid = params.make_grid(dim);
  const double eps = params.eps;
  const std::size_t n = iterate.times.size() - 1;
  const double floor = params.weight_floor * f0.total_weight();

  std::vector<PreparedCloud> clouds;
  clouds.reserve(n + 1);
  for (const auto& g : iterate.states) {
    if (g.dim() != dim) throw ParameterError("picard_apply: iterate dimension mismatch");
    clouds.push_back(prepare_cloud(kernel, g.particles()));
  }

  Compactor sink(grid);
  // Gain of iterate state m, compacted at unit scale, with its annihilated mass.
  auto gain_of = [&](std::size_t m, Composition& cut) {
    cut = accumulate_gain(params.exec, kernel, iterate.states[m].particles(), clouds[m], eps, 1.0, sink);
    auto g = sink.take(iterate.times[m]);
    check_budget(g.size(), params);
    return g;
  };

  PicardOutput out;
  out.path.times = iterate.times;
  out.path.states.reserve(n + 1);
  out.flux.reserve(n + 1);

  sink.add(f0.particles());
  out.path.states.push_back(sink.take(iterate.times[0]));
  out.flux.push_back(Composition(dim));
  out.max_particles = out.path.states.back().size();

  Composition cut_cur(dim);
  MeasureState gain_cur = gain_of(0, cut_cur);
  std::vector<double> rate_now;
  std::vector<double> rate_next;
  for (std::size_t m = 0; m < n; ++m) {
    const double dt = iterate.times[m + 1] - iterate.times[m];
    const double half = 0.5 * dt;

    sink.add(out.path.states[m].particles());
    for (const auto& p : gain_cur.particles()) sink.add(p.x, half * p.w);
    MeasureState pre = sink.take(iterate.times[m]);
    check_budget(pre.size(), params);

    const auto targets = prepare_cloud(kernel, pre.particles());
    rate_now.assign(pre.size(), 0.0);
    rate_next.assign(pre.size(), 0.0);
    loss_rates(params.exec, kernel, targets, clouds[m], rate_now);
    loss_rates(params.exec, kernel, targets, clouds[m + 1], rate_next);

    Composition cut_next(dim);
    MeasureState gain_next = gain_of(m + 1, cut_next);

    const auto& atoms = pre.particles();
    for (std::size_t k = 0; k < atoms.size(); ++k) {
      const double w = atoms[k].w * std::exp(-half * (rate_now[k] + rate_next[k]));
      if (w > 0.0) sink.add(atoms[k].x, w);
    }
    for (const auto& p : gain_next.particles()) sink.add(p.x, half * p.w);
    MeasureState next = sink.take(iterate.times[m + 1]);

    Composition flux = out.flux.back() + (cut_cur + cut_next) * half;
    if (floor > 0.0) {
      std::vector<Particle> kept;
      kept.reserve(next.size());
      for (const auto& p : next.particles()) {
        if (p.w < floor) {
          flux += p.x * p.w;
        } else {
          kept.push_back(p);
        }
      }
      if (kept.size() != next.size()) {
        auto tag = next.grid_tag();
        next = MeasureState::from_trusted(dim, std::move(kept), iterate.times[m + 1]);
        next.set_grid_tag(tag);
      }
    }
    out.max_particles = std::max(out.max_particles, next.size());
    out.path.states.push_back(std::move(next));
    out.flux.push_back(flux);
    gain_cur = std::move(gain_next);
    cut_cur = cut_next;
  }
  return out;
}

WindowSolution solve_window(const Kernel& kernel, const RegularizationParams& params,
                            const MeasureState& f0, double t0, double length) {
  params.validate();
  if (!(length > 0.0)) throw ParameterError("solve_window: window length must be > 0");
  const BinGrid grid = params.make_grid(f0.dim());
  const MeasureState start = compact(f0, grid);
  GriddedPath iterate = GriddedPath::constant(start, t0, length, params.steps_per_window);

  WindowSolution sol;
  sol.report.t_start = t0;
  sol.report.length = length;
  bool converged = false;
  for (std::size_t it = 1; it <= params.max_picard_iters; ++it) {
    PicardOutput next = picard_apply(kernel, params, start, iterate);
    double dist = 0.0;
    for (std::size_t m = 0; m < next.path.states.size(); ++m) {
      dist = std::max(dist, tv_distance(next.path.states[m], iterate.states[m], grid));
    }
    sol.report.distances.push_back(dist);
    sol.report.iterations = it;
    sol.report.max_particles = std::max(sol.report.max_particles, next.max_particles);
    iterate = std::move(next.path);
    sol.flux = std::move(next.flux);
    if (dist < params.picard_tol) {
      converged = true;
      break;
    }
  }

  std::vector<double> ratios;
  const auto& d = sol.report.distances;
  for (std::size_t k = 1; k < d.size(); ++k) ratios.push_back(d[k - 1] > 0.0 ? d[k] / d[k - 1] : 0.0);
  sol.report.max_ratio_after_first = ratios.empty() ? 0.0 : *std::max_element(ratios.begin(), ratios.end());
  if (!converged) {
    std::ostringstream os;
    os << "solve_window: Picard iteration did not reach tol " << params.picard_tol << " within "
       << params.max_picard_iters << " iterations on [" << t0 << ", " << t0 + length
       << "]; last distance " << d.back();
    throw NonContractionError(os.str(), ratios);
  }
  for (const auto& s : iterate.states) {
    sol.report.ball_radius = std::max(sol.report.ball_radius, tv_distance(s, start, grid));
  }
  sol.path = std::move(iterate);
  return sol;
}

Trajectory solve(const Kernel& kernel, const MeasureState& f0, double horizon,
                 std::vector<double> output_times, const RegularizationParams& params) {
  params.validate();
  if (!(horizon >= 0.0)) throw ParameterError("solve: horizon must be >= 0");
  const std::size_t dim = f0.dim();
  const BinGrid grid = params.make_grid(dim);

  std::vector<double> targets;
  for (double t : output_times) {
    if (!(t >= 0.0)) throw ParameterError("solve: output times must be >= 0");
    if (t > 0.0 && t <= horizon) targets.push_back(t);
  }
  if (horizon > 0.0) targets.push_back(horizon);
  std::sort(targets.begin(), targets.end());
  targets.erase(std::unique(targets.begin(), targets.end()), targets.end());

  Trajectory traj(dim);
  traj.meta.solver = "regularized";
  traj.meta.kernel = kernel.name();
  traj.meta.eps = params.eps;

  MeasureState state = compact(restrict_band(f0, params.eps), grid);
  state.set_time(0.0);
  traj.append({0.0, state, Composition(dim), 0.0});

  if (state.empty()) {
    traj.meta.empty_initial = true;
    traj.meta.notes.push_back("restricted initial state is empty; trajectory is identically empty");
    for (double t : targets) {
      MeasureState empty(dim, t);
      empty.set_grid_tag(grid.tag());
      traj.append({t, std::move(empty), Composition(dim), 0.0});
      traj.meta.output_times.emplace_back(t, t);
    }
    return traj;
  }

  Composition flux(dim);
  double t = 0.0;
  for (double target : targets) {
    while (t < target) {
      double length = 0.0;
      switch (params.window.kind) {
        case WindowPolicy::Kind::kFixed:
          length = params.window.fixed_length;
          break;
        case WindowPolicy::Kind::kTheorem:
          length = window_length(kernel, state, params.eps);
          break;
        case WindowPolicy::Kind::kAdaptive: {
          const double abar = mean_loss_rate(kernel, state, params.exec);
          if (!(abar > 0.0)) throw DegenerateKernelError("solve: mean loss rate vanishes; adaptive window undefined");
          length = static_cast<double>(params.steps_per_window) * params.window.rate_step / abar;
          break;
        }
      }
      // Land exactly on the target; when the remainder would leave a sliver
      // window, split the rest into two equal windows instead.
      const double remaining = target - t;
      bool lands = false;
      if (remaining <= length * (1.0 + 1e-9)) {
        length = remaining;
        lands = true;
      } else if (remaining < 1.5 * length) {
        length = remaining / 2.0;
      }
      WindowSolution sol = solve_window(kernel, params, state, t, length);
      flux += sol.flux.back();
      state = std::move(sol.path.states.back());
      traj.windows.push_back(std::move(sol.report));
      t = lands ? target : t + length;
      state.set_time(t);
    }
    traj.append({t, state, flux, 0.0});
    traj.meta.output_times.emplace_back(target, t);
  }
  return traj;
}

}  // namespace coagsim

#include <doctest.h>

#include <cmath>
#include <random>

#include "coagsim/errors.hpp"
#include "coagsim/pair_kernels.hpp"
#include "coagsim/stochastic_oracle.hpp"

using namespace coagsim;

namespace {

MeasureState monodisperse() {
  MeasureState f0(1);
  f0.add(Composition{1.0}, 1.0);
  return f0;
}

Trajectory constant_kernel_exact(const std::vector<double>& ts) {
  // K = 2, n(0) = delta_1: M0 = 1/(1+t), n_k = (t/(1+t))^(k-1)/(1+t)^2.
  Trajectory traj(1);
  for (double t : ts) {
    MeasureState s(1, t);
    for (int k = 1; k <= 400; ++k) {
      const double w = std::pow(t / (1.0 + t), k - 1) / ((1.0 + t) * (1.0 + t));
      if (w > 0.0) s.add(Composition{double(k)}, w);
    }
    traj.append({t, s, Composition(1), 0.0});
  }
  return traj;
}

}  // namespace

TEST_CASE("uniform01 stays in [0, 1)") {
  std::mt19937_64 rng(1);
  double lo = 1.0;
  double hi = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const double u = uniform01(rng);
    lo = std::min(lo, u);
    hi = std::max(hi, u);
  }
  CHECK(lo >= 0.0);
  CHECK(hi < 1.0);
  CHECK(hi > 0.999);
}

TEST_CASE("initial sampling follows the normalized weights") {
  MeasureState f0(2);
  f0.add(Composition{1.0, 0.0}, 0.75);
  f0.add(Composition{0.0, 1.0}, 0.25);
  std::mt19937_64 rng(5);
  const auto xs = sample_initial(f0, 40000, rng);
  std::size_t first = 0;
  for (const auto& x : xs) first += x[0] == 1.0;
  // Binomial sd = sqrt(40000 * 0.75 * 0.25) ~ 87.
  CHECK(std::abs(double(first) - 30000.0) < 5 * 87.0);
}

TEST_CASE("a single run conserves mass and reduces particle number") {
  McParams p;
  p.n_particles = 5000;
  p.horizon = 1.0;
  p.seed = 3;
  p.record_times = {0.5, 1.0};
  p.check_conservation = true;
  const auto run = simulate(Kernel::constant(2.0), monodisperse(), p);
  const auto& traj = run.trajectory;
  REQUIRE(traj.size() == 3);
  CHECK(traj.front().t == 0.0);
  CHECK(traj.back().t == 1.0);
  for (const auto& s : traj.samples()) CHECK(moment(s.state, 1.0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(moment(traj.back().state, 0.0) < moment(traj.front().state, 0.0));
  CHECK(run.events > 0);
  CHECK(run.max_acceptance <= 1.0);
  CHECK(run.largest_fraction.size() == traj.size());
}

TEST_CASE("runs are reproducible from the seed") {
  McParams p;
  p.n_particles = 2000;
  p.seed = 11;
  p.record_times = {1.0};
  const auto a = simulate(Kernel::additive(1.0), monodisperse(), p);
  const auto b = simulate(Kernel::additive(1.0), monodisperse(), p);
  CHECK(a.events == b.events);
  CHECK(moment(a.trajectory.back().state, 2.0) == moment(b.trajectory.back().state, 2.0));
  p.seed = 12;
  const auto c = simulate(Kernel::additive(1.0), monodisperse(), p);
  CHECK(moment(a.trajectory.back().state, 2.0) != moment(c.trajectory.back().state, 2.0));
}

TEST_CASE("ensemble does not depend on the worker count") {
  McParams p;
  p.n_particles = 2000;
  p.seed = 21;
  set_worker_count(1);
  const auto a = ensemble(Kernel::constant(1.0), monodisperse(), p, 4);
  set_worker_count(4);
  const auto b = ensemble(Kernel::constant(1.0), monodisperse(), p, 4);
  set_worker_count(1);
  REQUIRE(a.size() == 4);
  for (std::size_t r = 0; r < 4; ++r) CHECK(a[r].events == b[r].events);
  CHECK(a[0].events != a[1].events);
}

TEST_CASE("ensemble mean agrees with the constant-kernel solution") {
  McParams p;
  p.n_particles = 20000;
  p.horizon = 1.0;
  p.seed = 99;
  p.record_times = {0.5, 1.0};
  const auto runs = ensemble(Kernel::constant(2.0), monodisperse(), p, 8);
  const auto exact = constant_kernel_exact({0.0, 0.5, 1.0});
  const auto rep = compare(runs, exact,
                           {Observable::moment(0.0, "M0"), Observable::point_weight(Composition{1.0}, "n1")});
  CHECK(rep.scores.size() == 6);
  CHECK(rep.max_abs_z < 4.0);
  for (const auto& z : rep.scores) {
    if (z.t == 0.0) CHECK(z.z == 0.0);
  }
}

TEST_CASE("compare flags a wrong reference and requires shared times") {
  McParams p;
  p.n_particles = 5000;
  p.seed = 4;
  p.record_times = {1.0};
  const auto runs = ensemble(Kernel::constant(2.0), monodisperse(), p, 4);
  Trajectory shifted(1);
  MeasureState s(1, 1.0);
  s.add(Composition{1.0}, 0.8);
  shifted.append({1.0, s, Composition(1), 0.0});
  const auto rep = compare(runs, shifted, {Observable::moment(0.0, "M0")});
  CHECK(rep.max_abs_z > 10.0);

  Trajectory disjoint(1);
  MeasureState d(1, 0.7);
  d.add(Composition{1.0}, 1.0);
  disjoint.append({0.7, d, Composition(1), 0.0});
  CHECK_THROWS_AS(compare(runs, disjoint, {Observable::moment(0.0, "M0")}), ParameterError);
}

TEST_CASE("a kernel above its declared envelope is detected during thinning") {
  const Kernel liar = Kernel::custom(
      "understated", [](const Composition& x, const Composition& y) { return 10.0 * (x.norm() + y.norm()); },
      {0.0, 1.0, 0.0, 1.0, 0.0, 1.0});
  McParams p;
  p.n_particles = 500;
  CHECK_THROWS_AS(simulate(liar, monodisperse(), p), InconsistencyError);
}

TEST_CASE("invalid parameters") {
  McParams p;
  p.n_particles = 1;
  CHECK_THROWS_AS(simulate(Kernel::constant(), monodisperse(), p), ParameterError);
}

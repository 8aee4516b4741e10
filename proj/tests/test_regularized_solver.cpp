#include <doctest.h>

#include <cmath>

#include "coagsim/errors.hpp"
#include "coagsim/regularized_solver.hpp"

using namespace coagsim;

namespace {

MeasureState monodisperse(double w = 1.0) {
  MeasureState f0(1);
  f0.add(Composition{1.0}, w);
  return f0;
}

RegularizationParams small_params() {
  RegularizationParams p;
  p.eps = 1e-2;
  p.grid.lattice_radius = 16;
  p.steps_per_window = 16;
  p.window = WindowPolicy::fixed(0.0625);
  return p;
}

}  // namespace

TEST_CASE("parameter validation") {
  RegularizationParams p;
  CHECK_NOTHROW(p.validate());
  for (double eps : {0.0, 1.0, -0.5, 2.0}) {
    p.eps = eps;
    CHECK_THROWS_AS(p.validate(), ParameterError);
  }
  p = RegularizationParams{};
  p.steps_per_window = 0;
  CHECK_THROWS_AS(p.validate(), ParameterError);
  p = RegularizationParams{};
  p.picard_tol = 0.0;
  CHECK_THROWS_AS(p.validate(), ParameterError);
}

TEST_CASE("theorem window length") {
  CHECK(window_length(2.0, 1.0) == doctest::Approx(1.0 / (12.0 * 2.0 * 4.0)));
  const Kernel k = Kernel::constant(3.0);
  CHECK(window_length(k, monodisperse(0.5), 0.1) == doctest::Approx(1.0 / (12.0 * 3.0 * 2.25)));
  CHECK_THROWS_AS(window_length(Kernel::constant(0.0), monodisperse(), 0.1), DegenerateKernelError);
}

TEST_CASE("loss rate and mean loss rate") {
  MeasureState s(1);
  s.add(Composition{1.0}, 0.5);
  s.add(Composition{3.0}, 0.25);
  const Kernel k = Kernel::additive(1.0);
  CHECK(loss_rate(k, s, Composition{2.0}) == doctest::Approx(0.5 * 3.0 + 0.25 * 5.0));
  // abar = sum_i w_i a(x_i) / sum_i w_i.
  const double a1 = 0.5 * 2.0 + 0.25 * 4.0;
  const double a3 = 0.5 * 4.0 + 0.25 * 6.0;
  CHECK(mean_loss_rate(k, s) == doctest::Approx((0.5 * a1 + 0.25 * a3) / 0.75));
}

TEST_CASE("band norm bounds the kernel on the support") {
  MeasureState s(1);
  s.add(Composition{1.0}, 1.0);
  s.add(Composition{50.0}, 1.0);
  const Kernel k = Kernel::additive(1.0);
  CHECK(kernel_band_norm(k, s, 0.01) >= k(Composition{50.0}, Composition{50.0}));
}

TEST_CASE("constant kernel matches the closed-form number density") {
  const auto traj = solve(Kernel::constant(2.0), monodisperse(), 0.5, {0.25, 0.5}, small_params());
  for (double t : {0.25, 0.5}) {
    const auto& s = traj.nearest(t);
    CHECK(s.t == doctest::Approx(t));
    CHECK(moment(s.state, 0.0) == doctest::Approx(1.0 / (1.0 + t)).epsilon(1e-4));
    CHECK(moment(s.state, 1.0) + s.truncation_flux[0] == doctest::Approx(1.0).epsilon(1e-5));
  }
  CHECK_FALSE(traj.windows.empty());
  for (const auto& w : traj.windows) {
    CHECK(w.max_ratio_after_first <= 0.55);
    CHECK(w.iterations >= 2);
  }
}

TEST_CASE("serial and parallel execution produce identical trajectories") {
  auto p = small_params();
  p.exec = Exec::kSerial;
  const auto a = solve(Kernel::diffusion(1.0), monodisperse(), 0.25, {}, p);
  p.exec = Exec::kParallel;
  const auto b = solve(Kernel::diffusion(1.0), monodisperse(), 0.25, {}, p);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto& sa = a.samples()[i].state.particles();
    const auto& sb = b.samples()[i].state.particles();
    REQUIRE(sa.size() == sb.size());
    for (std::size_t j = 0; j < sa.size(); ++j) {
      CHECK(sa[j].x == sb[j].x);
      CHECK(sa[j].w == sb[j].w);
    }
  }
}

TEST_CASE("adaptive and theorem window policies reach the horizon") {
  auto p = small_params();
  p.window = WindowPolicy::adaptive(2e-3);
  const auto a = solve(Kernel::constant(1.0), monodisperse(), 0.2, {0.1}, p);
  CHECK(a.back().t == doctest::Approx(0.2));
  CHECK(a.nearest(0.1).t == doctest::Approx(0.1));

  p.window = WindowPolicy::theorem();
  const auto t = solve(Kernel::constant(1.0), monodisperse(), 0.05, {}, p);
  CHECK(t.back().t == doctest::Approx(0.05));
  // Each theorem window is at most 1 / (12 ||K|| (1 + M0)^2) = 1/48.
  for (const auto& w : t.windows) CHECK(w.length <= 1.0 / 48.0 + 1e-15);
}

TEST_CASE("initial data outside the band gives an empty trajectory") {
  MeasureState f0(1);
  f0.add(Composition{1000.0}, 1.0);
  const auto traj = solve(Kernel::constant(1.0), f0, 0.5, {}, small_params());
  CHECK(traj.meta.empty_initial);
  CHECK(moment(traj.back().state, 0.0) == 0.0);
}

TEST_CASE("mass beyond the cutoff is tallied as truncation flux") {
  auto p = small_params();
  p.eps = 0.1;  // band [0.1, 20]
  p.grid.lattice_radius = 20;
  const auto traj = solve(Kernel::additive(1.0), monodisperse(), 1.0, {}, p);
  const auto& last = traj.back();
  CHECK(last.truncation_flux[0] > 0.0);
  CHECK(moment(last.state, 1.0) + last.truncation_flux[0] == doctest::Approx(1.0).epsilon(1e-4));
}

TEST_CASE("exhausted Picard budget raises NonContractionError") {
  auto p = small_params();
  p.max_picard_iters = 1;
  CHECK_THROWS_AS(solve(Kernel::constant(2.0), monodisperse(), 0.25, {}, p), NonContractionError);
}

TEST_CASE("solve_window iterates to the tolerance") {
  const auto p = small_params();
  const auto f0 = restrict_band(monodisperse(), p.eps);
  const auto sol = solve_window(Kernel::constant(2.0), p, compact(f0, p.make_grid(1)), 0.0, 0.0625);
  REQUIRE(sol.report.distances.size() >= 2);
  CHECK(sol.report.distances.back() <= p.picard_tol);
  CHECK(sol.path.times.size() == p.steps_per_window + 1);
  CHECK(sol.report.ball_radius < 1.0);
}

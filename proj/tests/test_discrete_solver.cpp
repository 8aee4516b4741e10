#include <doctest.h>

#include <cmath>
#include <vector>

#include "coagsim/discrete_solver.hpp"
#include "coagsim/errors.hpp"
#include "oracles/frozen_values.hpp"

using namespace coagsim;

namespace {

DiscreteState monomers(std::size_t dim, std::int64_t cap) {
  DiscreteState n(dim, cap);
  LatticePoint e1;
  e1.dim = dim;
  e1.a[0] = 1;
  n.set(e1, 1.0);
  return n;
}

/// Analytic constant-kernel solution with K = 2: n_k(t) = (t/(1+t))^(k-1) / (1+t)^2.
double constant_kernel_nk(int k, double t) { return std::pow(t / (1.0 + t), k - 1) / ((1.0 + t) * (1.0 + t)); }

}  // namespace

TEST_CASE("lattice enumeration and ranks") {
  DiscreteSystem s(Kernel::constant(), 2, 4);
  // Points with 1 <= a + b <= 4: 2 + 3 + 4 + 5.
  CHECK(s.size() == 14);
  for (std::size_t r = 0; r < s.size(); ++r) CHECK(s.rank_of(s.point(r)) == std::ptrdiff_t(r));
  CHECK(s.rank_of(LatticePoint{3, 2}) == -1);
  const auto i = s.rank_of(LatticePoint{1, 1});
  const auto j = s.rank_of(LatticePoint{2, 0});
  CHECK(s.point(s.sum_rank(i, j)) == LatticePoint{3, 1});
  CHECK(s.sum_rank(s.rank_of(LatticePoint{2, 2}), s.rank_of(LatticePoint{1, 0})) == -1);
}

TEST_CASE("reference and optimized right-hand sides agree") {
  DiscreteSystem s(Kernel::diffusion(1.0), 2, 12);
  std::vector<double> n(s.size());
  for (std::size_t r = 0; r < n.size(); ++r) n[r] = 1.0 / (1.0 + r * r);
  const auto a = rhs_reference(s, n);
  const auto b = rhs(s, n);
  for (std::size_t r = 0; r < n.size(); ++r) CHECK(b.dn[r] == doctest::Approx(a.dn[r]).epsilon(1e-12));
  CHECK(b.gel_rate[0] == doctest::Approx(a.gel_rate[0]).epsilon(1e-12));
}

TEST_CASE("right-hand side conserves mass up to the gel rate") {
  DiscreteSystem s(Kernel::additive(1.0), 1, 20);
  std::vector<double> n(s.size(), 0.1);
  const auto r = rhs(s, n);
  double dm = 0.0;
  for (std::size_t k = 0; k < n.size(); ++k) dm += r.dn[k] * double(s.norm(k));
  CHECK(dm + r.gel_rate[0] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(r.gel_rate[0] > 0.0);
}

TEST_CASE("smoluchowski right-hand side for two monomer species") {
  // n(1) = 1 only: dn(1)/dt = -K n1^2, dn(2)/dt = K n1^2 / 2.
  DiscreteSystem s(Kernel::constant(2.0), 1, 5);
  std::vector<double> n(s.size(), 0.0);
  n[s.rank_of(LatticePoint{1})] = 1.0;
  const auto r = rhs(s, n);
  CHECK(r.dn[s.rank_of(LatticePoint{1})] == doctest::Approx(-2.0));
  CHECK(r.dn[s.rank_of(LatticePoint{2})] == doctest::Approx(1.0));
}

TEST_CASE("constant kernel against frozen explicit-Euler values and the closed form") {
  DiscreteSystem s(Kernel::constant(2.0), 1, 256);
  IntegrationParams p;
  p.rtol = 1e-10;
  const auto res = integrate(s, monomers(1, 256), 5.0, {0.5, 1.0, 2.0}, p);
  for (const auto& row : oracle::kConstantKernelEuler) {
    const auto& lat = res.lattice[&res.trajectory.nearest(row.t) - res.trajectory.samples().data()];
    CHECK(lat.time() == doctest::Approx(row.t));
    CHECK(moment(lat, 0.0) == doctest::Approx(row.m0).epsilon(1e-5));
    CHECK(lat.get(LatticePoint{1}) == doctest::Approx(row.n1).epsilon(1e-5));
    CHECK(lat.get(LatticePoint{2}) == doctest::Approx(row.n2).epsilon(1e-5));
    CHECK(moment(lat, 1.0) == doctest::Approx(row.m1).epsilon(1e-9));
    for (int k = 1; k <= 5; ++k) {
      LatticePoint a{k};
      CHECK(lat.get(a) == doctest::Approx(constant_kernel_nk(k, row.t)).epsilon(1e-6));
    }
  }
}

TEST_CASE("multiplicative kernel loses mass to the gel tally after t = 1") {
  DiscreteSystem s(Kernel::multiplicative(1.0), 1, 256);
  const auto res = integrate(s, monomers(1, 256), 1.5, {0.5, 1.0});
  const auto& early = res.trajectory.nearest(0.5);
  const auto& late = res.trajectory.back();
  CHECK(early.gel_mass < 1e-8);
  CHECK(late.gel_mass > 0.1);
  CHECK(moment(late.state, 1.0) + late.gel_mass == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("integration lands exactly on output times and records stats") {
  DiscreteSystem s(Kernel::additive(1.0), 1, 64);
  const auto res = integrate(s, monomers(1, 64), 1.0, {0.1, 0.3333});
  const auto ts = res.trajectory.times();
  REQUIRE(ts.size() == 4);
  CHECK(ts[0] == 0.0);
  CHECK(ts[1] == 0.1);
  CHECK(ts[2] == 0.3333);
  CHECK(ts[3] == 1.0);
  CHECK(res.stats.accepted > 0);
  CHECK(res.lattice.size() == ts.size());
}

TEST_CASE("multicomponent solutions preserve each mass component") {
  DiscreteSystem s(Kernel::constant(1.0), 2, 24);
  DiscreteState n0(2, 24);
  n0.set(LatticePoint{1, 0}, 0.6);
  n0.set(LatticePoint{0, 1}, 0.4);
  const auto res = integrate(s, n0, 1.0, {});
  const auto m = mass_vector(res.lattice.back());
  const auto g = res.trajectory.back().truncation_flux;
  CHECK(m[0] + g[0] == doctest::Approx(0.6).epsilon(1e-9));
  CHECK(m[1] + g[1] == doctest::Approx(0.4).epsilon(1e-9));
}

TEST_CASE("invalid input is rejected") {
  CHECK_THROWS(DiscreteSystem(Kernel::constant(), 1, 0));
  DiscreteSystem s(Kernel::constant(), 1, 8);
  CHECK_THROWS(integrate(s, monomers(1, 16), 1.0, {}));
  CHECK_THROWS(integrate(s, monomers(1, 8), -1.0, {}));
}

#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "coagsim/errors.hpp"
#include "coagsim/measures.hpp"

using namespace coagsim;

TEST_CASE("moments of a Dirac mixture") {
  MeasureState s(1);
  s.add(Composition{1.0}, 0.5);
  s.add(Composition{4.0}, 0.25);
  CHECK(moment(s, 0.0) == doctest::Approx(0.75));
  CHECK(moment(s, 1.0) == doctest::Approx(1.5));
  CHECK(moment(s, 0.5) == doctest::Approx(0.5 + 0.5));
  CHECK(moment(s, -1.0) == doctest::Approx(0.5 + 0.0625));
  CHECK(mass_vector(s)[0] == doctest::Approx(1.5));
}

TEST_CASE("measure state rejects invalid atoms") {
  MeasureState s(2);
  CHECK_THROWS_AS(s.add(Composition{0.0, 0.0}, 1.0), DomainError);
  CHECK_THROWS_AS(s.add(Composition{1.0, 0.0}, -1.0), ParameterError);
  CHECK_THROWS(s.add(Composition{1.0}, 1.0));
}

TEST_CASE("band restriction keeps [eps, 2/eps]") {
  MeasureState s(1);
  for (double r : {0.05, 0.1, 1.0, 20.0, 21.0}) s.add(Composition{r}, 1.0);
  const auto b = restrict_band(s, 0.1);
  CHECK(b.size() == 3);
  CHECK(moment(b, 1.0) == doctest::Approx(21.1));
}

TEST_CASE("grid axis is geometric with optional lattice part") {
  const BinGrid g(1, 0.01, 100.0, 2.0);
  const auto ax = g.axis();
  REQUIRE(ax.size() >= 3);
  CHECK(ax[0] == 0.0);
  CHECK(ax[1] == doctest::Approx(0.01));
  CHECK(ax[2] == doctest::Approx(0.02));
  CHECK(ax.back() >= 100.0);

  const BinGrid lat(1, 0.5, 200.0, 1.5, 8.0);
  for (int i = 1; i <= 8; ++i) CHECK(lat.node_of(Composition{double(i)}).has_value());
  for (double a : lat.axis()) {
    if (a >= 1.0) CHECK(a == std::round(a));
  }
}

TEST_CASE("compaction preserves total weight and mass vector") {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> u(0.05, 40.0);
  MeasureState s(2);
  for (int i = 0; i < 500; ++i) s.add(Composition{u(rng), u(rng)}, 0.001 * (1 + i % 7));
  const BinGrid g(2, 0.01, 100.0);
  const auto c = compact(s, g);
  CHECK(c.size() < s.size());
  CHECK(c.total_weight() == doctest::Approx(s.total_weight()).epsilon(1e-13));
  CHECK(mass_vector(c)[0] == doctest::Approx(mass_vector(s)[0]).epsilon(1e-13));
  CHECK(mass_vector(c)[1] == doctest::Approx(mass_vector(s)[1]).epsilon(1e-13));
  REQUIRE(c.grid_tag().has_value());
  CHECK(*c.grid_tag() == g.tag());
  for (const auto& p : c.particles()) CHECK(g.node_of(p.x).has_value());
}

TEST_CASE("compaction leaves node atoms in place and splits off-node atoms linearly") {
  const BinGrid g(1, 1.0, 64.0, 2.0);
  MeasureState s(1);
  s.add(Composition{4.0}, 1.0);
  s.add(Composition{6.0}, 2.0);  // between nodes 4 and 8
  const auto c = compact(s, g);
  REQUIRE(c.size() == 2);
  CHECK(c.particles()[0].x[0] == 4.0);
  CHECK(c.particles()[0].w == doctest::Approx(1.0 + 1.0));
  CHECK(c.particles()[1].x[0] == 8.0);
  CHECK(c.particles()[1].w == doctest::Approx(1.0));
}

TEST_CASE("compaction rejects atoms outside the grid box") {
  const BinGrid g(1, 1.0, 8.0, 2.0);
  MeasureState s(1);
  s.add(Composition{100.0}, 1.0);
  CHECK_THROWS_AS(compact(s, g), CompactionError);
}

TEST_CASE("tv distance on a shared grid") {
  const BinGrid g(1, 1.0, 16.0, 2.0);
  MeasureState a(1);
  a.add(Composition{2.0}, 1.0);
  MeasureState b(1);
  b.add(Composition{2.0}, 0.75);
  b.add(Composition{4.0}, 0.5);
  CHECK(tv_distance(compact(a, g), compact(b, g), g) == doctest::Approx(0.75));
}

TEST_CASE("discrete state bookkeeping") {
  DiscreteState n(2, 10);
  n.set(LatticePoint{1, 0}, 0.5);
  n.set(LatticePoint{2, 3}, 0.25);
  CHECK(n.get(LatticePoint{2, 3}) == 0.25);
  CHECK(n.get(LatticePoint{3, 3}) == 0.0);
  CHECK(moment(n, 0.0) == doctest::Approx(0.75));
  CHECK(moment(n, 1.0) == doctest::Approx(0.5 + 1.25));
  CHECK(mass_vector(n)[1] == doctest::Approx(0.75));
  CHECK_THROWS(n.set(LatticePoint{0, 0}, 1.0));
  CHECK_THROWS(n.set(LatticePoint{6, 5}, 1.0));
  CHECK_THROWS(n.set(LatticePoint{1, 1}, -1.0));
  const auto m = to_measure(n);
  CHECK(m.size() == 2);
  CHECK(moment(m, 1.0) == doctest::Approx(1.75));
}

TEST_CASE("state CSV round trip is exact") {
  MeasureState s(2, 0.375);
  s.add(Composition{0.1, 1.0 / 3.0}, std::exp(-7.0));
  s.add(Composition{2.0, 0.0}, 0.2);
  std::stringstream ss;
  write_state_csv(ss, s);
  const auto r = read_state_csv(ss);
  CHECK(r.time() == 0.375);
  REQUIRE(r.size() == 2);
  CHECK(r.particles()[0].x == s.particles()[0].x);
  CHECK(r.particles()[0].w == s.particles()[0].w);
}

TEST_CASE("lattice CSV round trip") {
  DiscreteState n(1, 50, 1.5);
  n.set(LatticePoint{3}, 0.125);
  n.set(LatticePoint{7}, 1.0 / 3.0);
  std::stringstream ss;
  write_lattice_csv(ss, n);
  const auto m = read_lattice_csv(ss);
  CHECK(m.time() == 1.5);
  REQUIRE(m.size() == 2);
  CHECK(m.particles()[1].x[0] == 7.0);
  CHECK(m.particles()[1].w == 1.0 / 3.0);
}

TEST_CASE("malformed CSV is rejected") {
  std::stringstream ss("# t=0 d=1\nx1,w\n1.0,abc\n");
  CHECK_THROWS(read_state_csv(ss));
}

TEST_CASE("format_double round trips") {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, 123456789.123}) CHECK(std::stod(format_double(v)) == v);
}

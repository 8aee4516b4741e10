#include <doctest.h>

#include <cmath>
#include <limits>

#include "coagsim/composition.hpp"
#include "coagsim/errors.hpp"

using namespace coagsim;

TEST_CASE("composition arithmetic and l1 norm") {
  Composition a{1.0, 2.0};
  Composition b{0.5, 0.25};
  CHECK(a.dim() == 2);
  CHECK(a.norm() == doctest::Approx(3.0));
  const Composition s = a + b;
  CHECK(s[0] == 1.5);
  CHECK(s[1] == 2.25);
  CHECK((a - b)[1] == 1.75);
  CHECK((2.0 * b)[0] == 1.0);
  CHECK(l1_distance(a, b) == doctest::Approx(0.5 + 1.75));
  CHECK(a == Composition{1.0, 2.0});
  CHECK_FALSE(a == b);
}

TEST_CASE("composition validation rejects points outside the positive cone") {
  CHECK_NOTHROW(require_positive_composition(Composition{0.0, 1.0}, "test"));
  CHECK_THROWS_AS(require_positive_composition(Composition{0.0, 0.0}, "test"), DomainError);
  CHECK_THROWS_AS(require_positive_composition(Composition{-1.0, 2.0}, "test"), DomainError);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(require_positive_composition(Composition{nan}, "test"), DomainError);
}

TEST_CASE("composition from span keeps the dimension") {
  const double v[3] = {1.0, 0.0, 4.0};
  const auto c = Composition::from_span(v);
  CHECK(c.dim() == 3);
  CHECK(c.norm() == 5.0);
}

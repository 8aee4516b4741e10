#include <doctest.h>

#include <cmath>
#include <functional>
#include <limits>

#include <nlohmann/json.hpp>

#include "coagsim/diagnostics.hpp"
#include "coagsim/errors.hpp"

using namespace coagsim;

namespace {

/// One-dimensional trajectory whose sample at t holds the atoms returned by `atoms(t)`.
Trajectory make_traj(const std::vector<double>& ts, const std::function<std::vector<Particle>(double)>& atoms,
                     const std::function<double(double)>& flux = [](double) { return 0.0; }) {
  Trajectory traj(1);
  for (double t : ts) {
    MeasureState s(1, atoms(t), t);
    Composition f{flux(t)};
    traj.append({t, s, f, flux(t)});
  }
  return traj;
}

std::vector<double> grid(double t0, double t1, int n) {
  std::vector<double> ts;
  for (int i = 0; i <= n; ++i) ts.push_back(t0 + (t1 - t0) * i / n);
  return ts;
}

}  // namespace

TEST_CASE("mass conservation counts the truncation flux") {
  // Mass 1 split between the atom and the recorded flux, with a small drift.
  auto traj = make_traj(
      grid(0, 1, 4), [](double t) { return std::vector<Particle>{{Composition{1.0}, 1.0 - 0.5 * t + 1e-7 * t}}; },
      [](double t) { return 0.5 * t; });
  const auto ok = mass_conservation_certificate(traj, Kernel::constant(), 1e-6);
  CHECK(ok.passed());
  CHECK(ok.slack == doctest::Approx(1e-6 - 1e-7));
  const auto tight = mass_conservation_certificate(traj, Kernel::constant(), 1e-8);
  CHECK(tight.verdict == Verdict::kFail);
  const auto gel = mass_conservation_certificate(traj, Kernel::power_law(0.5, 1.5, -0.75), 1e-6);
  CHECK(gel.verdict == Verdict::kInapplicable);
}

TEST_CASE("moment monotonicity") {
  auto decreasing = make_traj(grid(0, 1, 5), [](double t) {
    return std::vector<Particle>{{Composition{1.0}, 1.0 / (1.0 + t)}, {Composition{2.0}, 0.1}};
  });
  CHECK(moment_monotonicity_certificate(decreasing, Kernel::constant(), 0.0).passed());
  auto increasing = make_traj(grid(0, 1, 5), [](double t) { return std::vector<Particle>{{Composition{1.0}, 1.0 + t}}; });
  CHECK(moment_monotonicity_certificate(increasing, Kernel::constant(), 0.0).verdict == Verdict::kFail);
  // Constant kernel: the admissible window is [0, 1]; r widens it downward.
  CHECK(moment_monotonicity_certificate(decreasing, Kernel::constant(), -0.5).verdict == Verdict::kInapplicable);
  CHECK(moment_monotonicity_certificate(decreasing, Kernel::constant(), -0.5, 1.0).passed());
  CHECK(moment_monotonicity_certificate(decreasing, Kernel::constant(), 1.5).verdict == Verdict::kInapplicable);
  // Diffusion kernel: beta = lambda1 = 1/3.
  CHECK(moment_monotonicity_certificate(decreasing, Kernel::diffusion(), -1.0 / 3.0).passed());
}

TEST_CASE("picard contraction uses window telemetry") {
  auto traj = make_traj(grid(0, 1, 1), [](double) { return std::vector<Particle>{{Composition{1.0}, 1.0}}; });
  CHECK(picard_contraction_certificate(traj).verdict == Verdict::kInapplicable);
  WindowReport w;
  w.max_ratio_after_first = 0.2;
  traj.windows.push_back(w);
  const auto c = picard_contraction_certificate(traj, 0.55);
  CHECK(c.passed());
  CHECK(c.slack == doctest::Approx(0.35));
  w.max_ratio_after_first = 0.6;
  traj.windows.push_back(w);
  CHECK(picard_contraction_certificate(traj, 0.55).verdict == Verdict::kFail);
}

TEST_CASE("lattice support") {
  auto on = make_traj(grid(0, 1, 2), [](double) {
    return std::vector<Particle>{{Composition{1.0}, 0.5}, {Composition{7.0}, 0.5}};
  });
  CHECK(lattice_support_certificate(on).passed());
  auto off = make_traj(grid(0, 1, 2), [](double t) { return std::vector<Particle>{{Composition{1.0 + 0.25 * t}, 0.5}}; });
  const auto c = lattice_support_certificate(off);
  CHECK(c.verdict == Verdict::kFail);
  CHECK(c.slack == doctest::Approx(1e-12 - 0.25));
}

TEST_CASE("gelation onset from a ladder of truncation levels") {
  // M1 stays 1 until tc, then falls linearly with slope 1/2.
  auto ladder_traj = [](double tc) {
    return make_traj(grid(0, 2, 200), [tc](double t) {
      return std::vector<Particle>{{Composition{1.0}, t <= tc ? 1.0 : 1.0 - 0.5 * (t - tc)}};
    });
  };
  // The 1% drop comes 0.02 after tc, so onsets are 1.2, 1.1, 1.05.
  const auto a = ladder_traj(1.18);
  const auto b = ladder_traj(1.08);
  const auto c = ladder_traj(1.03);
  const auto onset = gelation_onset({{1, &a}, {2, &b}, {3, &c}});
  REQUIRE(onset.onsets.size() == 3);
  CHECK(onset.onsets[0] == doctest::Approx(1.2));
  CHECK(onset.onsets[2] == doctest::Approx(1.05));
  // Aitken: 1.05 - 0.05^2 / (-0.05 + 0.1) = 1.0.
  CHECK(onset.estimate == doctest::Approx(1.0));
  CHECK(onset.certificate.passed());

  const auto flat = make_traj(grid(0, 2, 10), [](double) { return std::vector<Particle>{{Composition{1.0}, 1.0}}; });
  const auto none = gelation_onset({{1, &flat}, {2, &flat}});
  CHECK(none.certificate.verdict == Verdict::kFail);
  CHECK(none.certificate.detail.find("no-gel-observed") != std::string::npos);
  CHECK_THROWS_AS(gelation_onset({{1, &flat}}), ParameterError);

  const auto far = ladder_traj(0.5);
  CHECK(gelation_onset({{1, &far}, {2, &c}}).certificate.verdict == Verdict::kFail);
}

TEST_CASE("gel constants") {
  // gamma = 3/2, R = 8: C_Phi = (0.5/0.5) 4^(-1/4).
  CHECK(c_phi(1.5, 8.0) == doctest::Approx(std::pow(4.0, -0.25)));
  // C_g = (2/c1) (1 - 2^(-1/4))^-2 (1)^2 2^(1/2) for gamma = 3/2.
  const double lead = 1.0 - std::pow(2.0, -0.25);
  CHECK(gel_constant(1.5, 0.5) == doctest::Approx(4.0 * std::sqrt(2.0) / (lead * lead)));
}

TEST_CASE("gel inequality with a hand-computed tail integral") {
  // Tail mass beyond R = 4 is 0.5 (an atom at 8 with weight 1/16) for all t.
  auto traj = make_traj(grid(0, 2, 4), [](double) {
    return std::vector<Particle>{{Composition{1.0}, 0.5}, {Composition{8.0}, 1.0 / 16.0}};
  });
  GelTestSpec spec{4.0, 0.0, 0.5, 1.5};
  const auto c = gel_inequality_certificate(traj, spec, 2.0);
  const double lhs = 0.25 * 2.0;
  const double rhs = gel_constant(1.5, 0.5) * std::pow(4.0, -0.5) * 1.0;
  CHECK(c.slack == doctest::Approx(rhs - lhs));
  CHECK(c.passed());
  spec.gamma_gel = 2.0;
  CHECK(gel_inequality_certificate(traj, spec, 2.0).verdict == Verdict::kInapplicable);
  const auto from = GelTestSpec::from_kernel(Kernel::power_law(0.5, 1.5, -0.75), 8.0, 0.5);
  CHECK(from.c1 == 0.5);
  CHECK(from.gamma_gel == 1.5);
  CHECK(from.radius == 8.0);
}

TEST_CASE("moment growth") {
  const auto ts = grid(0, 8, 32);
  // Constant kernel (gamma' = 0): M2 / t^(1) with M2 = 1 + 2t stays bounded.
  auto bounded = make_traj(ts, [](double t) { return std::vector<Particle>{{Composition{1.0 + 2.0 * t}, 1.0 / (1.0 + 2.0 * t)}}; });
  CHECK(moment_growth_certificate(bounded, Kernel::constant(2.0), 2.0).passed());
  auto runaway = make_traj(ts, [](double t) { return std::vector<Particle>{{Composition{1.0 + t * t}, 1.0 / (1.0 + t * t)}}; });
  CHECK(moment_growth_certificate(runaway, Kernel::constant(2.0), 2.0).verdict == Verdict::kFail);
  CHECK(moment_growth_certificate(bounded, Kernel::constant(2.0), 1.0).verdict == Verdict::kInapplicable);
  CHECK(moment_growth_certificate(bounded, Kernel::additive(1.0), 2.0).verdict == Verdict::kInapplicable);
  const auto short_traj = make_traj(grid(0, 0.5, 4), [](double) { return std::vector<Particle>{{Composition{1.0}, 1.0}}; });
  CHECK(moment_growth_certificate(short_traj, Kernel::constant(), 2.0).verdict == Verdict::kInapplicable);
}

TEST_CASE("localization deficit counts mass in the cone and size window") {
  const auto spec = LocalizationSpec::standard(Composition{0.5, 0.5});
  MeasureState s(2);
  s.add(Composition{8.0, 8.0}, 0.05);   // |x| = 16, on the diagonal: counted
  s.add(Composition{16.0, 0.0}, 0.01);  // outside the cone
  s.add(Composition{1.0, 1.0}, 0.05);   // below a t = 8
  // t = 16: a = 1/2, window [8, 32], counted mass 0.8, deficit |0.8 - 1|.
  CHECK(localization_deficit(s, spec, 16.0) == doctest::Approx(0.2));
  CHECK(spec.a_schedule(0.5) == 1.0);
  CHECK(spec.a_schedule(16.0) == doctest::Approx(0.5));
}

TEST_CASE("localization report") {
  auto make2 = [](double frac_of) {
    Trajectory traj(2);
    for (int i = 1; i <= 30; ++i) {
      const double t = i;
      MeasureState s(2, t);
      // Fraction of mass on the diagonal at size t grows toward 1.
      const double f = 1.0 - frac_of / t;
      s.add(Composition{t / 2, t / 2}, f / t);
      s.add(Composition{1.0, 0.0}, 1.0 - f);
      traj.append({t, s, Composition(2), 0.0});
    }
    return traj;
  };
  const auto a = make2(0.5);
  const auto spec = LocalizationSpec::standard(Composition{0.5, 0.5});
  const auto rep = localization_report(a, spec);
  CHECK(rep.certificate.passed());
  CHECK(rep.times.size() == 30);
  CHECK(rep.deficit.back() == doctest::Approx(0.5 / 30.0));

  const auto b = make2(0.8);
  const auto both = localization_report(std::vector<const Trajectory*>{&a, &b}, spec);
  CHECK(both.deficit.back() == doctest::Approx(0.65 / 30.0));
  CHECK(both.certificate.passed());

  Trajectory one(1);
  MeasureState s1(1, 1.0);
  s1.add(Composition{1.0}, 1.0);
  one.append({1.0, s1, Composition(1), 0.0});
  CHECK(localization_report(one, LocalizationSpec::standard(Composition{1.0})).certificate.verdict ==
        Verdict::kInapplicable);

  Trajectory shorter(2);
  for (const auto& smp : a.samples()) {
    if (smp.t < 30) shorter.append(smp);
  }
  CHECK_THROWS_AS(localization_report(std::vector<const Trajectory*>{&a, &shorter}, spec), ParameterError);
}

TEST_CASE("certificates serialize to JSON") {
  Certificate c;
  c.name = "lattice_support";
  c.verdict = Verdict::kFail;
  c.slack = -0.25;
  c.tolerance = 1e-12;
  c.inputs = "tol=1e-12";
  nlohmann::json j = c;
  CHECK(j["name"] == "lattice_support");
  CHECK(j["verdict"] == "fail");
  CHECK(j["slack"].get<double>() == -0.25);
}

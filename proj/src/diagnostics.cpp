#include "coagsim/diagnostics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

#include "coagsim/errors.hpp"

namespace coagsim {

namespace {

/// Shortest round-trip decimal.
std::string fmt(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v == 0.0 ? 0.0 : v);
  return std::string(buf, res.ptr);
}

Certificate make(std::string name, std::string inputs, double tolerance) {
  Certificate c;
  c.name = std::move(name);
  c.inputs = std::move(inputs);
  c.tolerance = tolerance;
  return c;
}

Certificate inapplicable(Certificate c, std::string why) {
  c.verdict = Verdict::kInapplicable;
  c.slack = 0.0;
  c.detail = std::move(why);
  return c;
}

void settle(Certificate& c) { c.verdict = c.slack >= -c.tolerance ? Verdict::kPass : Verdict::kFail; }

}  // namespace

const char* to_string(Verdict v) noexcept {
  switch (v) {
    case Verdict::kPass:
      return "pass";
    case Verdict::kFail:
      return "fail";
    case Verdict::kInapplicable:
      return "inapplicable";
  }
  return "?";
}

void to_json(nlohmann::json& j, const Certificate& c) {
  j = nlohmann::json{{"name", c.name},       {"verdict", to_string(c.verdict)}, {"slack", c.slack},
                     {"tolerance", c.tolerance}, {"inputs", c.inputs},            {"detail", c.detail}};
}

Certificate mass_conservation_certificate(const Trajectory& traj, const Kernel& kernel, double tol) {
  auto c = make("mass_conservation", "tol=" + fmt(tol), tol);
  if (classify(kernel).verdict != KernelClass::kMassConservingGuaranteed) {
    return inapplicable(std::move(c), "kernel is not classified mass conserving (gamma2 > 1 or gelling)");
  }
  if (traj.empty()) return inapplicable(std::move(c), "empty trajectory");
  const Composition m0 = mass_vector(traj.front().state) + traj.front().truncation_flux;
  const double norm0 = m0.norm();
  if (!(norm0 > 0.0)) return inapplicable(std::move(c), "initial mass is zero");
  double drift = 0.0;
  double flux = 0.0;
  for (const auto& s : traj.samples()) {
    const Composition m = mass_vector(s.state) + s.truncation_flux;
    drift = std::max(drift, l1_distance(m, m0) / norm0);
    flux = std::max(flux, s.truncation_flux.norm() / norm0);
  }
  c.slack = tol - drift;
  c.verdict = drift <= tol ? Verdict::kPass : Verdict::kFail;
  c.detail = "max relative drift " + fmt(drift) + "; truncation flux " + fmt(flux);
  return c;
}

Certificate moment_monotonicity_certificate(const Trajectory& traj, const Kernel& kernel, double alpha,
                                            double r) {
  constexpr double kStepSlack = 1e-10;
  auto c = make("moment_monotonicity", "alpha=" + fmt(alpha) + " r=" + fmt(r), kStepSlack);
  const auto& env = kernel.envelope();
  const double lo = std::min(-env.beta, -env.lambda1) - r;
  if (!(alpha >= lo && alpha <= 1.0)) {
    return inapplicable(std::move(c), "alpha outside [" + fmt(lo) + ", 1]");
  }
  const auto series = traj.moment_series(alpha);
  double worst = std::numeric_limits<double>::infinity();
  std::size_t at = 0;
  for (std::size_t k = 1; k < series.size(); ++k) {
    const double scale = std::max(std::abs(series[k - 1]), std::numeric_limits<double>::min());
    const double s = (series[k - 1] - series[k]) / scale;
    if (s < worst) {
      worst = s;
      at = k;
    }
  }
  if (series.size() < 2) worst = 0.0;
  c.slack = worst;
  settle(c);
  c.detail = series.size() < 2 ? "single sample"
                               : "smallest relative decrease " + fmt(worst) + " at t=" + fmt(traj.samples()[at].t);
  return c;
}

Certificate picard_contraction_certificate(const Trajectory& traj, double bound) {
  auto c = make("picard_contraction", "bound=" + fmt(bound), 0.0);
  if (traj.windows.empty()) return inapplicable(std::move(c), "no Picard window telemetry");
  double worst = 0.0;
  std::size_t iters = 0;
  double at = 0.0;
  for (const auto& w : traj.windows) {
    iters = std::max(iters, w.iterations);
    if (w.max_ratio_after_first > worst) {
      worst = w.max_ratio_after_first;
      at = w.t_start;
    }
  }
  c.slack = bound - worst;
  settle(c);
  c.detail = std::to_string(traj.windows.size()) + " windows; max ratio " + fmt(worst) + " (window at t=" +
             fmt(at) + "); max iterations " + std::to_string(iters);
  return c;
}

Certificate lattice_support_certificate(const Trajectory& traj, double tol) {
  auto c = make("lattice_support", "tol=" + fmt(tol), 0.0);
  if (traj.empty()) return inapplicable(std::move(c), "empty trajectory");
  double worst = 0.0;
  double at = 0.0;
  std::size_t atoms = 0;
  for (const auto& s : traj.samples()) {
    for (const auto& p : s.state.particles()) {
      ++atoms;
      for (double v : p.x.values()) {
        const double off = std::abs(v - std::round(v));
        if (off > worst) {
          worst = off;
          at = s.t;
        }
      }
    }
  }
  c.slack = tol - worst;
  settle(c);
  c.detail = "max distance to the lattice " + fmt(worst) + " at t=" + fmt(at) + " over " + std::to_string(atoms) +
             " atoms";
  return c;
}

namespace {

double onset_time(const Trajectory& traj, double drop) {
  const auto m1 = traj.moment_series(1.0);
  const auto& s = traj.samples();
  if (m1.empty()) return std::numeric_limits<double>::quiet_NaN();
  const double level = (1.0 - drop) * m1.front();
  for (std::size_t k = 1; k < m1.size(); ++k) {
    if (m1[k] <= level) {
      const double span = m1[k - 1] - m1[k];
      const double frac = span > 0.0 ? (m1[k - 1] - level) / span : 1.0;
      return s[k - 1].t + frac * (s[k].t - s[k - 1].t);
    }
  }
  return std::numeric_limits<double>::quiet_NaN();
}

}  // namespace

GelOnset gelation_onset(const std::vector<GelLevel>& levels, double drop) {
  GelOnset out;
  std::ostringstream inputs;
  inputs << "drop=" << fmt(drop) << " levels=";
  for (std::size_t i = 0; i < levels.size(); ++i) inputs << (i ? "," : "") << fmt(levels[i].level);
  out.certificate = make("gelation_onset", inputs.str(), 0.1);
  if (levels.size() < 2) throw ParameterError("gelation_onset: need at least two truncation levels");

  double horizon = 0.0;
  for (const auto& l : levels) {
    if (l.trajectory == nullptr || l.trajectory->empty()) throw ParameterError("gelation_onset: missing trajectory");
    out.onsets.push_back(onset_time(*l.trajectory, drop));
    horizon = std::max(horizon, l.trajectory->back().t);
  }
  auto& c = out.certificate;
  const std::size_t n = out.onsets.size();
  if (std::none_of(out.onsets.begin(), out.onsets.end(), [](double v) { return std::isfinite(v); })) {
    out.estimate = std::numeric_limits<double>::infinity();
    c.verdict = Verdict::kFail;
    c.slack = -std::numeric_limits<double>::infinity();
    c.detail = "no-gel-observed up to horizon " + fmt(horizon);
    return out;
  }
  const double last = out.onsets[n - 1];
  const double prev = out.onsets[n - 2];
  if (!std::isfinite(last) || !std::isfinite(prev)) {
    out.estimate = std::isfinite(last) ? last : std::numeric_limits<double>::infinity();
    c.verdict = Verdict::kFail;
    c.slack = -std::numeric_limits<double>::infinity();
    c.detail = "onset missing at one of the two finest levels (horizon " + fmt(horizon) + ")";
    return out;
  }
  out.estimate = last;
  if (n >= 3 && std::isfinite(out.onsets[n - 3])) {
    const double d1 = prev - out.onsets[n - 3];
    const double d2 = last - prev;
    const double denom = d2 - d1;
    if (std::abs(denom) > 1e-14 && std::abs(d2) < std::abs(d1)) {
      const double aitken = last - d2 * d2 / denom;
      if (std::isfinite(aitken) && std::abs(aitken - last) <= 10.0 * std::abs(d2)) out.estimate = aitken;
    }
  }
  const double rel = std::abs(last - prev) / std::abs(last);
  c.slack = 0.1 - rel;
  c.verdict = rel < 0.1 && std::isfinite(out.estimate) ? Verdict::kPass : Verdict::kFail;
  std::ostringstream d;
  d << "onsets=";
  for (std::size_t i = 0; i < n; ++i) d << (i ? "," : "") << fmt(out.onsets[i]);
  d << " estimate=" << fmt(out.estimate) << " last-two relative change=" << fmt(rel);
  c.detail = d.str();
  return out;
}

double c_phi(double gamma_gel, double radius) {
  if (!(gamma_gel > 1.0 && gamma_gel < 2.0)) throw ParameterError("c_phi: gamma_gel must lie in (1,2)");
  if (!(radius > 0.0)) throw ParameterError("c_phi: R must be > 0");
  return (2.0 - gamma_gel) / (gamma_gel - 1.0) * std::pow(radius / 2.0, (1.0 - gamma_gel) / 2.0);
}

double gel_constant(double gamma_gel, double c1) {
  if (!(gamma_gel > 1.0 && gamma_gel < 2.0)) throw ParameterError("gel_constant: gamma_gel must lie in (1,2)");
  if (!(c1 > 0.0)) throw ParameterError("gel_constant: c1 must be > 0");
  const double lead = 1.0 - std::pow(2.0, gamma_gel / 2.0 - 1.0);
  const double ratio = (2.0 - gamma_gel) / (gamma_gel - 1.0);
  return (2.0 / c1) / (lead * lead) * ratio * ratio * std::pow(2.0, gamma_gel - 1.0);
}

GelTestSpec GelTestSpec::from_kernel(const Kernel& kernel, double radius, double t_start) {
  if (!kernel.gel()) throw ParameterError("gel test: kernel has no gelation lower bound");
  return {radius, t_start, kernel.gel()->c1, kernel.gel()->gamma_gel};
}

Certificate gel_inequality_certificate(const Trajectory& traj, const GelTestSpec& spec, double horizon) {
  auto c = make("gel_inequality",
                "R=" + fmt(spec.radius) + " T=" + fmt(spec.t_start) + " horizon=" + fmt(horizon) +
                    " gamma_gel=" + fmt(spec.gamma_gel) + " c1=" + fmt(spec.c1),
                0.0);
  if (!(spec.gamma_gel > 1.0 && spec.gamma_gel < 2.0)) {
    return inapplicable(std::move(c), "gamma_gel outside (1,2)");
  }
  if (!(spec.radius > 0.0) || !(spec.c1 > 0.0)) throw ParameterError("gel test: R and c1 must be > 0");
  if (!std::isfinite(horizon)) throw ParameterError("gel test: horizon must be finite");

  std::vector<double> ts;
  std::vector<double> g;
  double m1_t = std::numeric_limits<double>::quiet_NaN();
  for (const auto& s : traj.samples()) {
    if (s.t < spec.t_start - 1e-12 || s.t > horizon + 1e-12) continue;
    if (std::isnan(m1_t)) m1_t = moment(s.state, 1.0);
    double tail = 0.0;
    for (const auto& p : s.state.particles()) {
      const double r = p.x.norm();
      if (r >= spec.radius) tail += r * p.w;
    }
    ts.push_back(s.t);
    g.push_back(tail * tail);
  }
  if (ts.empty()) return inapplicable(std::move(c), "no samples in [T, horizon]");
  double lhs = 0.0;
  for (std::size_t k = 1; k < ts.size(); ++k) lhs += 0.5 * (ts[k] - ts[k - 1]) * (g[k] + g[k - 1]);
  const double rhs = gel_constant(spec.gamma_gel, spec.c1) * std::pow(spec.radius, 1.0 - spec.gamma_gel) * m1_t;
  c.slack = rhs - lhs;
  settle(c);
  c.detail = "lhs=" + fmt(lhs) + " rhs=" + fmt(rhs) + " first sample t=" + fmt(ts.front());
  return c;
}

Certificate moment_growth_certificate(const Trajectory& traj, const Kernel& kernel, double k) {
  auto c = make("moment_growth", "k=" + fmt(k), 0.1);
  const auto& h = kernel.homogeneity();
  if (!h) return inapplicable(std::move(c), "kernel carries no homogeneity data");
  const double gp = h->gamma_prime;
  c.inputs += " gamma_prime=" + fmt(gp);
  if (!(k > 1.0)) return inapplicable(std::move(c), "k must exceed 1");
  if (!(gp >= 0.0 && gp < 1.0)) return inapplicable(std::move(c), "gamma_prime outside [0,1)");
  if (traj.empty() || traj.back().t < 1.0) return inapplicable(std::move(c), "horizon < 1");

  std::vector<double> ratio;
  const double expo = (k - 1.0) / (1.0 - gp);
  for (const auto& s : traj.samples()) {
    if (s.t >= 1.0) ratio.push_back(moment(s.state, k) / std::pow(s.t, expo));
  }
  if (ratio.size() < 4) return inapplicable(std::move(c), "fewer than four samples with t >= 1");
  const std::size_t split = ratio.size() - ratio.size() / 4;
  const double early = *std::max_element(ratio.begin(), ratio.begin() + static_cast<std::ptrdiff_t>(split));
  const double late = *std::max_element(ratio.begin() + static_cast<std::ptrdiff_t>(split), ratio.end());
  const double c0 = std::max(early, late);
  c.slack = early > 0.0 ? 1.1 - late / early : (late > 0.0 ? -std::numeric_limits<double>::infinity() : 0.0);
  c.verdict = late <= 1.1 * early ? Verdict::kPass : Verdict::kFail;
  c.tolerance = 0.0;
  c.detail = "C0=" + fmt(c0) + " early max=" + fmt(early) + " last-quarter max=" + fmt(late);
  return c;
}

LocalizationSpec LocalizationSpec::standard(const Composition& m0, double gamma_prime) {
  LocalizationSpec s;
  s.a_schedule = [](double t) { return std::min(1.0, std::pow(t, -0.25)); };
  s.gamma_prime = gamma_prime;
  s.m0 = m0;
  return s;
}

double localization_deficit(const MeasureState& state, const LocalizationSpec& spec, double t) {
  const double a = spec.a_schedule(t);
  if (!(a > 0.0)) throw ParameterError("localization: a(t) must be > 0");
  const double scale = std::pow(t, 1.0 / (1.0 - spec.gamma_prime));
  const double lo = a * scale;
  const double hi = scale / a;
  const double mnorm = spec.m0.norm();
  const Composition dir = spec.m0 * (1.0 / mnorm);
  double inside = 0.0;
  for (const auto& p : state.particles()) {
    const double r = p.x.norm();
    if (r < lo || r > hi) continue;
    if (l1_distance(p.x * (1.0 / r), dir) > a) continue;
    inside += r * p.w;
  }
  return std::abs(inside - mnorm);
}

namespace {

LocalizationReport finish_localization(std::vector<double> times, std::vector<double> deficit) {
  LocalizationReport rep;
  rep.times = std::move(times);
  rep.deficit = std::move(deficit);
  rep.certificate = make("localization", "", 0.05);
  auto& c = rep.certificate;
  const std::size_t n = rep.deficit.size();
  if (n < 3) {
    c = inapplicable(std::move(c), "fewer than three samples with t >= t_min");
    return rep;
  }
  const std::size_t start = n - std::max<std::size_t>(2, n / 3);
  double worst = std::numeric_limits<double>::infinity();
  for (std::size_t k = start + 1; k < n; ++k) {
    const double prev = rep.deficit[k - 1];
    const double step = prev > 0.0 ? 1.0 - rep.deficit[k] / prev : (rep.deficit[k] > 0.0 ? -1.0 : 0.0);
    worst = std::min(worst, step);
  }
  const bool net_down = rep.deficit[n - 1] <= rep.deficit[start];
  c.slack = worst;
  c.verdict = worst >= -c.tolerance && net_down ? Verdict::kPass : Verdict::kFail;
  c.detail = "last-third window from t=" + fmt(rep.times[start]) + "; D: " + fmt(rep.deficit[start]) + " -> " +
             fmt(rep.deficit[n - 1]) + "; largest relative rise " + fmt(-worst) +
             (net_down ? "" : "; no net decrease") + " (finite-horizon check of an asymptotic property)";
  return rep;
}

Certificate check_localization_inputs(std::size_t dim, const LocalizationSpec& spec) {
  auto c = make("localization", "gamma_prime=" + fmt(spec.gamma_prime), 0.05);
  if (dim < 2) return inapplicable(std::move(c), "d = 1: direction cone is trivial");
  if (!(spec.m0.norm() > 0.0)) return inapplicable(std::move(c), "initial mass vector is zero");
  if (!spec.a_schedule) throw ParameterError("localization: a(t) schedule missing");
  if (!(spec.gamma_prime >= 0.0 && spec.gamma_prime < 1.0)) {
    throw ParameterError("localization: gamma_prime must lie in [0,1)");
  }
  c.verdict = Verdict::kPass;
  return c;
}

}  // namespace

LocalizationReport localization_report(const Trajectory& traj, const LocalizationSpec& spec) {
  return localization_report(std::vector<const Trajectory*>{&traj}, spec);
}

LocalizationReport localization_report(const std::vector<const Trajectory*>& replicas,
                                       const LocalizationSpec& spec) {
  if (replicas.empty() || replicas.front() == nullptr) throw ParameterError("localization: no trajectories");
  auto gate = check_localization_inputs(replicas.front()->dim(), spec);
  if (gate.verdict == Verdict::kInapplicable) {
    LocalizationReport rep;
    rep.certificate = gate;
    return rep;
  }
  std::vector<double> times;
  std::vector<double> deficit;
  const auto& base = replicas.front()->samples();
  for (std::size_t k = 0; k < base.size(); ++k) {
    const double t = base[k].t;
    if (t < spec.t_min) continue;
    double sum = 0.0;
    for (const auto* tr : replicas) {
      if (tr->size() != base.size() || std::abs(tr->samples()[k].t - t) > 1e-9 * std::max(1.0, t)) {
        throw ParameterError("localization: replicas do not share sample times");
      }
      sum += localization_deficit(tr->samples()[k].state, spec, t);
    }
    times.push_back(t);
    deficit.push_back(sum / static_cast<double>(replicas.size()));
  }
  auto rep = finish_localization(std::move(times), std::move(deficit));
  rep.certificate.inputs = gate.inputs + " replicas=" + std::to_string(replicas.size());
  return rep;
}

}  // namespace coagsim

#include "coagsim/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "coagsim/errors.hpp"
#include "coagsim/rng.hpp"

namespace coagsim {

namespace {

constexpr double kThird = 1.0 / 3.0;

double power_law_envelope_check(double gamma, double lambda, const char* which) {
  if (-lambda > gamma + lambda) {
    std::ostringstream os;
    os << "envelope: -lambda" << which << " <= gamma" << which << " + lambda" << which
       << " violated (gamma=" << gamma << ", lambda=" << lambda << ")";
    throw ParameterError(os.str());
  }
  if (gamma + lambda > 1.0) {
    std::ostringstream os;
    os << "envelope: gamma" << which << " + lambda" << which << " <= 1 violated (sum="
       << gamma + lambda << ")";
    throw ParameterError(os.str());
  }
  return gamma + lambda;
}

}  // namespace

void EnvelopeParams::validate() const {
  power_law_envelope_check(gamma1, lambda1, "1");
  power_law_envelope_check(gamma2, lambda2, "2");
  if (!(c2 >= 0.0) || !std::isfinite(c2)) throw ParameterError("envelope: c2 must be finite and >= 0");
}

bool EnvelopeParams::strict() const noexcept {
  return gamma1 + lambda1 < 1.0 && gamma2 + lambda2 < 1.0;
}

void GelParams::validate() const {
  if (!(c1 > 0.0) || !std::isfinite(c1)) throw ParameterError("gel: c1 must be positive");
  if (-lambda_gel > gamma_gel + lambda_gel) {
    throw ParameterError("gel: -lambda_gel <= gamma_gel + lambda_gel violated");
  }
}

WeightFn WeightFn::from_envelope(const EnvelopeParams& env) noexcept {
  return {std::min(-env.beta, -env.lambda1),
          std::max(env.gamma1 + env.lambda1, env.gamma2 + env.lambda2)};
}

double WeightFn::operator()(double r) const noexcept {
  return r <= 1.0 ? std::pow(r, exp_small) : std::pow(r, exp_large);
}

const char* to_string(KernelKind kind) noexcept {
  switch (kind) {
    case KernelKind::kConstant: return "constant";
    case KernelKind::kAdditive: return "additive";
    case KernelKind::kMultiplicative: return "multiplicative";
    case KernelKind::kProduct: return "product";
    case KernelKind::kPowerLaw: return "power_law";
    case KernelKind::kDiffusion: return "diffusion";
    case KernelKind::kBallistic: return "ballistic";
    case KernelKind::kTransition: return "transition";
    case KernelKind::kCustom: return "custom";
  }
  return "unknown";
}

Kernel Kernel::constant(double c0) {
  if (!(c0 >= 0.0)) throw ParameterError("constant kernel: c0 must be >= 0");
  Kernel k;
  k.name_ = "constant";
  k.kind_ = KernelKind::kConstant;
  k.c0_ = c0;
  k.envelope_ = {0.0, 0.0, 0.0, 0.0, 0.0, c0};
  k.homogeneity_ = Homogeneity{0.0, 0.0, c0 / 2.0, c0 / 2.0};
  return k;
}

Kernel Kernel::additive(double c0) {
  if (!(c0 > 0.0)) throw ParameterError("additive kernel: c0 must be positive");
  Kernel k;
  k.name_ = "additive";
  k.kind_ = KernelKind::kAdditive;
  k.c0_ = c0;
  k.envelope_ = {0.0, 1.0, 0.0, 1.0, 0.0, 2.0 * c0};
  k.homogeneity_ = Homogeneity{1.0, 0.0, c0, c0};
  return k;
}

Kernel Kernel::multiplicative(double c0) {
  if (!(c0 > 0.0)) throw ParameterError("multiplicative kernel: c0 must be positive");
  Kernel k;
  k.name_ = "multiplicative";
  k.kind_ = KernelKind::kMultiplicative;
  k.c0_ = c0;
  k.envelope_ = {-1.0, 2.0, -1.0, 2.0, -1.0, c0};
  k.gel_ = GelParams{c0 / 2.0, 2.0, -1.0};
  k.homogeneity_ = Homogeneity{2.0, -1.0, c0 / 2.0, c0 / 2.0};
  return k;
}

Kernel Kernel::product(std::vector<std::vector<double>> matrix) {
  const std::size_t d = matrix.size();
  if (d == 0 || d > kMaxDim) throw ParameterError("product kernel: matrix dimension out of range");
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    if (matrix[i].size() != d) throw ParameterError("product kernel: matrix must be square");
    for (std::size_t j = 0; j < d; ++j) {
      const double a = matrix[i][j];
      if (!(a >= 0.0) || !std::isfinite(a)) throw ParameterError("product kernel: entries must be >= 0");
      if (a != matrix[j][i]) throw ParameterError("product kernel: matrix must be symmetric");
      lo = std::min(lo, a);
      hi = std::max(hi, a);
    }
  }
  if (!(hi > 0.0)) throw ParameterError("product kernel: matrix must not vanish");
  Kernel k;
  k.name_ = "product";
  k.kind_ = KernelKind::kProduct;
  k.c0_ = 1.0;
  k.matrix_ = std::move(matrix);
  k.envelope_ = {-1.0, 2.0, -1.0, 2.0, -1.0, hi};
  if (lo > 0.0) k.gel_ = GelParams{lo / 2.0, 2.0, -1.0};
  k.homogeneity_ = Homogeneity{2.0, -1.0, lo / 2.0, hi / 2.0};
  return k;
}

Kernel Kernel::power_law(double c0, double gamma_prime, double lambda_prime) {
  if (!(c0 > 0.0)) throw ParameterError("power-law kernel: c0 must be positive");
  if (-lambda_prime > gamma_prime + lambda_prime) {
    throw ParameterError("power-law kernel: -lambda' <= gamma' + lambda' violated");
  }
  Kernel k;
  k.name_ = "power_law";
  k.kind_ = KernelKind::kPowerLaw;
  k.c0_ = c0;
  k.gamma_p_ = gamma_prime;
  k.lambda_p_ = lambda_prime;
  k.envelope_ = {lambda_prime, gamma_prime, lambda_prime, gamma_prime, lambda_prime, 2.0 * c0};
  k.envelope_.validate();
  if (gamma_prime > 1.0) k.gel_ = GelParams{c0, gamma_prime, lambda_prime};
  k.homogeneity_ = Homogeneity{gamma_prime, lambda_prime, c0, c0};
  return k;
}

Kernel Kernel::diffusion(double c0) {
  if (!(c0 > 0.0)) throw ParameterError("diffusion kernel: c0 must be positive");
  Kernel k;
  k.name_ = "diffusion";
  k.kind_ = KernelKind::kDiffusion;
  k.c0_ = c0;
  k.envelope_ = {kThird, 0.0, kThird, 0.0, kThird, 4.0 * c0};
  k.homogeneity_ = Homogeneity{0.0, kThird, c0, 2.0 * c0};
  return k;
}

Kernel Kernel::ballistic(double c0) {
  if (!(c0 > 0.0)) throw ParameterError("ballistic kernel: c0 must be positive");
  Kernel k;
  k.name_ = "ballistic";
  k.kind_ = KernelKind::kBallistic;
  k.c0_ = c0;
  const double c2 = 4.0 * std::sqrt(2.0) * c0;
  k.envelope_ = {0.5, 1.0 / 6.0, 0.5, 1.0 / 6.0, 0.5, c2};
  k.homogeneity_ = Homogeneity{1.0 / 6.0, 0.5, c0 / 2.0, c2};
  return k;
}

Kernel Kernel::transition(double c0) {
  if (!(c0 > 0.0)) throw ParameterError("transition kernel: c0 must be positive");
  Kernel k;
  k.name_ = "transition";
  k.kind_ = KernelKind::kTransition;
  k.c0_ = c0;
  // Ballistic branch is scaled by 1/sqrt(2) so both pure regimes give 4 c0 at |x| = |y| = 1.
  k.envelope_ = {0.5, 1.0 / 6.0, 0.5, 0.0, kThird, 4.0 * c0};
  return k;
}

Kernel Kernel::custom(std::string name, RateFn rate, EnvelopeParams envelope) {
  envelope.validate();
  Kernel k;
  k.name_ = std::move(name);
  k.kind_ = KernelKind::kCustom;
  k.c0_ = 1.0;
  k.envelope_ = envelope;
  k.custom_ = std::make_shared<const RateFn>(std::move(rate));
  return k;
}

Kernel Kernel::with_envelope(const EnvelopeParams& env) const {
  env.validate();
  Kernel k = *this;
  k.envelope_ = env;
  return k;
}

Kernel Kernel::with_gel(std::optional<GelParams> gel) const {
  if (gel) gel->validate();
  Kernel k = *this;
  k.gel_ = gel;
  return k;
}

Kernel Kernel::with_homogeneity(std::optional<Homogeneity> h) const {
  Kernel k = *this;
  k.homogeneity_ = h;
  return k;
}

bool Kernel::identically_zero() const noexcept {
  if (kind_ == KernelKind::kConstant) return c0_ == 0.0;
  return envelope_.c2 == 0.0;
}

Kernel::Prepared Kernel::prepare(const Composition& x) const {
  Prepared p;
  p.x = x;
  p.r = x.norm();
  const double r = p.r;
  switch (kind_) {
    case KernelKind::kProduct:
      for (std::size_t i = 0; i < x.dim(); ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < x.dim(); ++j) s += matrix_[i][j] * x[j];
        p.p[i] = s;
      }
      break;
    case KernelKind::kPowerLaw:
      p.p[0] = std::pow(r, -lambda_p_);
      p.p[1] = std::pow(r, gamma_p_ + lambda_p_);
      break;
    case KernelKind::kDiffusion:
      p.p[1] = std::cbrt(r);
      p.p[0] = 1.0 / p.p[1];
      break;
    case KernelKind::kBallistic:
      p.p[0] = 1.0 / r;
      p.p[1] = std::cbrt(r);
      break;
    case KernelKind::kTransition:
      p.p[1] = std::cbrt(r);
      p.p[0] = 1.0 / p.p[1];
      p.p[2] = 1.0 / r;
      p.p[3] = std::log(r);
      break;
    default:
      break;
  }
  return p;
}

double Kernel::eval(const Prepared& a, const Prepared& b) const noexcept {
  switch (kind_) {
    case KernelKind::kConstant:
      return c0_;
    case KernelKind::kAdditive:
      return c0_ * (a.r + b.r);
    case KernelKind::kMultiplicative:
      return c0_ * a.r * b.r;
    case KernelKind::kProduct: {
      double s = 0.0;
      for (std::size_t i = 0; i < a.x.dim(); ++i) s += a.p[i] * b.x[i];
      return s;
    }
    case KernelKind::kPowerLaw:
      return c0_ * (a.p[0] * b.p[1] + b.p[0] * a.p[1]);
    case KernelKind::kDiffusion:
      return c0_ * (a.p[0] + b.p[0]) * (a.p[1] + b.p[1]);
    case KernelKind::kBallistic: {
      const double s = a.p[1] + b.p[1];
      return c0_ * std::sqrt(a.p[0] + b.p[0]) * s * s;
    }
    case KernelKind::kTransition: {
      const double s = a.p[1] + b.p[1];
      const double kb = c0_ * std::sqrt(0.5 * (a.p[2] + b.p[2])) * s * s;
      const double kd = c0_ * (a.p[0] + b.p[0]) * s;
      if (a.r <= 1.0 && b.r <= 1.0) return kb;
      if (a.r >= 1.0 && b.r >= 1.0) return kd;
      // Mixed pair: one size below 1, the other above.
      const double log_small = std::min(a.p[3], b.p[3]);
      const double log_large = std::max(a.p[3], b.p[3]);
      const double theta = -log_small / (log_large - log_small);
      return std::exp(theta * std::log(kb) + (1.0 - theta) * std::log(kd));
    }
    case KernelKind::kCustom:
      return (*custom_)(a.x, b.x);
  }
  return 0.0;
}

double Kernel::operator()(const Composition& x, const Composition& y) const {
  require_positive_composition(x, "eval_kernel");
  require_positive_composition(y, "eval_kernel");
  if (x.dim() != y.dim()) throw DomainError("eval_kernel: dimension mismatch");
  if (kind_ == KernelKind::kProduct && x.dim() != matrix_.size()) {
    throw DomainError("eval_kernel: product kernel matrix does not match dimension");
  }
  return eval(prepare(x), prepare(y));
}

const char* to_string(SizeRegime r) noexcept {
  switch (r) {
    case SizeRegime::kSmallSmall: return "small-small";
    case SizeRegime::kLargeSmall: return "large-small";
    case SizeRegime::kLargeLarge: return "large-large";
  }
  return "unknown";
}

SizeRegime size_regime(double rx, double ry) noexcept {
  const double big = std::max(rx, ry);
  const double small = std::min(rx, ry);
  if (big <= 1.0) return SizeRegime::kSmallSmall;
  if (small <= 1.0) return SizeRegime::kLargeSmall;
  return SizeRegime::kLargeLarge;
}

double envelope_value(const EnvelopeParams& env, double rx, double ry) noexcept {
  const double big = std::max(rx, ry);
  const double small = std::min(rx, ry);
  if (env.c2 == 0.0) return 0.0;
  switch (size_regime(big, small)) {
    case SizeRegime::kSmallSmall:
      return env.c2 * std::pow(big, -env.beta) * std::pow(small, -env.beta);
    case SizeRegime::kLargeSmall:
      return env.c2 * std::pow(big, env.gamma1 + env.lambda1) * std::pow(small, -env.lambda1);
    case SizeRegime::kLargeLarge:
      return env.c2 * std::pow(big, env.gamma2 + env.lambda2) * std::pow(small, -env.lambda2);
  }
  return 0.0;
}

double envelope_value(const EnvelopeParams& env, const Composition& x, const Composition& y) {
  require_positive_composition(x, "envelope_value");
  require_positive_composition(y, "envelope_value");
  return envelope_value(env, x.norm(), y.norm());
}

double lower_bound_value(const GelParams& gel, const Composition& x, const Composition& y) {
  require_positive_composition(x, "lower_bound_value");
  require_positive_composition(y, "lower_bound_value");
  const double rx = x.norm();
  const double ry = y.norm();
  const double g = gel.gamma_gel + gel.lambda_gel;
  return gel.c1 * (std::pow(rx, g) * std::pow(ry, -gel.lambda_gel) +
                   std::pow(ry, g) * std::pow(rx, -gel.lambda_gel));
}

double weight(const WeightFn& w, const Composition& x) {
  require_positive_composition(x, "weight");
  return w(x.norm());
}

double zeta(double eps, double r) {
  if (!(eps > 0.0 && eps < 1.0)) throw ParameterError("zeta: eps must lie in (0,1)");
  if (r <= 1.0 / eps) return 1.0;
  if (r >= 2.0 / eps) return 0.0;
  return 2.0 - eps * r;
}

double zeta(double eps, const Composition& x) { return zeta(eps, x.norm()); }

PairSampler log_pair_sampler(std::size_t dim, std::uint64_t seed, double r_min, double r_max,
                             std::size_t grid_side) {
  if (!(r_min > 0.0 && r_max > r_min)) throw ParameterError("log_pair_sampler: bad radius range");
  Composition probe(dim);  // validates dim
  (void)probe;
  const double log_lo = std::log(r_min);
  const double log_span = std::log(r_max) - log_lo;
  return [=](std::size_t index) {
    std::mt19937_64 rng(split_seed(seed, index));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::exponential_distribution<double> expo(1.0);
    auto direction = [&](double r) {
      Composition x(dim);
      double s = 0.0;
      for (std::size_t i = 0; i < dim; ++i) {
        x[i] = expo(rng);
        s += x[i];
      }
      x *= r / s;
      return x;
    };
    double ra = 0.0;
    double rb = 0.0;
    if (index < grid_side * grid_side && grid_side > 1) {
      const double a = static_cast<double>(index / grid_side) / static_cast<double>(grid_side - 1);
      const double b = static_cast<double>(index % grid_side) / static_cast<double>(grid_side - 1);
      ra = std::exp(log_lo + a * log_span);
      rb = std::exp(log_lo + b * log_span);
    } else {
      ra = std::exp(log_lo + unit(rng) * log_span);
      rb = std::exp(log_lo + unit(rng) * log_span);
    }
    return std::pair<Composition, Composition>{direction(ra), direction(rb)};
  };
}

BoundReport validate_envelope(const Kernel& kernel, const PairSampler& sampler,
                              std::size_t n_samples, double tol) {
  if (n_samples == 0) throw ParameterError("validate_envelope: n_samples must be >= 1");
  BoundReport rep;
  rep.n_samples = n_samples;
  rep.tolerance = tol;
  const auto& env = kernel.envelope();
  const auto& gel = kernel.gel();
  double min_lower = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n_samples; ++i) {
    const auto [x, y] = sampler(i);
    const double k = kernel(x, y);
    const double rx = x.norm();
    const double ry = y.norm();
    const double e = envelope_value(env, rx, ry);
    double ratio = 0.0;
    if (e > 0.0) {
      ratio = k / e;
    } else if (k > 0.0) {
      ratio = std::numeric_limits<double>::infinity();
    }
    const auto regime = size_regime(rx, ry);
    auto& slot = rep.max_ratio_by_regime[static_cast<std::size_t>(regime)];
    slot = std::max(slot, ratio);
    if (i == 0 || ratio > rep.max_upper_ratio) {
      rep.max_upper_ratio = ratio;
      rep.worst_regime = regime;
    }
    if (gel) {
      const double lb = lower_bound_value(*gel, x, y);
      min_lower = std::min(min_lower, lb > 0.0 ? k / lb : std::numeric_limits<double>::infinity());
    }
  }
  rep.upper_pass = rep.max_upper_ratio <= 1.0 + tol;
  if (gel) {
    rep.min_lower_ratio = min_lower;
    rep.lower_pass = min_lower >= 1.0 - tol;
  }
  return rep;
}

const char* to_string(KernelClass c) noexcept {
  switch (c) {
    case KernelClass::kMassConservingGuaranteed: return "mass_conserving_guaranteed";
    case KernelClass::kGellingGuaranteed: return "gelling_guaranteed";
    case KernelClass::kIndeterminate: return "indeterminate";
  }
  return "unknown";
}

Classification classify(const Kernel& kernel) {
  const auto& env = kernel.envelope();
  const bool conserving = env.gamma2 <= 1.0;
  const bool gelling = kernel.gel().has_value() && kernel.gel()->in_gelling_range();
  Classification c;
  c.existence = env.strict();
  if (conserving && !gelling) {
    c.verdict = KernelClass::kMassConservingGuaranteed;
  } else if (gelling && !conserving) {
    c.verdict = KernelClass::kGellingGuaranteed;
  } else {
    c.verdict = KernelClass::kIndeterminate;
  }
  return c;
}

}  // namespace coagsim

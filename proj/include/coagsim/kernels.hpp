#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "coagsim/composition.hpp"

namespace coagsim {

/// Three-regime power-law majorant of a kernel. With |y| <= |x|:
///   c2 |x|^-beta |y|^-beta                  for |x|, |y| <= 1
///   c2 |x|^(gamma1+lambda1) |y|^-lambda1    for |x| >= 1 >= |y|
///   c2 |x|^(gamma2+lambda2) |y|^-lambda2    for |x|, |y| >= 1
struct EnvelopeParams {
  double beta = 0.0;
  double gamma1 = 0.0;
  double lambda1 = 0.0;
  double gamma2 = 0.0;
  double lambda2 = 0.0;
  double c2 = 1.0;

  /// Throws ParameterError unless -lambda_j <= gamma_j + lambda_j <= 1 and c2 >= 0.
  void validate() const;
  /// gamma_j + lambda_j < 1 for both j: the regime where existence is guaranteed.
  bool strict() const noexcept;

  friend bool operator==(const EnvelopeParams&, const EnvelopeParams&) = default;
};

/// Power-law lower bound c1 (|x|^(g+l)|y|^-l + |y|^(g+l)|x|^-l) <= K(x, y).
struct GelParams {
  double c1 = 1.0;
  double gamma_gel = 2.0;
  double lambda_gel = -1.0;

  void validate() const;
  /// gamma_gel in (1, 2): finite-time gelation is guaranteed.
  bool in_gelling_range() const noexcept { return gamma_gel > 1.0 && gamma_gel < 2.0; }

  friend bool operator==(const GelParams&, const GelParams&) = default;
};

/// Two-sided single-power-law class with exact homogeneity K(rx, ry) = r^gamma' K(x, y).
struct Homogeneity {
  double gamma_prime = 0.0;
  double lambda_prime = 0.0;
  double c1_prime = 1.0;
  double c2_prime = 1.0;

  friend bool operator==(const Homogeneity&, const Homogeneity&) = default;
};

/// omega(x) = |x|^exp_small for |x| <= 1 and |x|^exp_large beyond.
struct WeightFn {
  double exp_small = 0.0;
  double exp_large = 0.0;

  static WeightFn from_envelope(const EnvelopeParams& env) noexcept;
  double operator()(double r) const noexcept;
  double operator()(const Composition& x) const noexcept { return (*this)(x.norm()); }
};

enum class KernelKind {
  kConstant,
  kAdditive,
  kMultiplicative,
  kProduct,
  kPowerLaw,
  kDiffusion,
  kBallistic,
  kTransition,
  kCustom,
};

const char* to_string(KernelKind kind) noexcept;

/// Immutable coagulation kernel: a rate function together with its envelope
/// metadata. Built-ins depend on |x| and |y| only, except the product kernel
/// x^T A y.
class Kernel {
 public:
  using RateFn = std::function<double(const Composition&, const Composition&)>;

  /// Per-particle cached powers, so a pair evaluation costs a few flops.
  struct Prepared {
    double r = 0.0;
    std::array<double, 4> p{};
    Composition x;
  };

  static Kernel constant(double c0 = 1.0);
  static Kernel additive(double c0 = 1.0);
  static Kernel multiplicative(double c0 = 1.0);
  /// K(x, y) = x^T A y with A symmetric and entrywise nonnegative.
  static Kernel product(std::vector<std::vector<double>> matrix);
  /// K = c0 (|x|^-l |y|^(g+l) + |y|^-l |x|^(g+l)).
  static Kernel power_law(double c0, double gamma_prime, double lambda_prime);
  static Kernel diffusion(double c0 = 1.0);
  static Kernel ballistic(double c0 = 1.0);
  /// Ballistic for |x|, |y| <= 1, diffusion for |x|, |y| >= 1, geometric blend
  /// in log-size on the mixed region.
  static Kernel transition(double c0 = 1.0);
  static Kernel custom(std::string name, RateFn rate, EnvelopeParams envelope);

  /// Rate K(x, y). Throws DomainError on vectors outside R^d_*.
  double operator()(const Composition& x, const Composition& y) const;

  Prepared prepare(const Composition& x) const;
  /// Rate from prepared operands; no domain checks.
  double eval(const Prepared& x, const Prepared& y) const noexcept;

  const std::string& name() const noexcept { return name_; }
  KernelKind kind() const noexcept { return kind_; }
  double c0() const noexcept { return c0_; }
  const EnvelopeParams& envelope() const noexcept { return envelope_; }
  const std::optional<GelParams>& gel() const noexcept { return gel_; }
  const std::optional<Homogeneity>& homogeneity() const noexcept { return homogeneity_; }
  const std::vector<std::vector<double>>& matrix() const noexcept { return matrix_; }
  /// Power-law exponents (gamma', lambda') for kPowerLaw.
  std::pair<double, double> power_exponents() const noexcept { return {gamma_p_, lambda_p_}; }
  WeightFn weight() const noexcept { return WeightFn::from_envelope(envelope_); }
  /// True for the constant kernel with c0 == 0 and custom kernels with c2 == 0.
  bool identically_zero() const noexcept;

  Kernel with_envelope(const EnvelopeParams& env) const;
  Kernel with_gel(std::optional<GelParams> gel) const;
  Kernel with_homogeneity(std::optional<Homogeneity> h) const;

 private:
  Kernel() = default;

  std::string name_;
  KernelKind kind_ = KernelKind::kConstant;
  double c0_ = 1.0;
  double gamma_p_ = 0.0;
  double lambda_p_ = 0.0;
  EnvelopeParams envelope_{};
  std::optional<GelParams> gel_;
  std::optional<Homogeneity> homogeneity_;
  std::vector<std::vector<double>> matrix_;
  std::shared_ptr<const RateFn> custom_;
};

enum class SizeRegime { kSmallSmall, kLargeSmall, kLargeLarge };
const char* to_string(SizeRegime r) noexcept;

/// Which branch of the envelope applies to (|x|, |y|) after ordering |y| <= |x|.
SizeRegime size_regime(double rx, double ry) noexcept;

double envelope_value(const EnvelopeParams& env, double rx, double ry) noexcept;
double envelope_value(const EnvelopeParams& env, const Composition& x, const Composition& y);
double lower_bound_value(const GelParams& gel, const Composition& x, const Composition& y);

double weight(const WeightFn& w, const Composition& x);

/// Cutoff 1 for |x| <= 1/eps, 0 for |x| >= 2/eps, linear in |x| in between.
double zeta(double eps, double r);
double zeta(double eps, const Composition& x);

/// Samples pairs (x, y) for envelope audits; index runs over [0, n).
using PairSampler = std::function<std::pair<Composition, Composition>(std::size_t index)>;

/// Deterministic log-grid over radii in [r_min, r_max] (first grid_side^2
/// indices) followed by seeded log-uniform radii with uniform simplex directions.
PairSampler log_pair_sampler(std::size_t dim, std::uint64_t seed, double r_min = 1e-4,
                             double r_max = 1e4, std::size_t grid_side = 200);

struct BoundReport {
  std::size_t n_samples = 0;
  double tolerance = 1e-12;
  /// Max of K / envelope over the samples, overall and per regime.
  double max_upper_ratio = 0.0;
  std::array<double, 3> max_ratio_by_regime{};
  SizeRegime worst_regime = SizeRegime::kSmallSmall;
  bool upper_pass = true;
  std::optional<double> min_lower_ratio;
  bool lower_pass = true;

  bool pass() const noexcept { return upper_pass && lower_pass; }
};

BoundReport validate_envelope(const Kernel& kernel, const PairSampler& sampler,
                              std::size_t n_samples, double tol = 1e-12);

enum class KernelClass { kMassConservingGuaranteed, kGellingGuaranteed, kIndeterminate };
const char* to_string(KernelClass c) noexcept;

struct Classification {
  KernelClass verdict = KernelClass::kIndeterminate;
  /// gamma_j + lambda_j < 1 for j = 1, 2.
  bool existence = false;
};

Classification classify(const Kernel& kernel);

}  // namespace coagsim

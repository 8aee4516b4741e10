#pragma once

#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "coagsim/kernels.hpp"
#include "coagsim/trajectory.hpp"

namespace coagsim {

enum class Verdict { kPass, kFail, kInapplicable };
const char* to_string(Verdict v) noexcept;

/// Outcome of one numerical check. A passing certificate has slack >= -tolerance.
struct Certificate {
  std::string name;
  Verdict verdict = Verdict::kInapplicable;
  double slack = 0.0;
  double tolerance = 0.0;
  /// Parameter summary, e.g. "alpha=0.5 r=0".
  std::string inputs;
  /// Why the verdict was reached (reason for inapplicable / fail, extra numbers).
  std::string detail;

  bool passed() const noexcept { return verdict == Verdict::kPass; }
};

void to_json(nlohmann::json& j, const Certificate& c);

/// Pass iff max_t |m(t) + flux(t) - m(0)|_1 / |m(0)|_1 <= tol, where flux is
/// the recorded truncation mass vector. Inapplicable unless the kernel
/// classifies as mass conserving, or when the initial mass vanishes.
Certificate mass_conservation_certificate(const Trajectory& traj, const Kernel& kernel, double tol = 1e-6);

/// Pass iff M_alpha is nonincreasing up to a relative slack of 1e-10 per step.
/// Inapplicable when alpha lies outside [min(-beta, -lambda1) - r, 1].
Certificate moment_monotonicity_certificate(const Trajectory& traj, const Kernel& kernel, double alpha,
                                            double r = 0.0);

/// Pass iff every recorded Picard window has successive-iterate distance
/// ratios at most `bound` after the first iteration. Inapplicable without
/// window telemetry (non-regularized runs).
Certificate picard_contraction_certificate(const Trajectory& traj, double bound = 0.55);

/// Pass iff every atom of every sample lies within `tol` (max norm) of a
/// point of the integer lattice.
Certificate lattice_support_certificate(const Trajectory& traj, double tol = 1e-12);

/// One truncation level of a gelation ladder (cap or 1/eps).
struct GelLevel {
  double level = 0.0;
  const Trajectory* trajectory = nullptr;
};

struct GelOnset {
  /// First time M1 falls to (1 - drop) M1(0), linearly interpolated; NaN when never.
  std::vector<double> onsets;
  double estimate = 0.0;
  Certificate certificate;
};

/// Onset per level, Aitken extrapolation across the last three levels (last
/// onset when fewer or when the extrapolation is ill-conditioned). Pass iff
/// the last two onsets differ by less than 10% and the estimate is finite;
/// fail("no-gel-observed") when no level loses mass before its horizon.
GelOnset gelation_onset(const std::vector<GelLevel>& levels, double drop = 0.01);

/// C_Phi for Phi(A) = max(0, A^(1-g/2) - (R/2)^(1-g/2)): ((2-g)/(g-1)) (R/2)^((1-g)/2).
double c_phi(double gamma_gel, double radius);
/// C_g = (2/c1) (1 - 2^(g/2-1))^-2 ((2-g)/(g-1))^2 2^(g-1).
double gel_constant(double gamma_gel, double c1);

struct GelTestSpec {
  double radius = 1.0;
  double t_start = 0.0;
  double c1 = 1.0;
  double gamma_gel = 1.5;

  static GelTestSpec from_kernel(const Kernel& kernel, double radius, double t_start);
};

/// LHS = int_T^horizon (int_{|x|>=R} |x| f(dx,t))^2 dt by the trapezoid rule
/// over samples; RHS = C_g R^(1-g) M1(T). Pass iff LHS <= RHS; slack = RHS - LHS.
/// Inapplicable unless gamma_gel lies in (1, 2).
Certificate gel_inequality_certificate(const Trajectory& traj, const GelTestSpec& spec, double horizon);

/// C0 = max_{t>=1} M_k(t) / t^((k-1)/(1-gamma')). Pass iff the max of that
/// ratio over the last quarter of those samples is at most 1.1 times the max
/// over the earlier ones. Inapplicable for horizon < 1, k <= 1, gamma' outside
/// [0, 1) or a kernel without homogeneity data.
Certificate moment_growth_certificate(const Trajectory& traj, const Kernel& kernel, double k);

struct LocalizationSpec {
  /// Positive, nonincreasing; default min(1, t^(-1/4)).
  std::function<double(double)> a_schedule;
  double gamma_prime = 0.0;
  /// Initial mass vector m0.
  Composition m0;
  /// Only samples with t >= t_min enter the report.
  double t_min = 1.0;

  static LocalizationSpec standard(const Composition& m0, double gamma_prime = 0.0);
};

struct LocalizationReport {
  std::vector<double> times;
  std::vector<double> deficit;
  Certificate certificate;
};

/// D(t) = | int_{A_t and cone} |x| f(dx,t) - |m0| | with
/// A_t = [a t^(1/(1-g')), t^(1/(1-g')) / a] and cone |x/|x| - m0/|m0||_1 <= a.
double localization_deficit(const MeasureState& state, const LocalizationSpec& spec, double t);

/// Pass iff, over the last third of the samples, every step satisfies
/// D_{k+1} <= 1.05 D_k and the final deficit is below the first one of that
/// stretch. Inapplicable for d = 1 or m0 = 0.
LocalizationReport localization_report(const Trajectory& traj, const LocalizationSpec& spec);
/// Same on the replica-averaged deficit series (replicas must share sample times).
LocalizationReport localization_report(const std::vector<const Trajectory*>& replicas,
                                       const LocalizationSpec& spec);

}  // namespace coagsim

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "coagsim/discrete_solver.hpp"
#include "coagsim/errors.hpp"
#include "coagsim/kernels.hpp"
#include "coagsim/measures.hpp"
#include "coagsim/regularized_solver.hpp"

namespace coagsim {

struct FieldError {
  std::string path;
  std::string message;
};

/// Every problem found while validating a config, each tagged with its path.
class ConfigError : public Error {
 public:
  explicit ConfigError(std::vector<FieldError> errors);
  const std::vector<FieldError>& errors() const noexcept { return errors_; }

 private:
  std::vector<FieldError> errors_;
};

struct KernelSpec {
  /// constant, additive, multiplicative, product, power_law, diffusion,
  /// ballistic or transition.
  std::string type = "constant";
  double c0 = 1.0;
  std::vector<std::vector<double>> matrix;
  double gamma_prime = 0.0;
  double lambda_prime = 0.0;
  /// Overrides of the built-in metadata.
  std::optional<EnvelopeParams> envelope;
  std::optional<GelParams> gel;

  Kernel build() const;
};

struct InitialSpec {
  enum class Kind { kPreset, kAtoms, kLattice, kFile };
  Kind kind = Kind::kPreset;
  /// monodisperse: one atom at `point` (default e_1).
  /// bi-species (d = 2): weight/2 at (1,0) and at (0,1).
  std::string preset = "monodisperse";
  std::vector<double> point;
  double weight = 1.0;
  std::vector<Particle> atoms;
  std::vector<std::pair<LatticePoint, double>> lattice;
  /// State or lattice CSV; relative paths resolve against the config's directory.
  std::string file;

  MeasureState build(std::size_t dim, const std::filesystem::path& base_dir) const;
};

struct RegularizedBlock {
  RegularizationParams params;
  /// Optional eps ladder for gelation onset; the last entry is the main run.
  std::vector<double> eps_ladder;
};

struct DiscreteBlock {
  std::int64_t cap = 256;
  IntegrationParams params;
  /// Optional cap ladder for gelation onset; the last entry is the main run.
  std::vector<std::int64_t> cap_ladder;
};

struct MonteCarloBlock {
  std::size_t n_particles = 100000;
  std::size_t replicas = 16;
  bool check_conservation = false;
};

struct SolverSpec {
  enum class Kind { kRegularized, kDiscrete, kMonteCarlo };
  Kind kind = Kind::kRegularized;
  RegularizedBlock regularized;
  DiscreteBlock discrete;
  MonteCarloBlock montecarlo;
};

const char* to_string(SolverSpec::Kind k) noexcept;

struct DiagnosticSpec {
  /// mass_conservation, moment_monotonicity, picard_contraction,
  /// lattice_support, gelation_onset, gel_inequality, moment_growth,
  /// localization or stochastic_agreement.
  std::string name;
  double tol = 1e-6;
  std::vector<double> alphas{-0.5, 0.0, 0.5, 1.0};
  double r = 0.0;
  double bound = 0.55;
  double drop = 0.01;
  std::vector<double> radii{4.0, 8.0, 16.0};
  std::vector<double> t_starts{0.0, 0.5};
  double k = 2.0;
  double t_min = 1.0;
  /// stochastic_agreement: name of an earlier deterministic run and the z bound.
  std::string reference;
  double z_max = 3.0;
};

/// Default options of a named diagnostic; throws ParameterError for unknown names.
DiagnosticSpec default_diagnostic(const std::string& name);

struct RunEntry {
  std::string name = "run";
  KernelSpec kernel;
  std::size_t dim = 1;
  InitialSpec initial;
  double horizon = 1.0;
  /// Sampled times in (0, horizon]; the horizon is always sampled.
  std::vector<double> output_times;
  /// Moment orders written to moments.csv.
  std::vector<double> moments{0.0, 1.0, 2.0};
  SolverSpec solver;
  std::vector<DiagnosticSpec> diagnostics;
};

struct RunConfig {
  std::string output_dir = "out";
  std::uint64_t seed = 0;
  std::vector<RunEntry> runs;
  /// Directory of the config file, used to resolve relative input paths.
  std::filesystem::path base_dir = ".";
};

struct ParseResult {
  RunConfig config;
  std::vector<std::string> warnings;
};

/// Strict parse: unknown keys, type mismatches and out-of-range values are
/// collected and thrown together as a ConfigError.
ParseResult parse_config(const std::string& text);
ParseResult parse_config(const nlohmann::json& doc);
/// Reads and parses a config file; base_dir becomes the file's directory.
ParseResult load_config(const std::filesystem::path& path);

/// Canonical form with every field spelled out; parse(serialize(c)) == c.
nlohmann::json serialize(const RunConfig& config);
nlohmann::json serialize(const RunEntry& entry);
bool operator==(const RunConfig& a, const RunConfig& b);

}  // namespace coagsim

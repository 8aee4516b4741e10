#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "coagsim/config.hpp"
#include "coagsim/diagnostics.hpp"
#include "coagsim/stochastic_oracle.hpp"

namespace coagsim {

/// Hex SHA-256 of a byte string / a file.
std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::filesystem::path& path);

/// Everything one run entry produced.
struct RunProducts {
  Kernel kernel = Kernel::constant();
  MeasureState initial;
  /// Main trajectory: the finest ladder level, or replica 0 for Monte Carlo.
  Trajectory trajectory;
  /// Lattice states of a discrete run (parallel to trajectory samples).
  std::vector<DiscreteState> lattice;
  std::vector<double> ladder_levels;
  std::vector<Trajectory> ladder;
  std::vector<McRun> replicas;
};

/// Solves one entry. `seed` drives the Monte Carlo streams.
RunProducts execute(const RunEntry& entry, const std::filesystem::path& base_dir, std::uint64_t seed);

struct CertificateContext {
  /// Deterministic trajectories of earlier runs, by name.
  std::vector<std::pair<std::string, const Trajectory*>> references;
  /// Set by the localization certificate.
  std::optional<LocalizationReport> localization;
  /// Set by stochastic_agreement.
  std::optional<DeviationReport> deviation;
  std::optional<GelOnset> onset;
};

/// Evaluates the diagnostics of `entry` on its products.
std::vector<Certificate> evaluate(const RunEntry& entry, const RunProducts& products, CertificateContext& ctx);

struct RunStatus {
  std::string name;
  std::string solver;
  bool ok = true;
  std::string error;
  std::vector<Certificate> certificates;
};

struct RunOutcome {
  /// 0: every certificate passed or was inapplicable; 2: some certificate
  /// failed; 1: an execution error.
  int exit_code = 0;
  std::vector<RunStatus> runs;
  nlohmann::json manifest;
};

int exit_code_for(const std::vector<RunStatus>& runs);

/// Executes every run entry, writes the per-run artifacts under
/// <output_dir>/<name>/ and a manifest.json listing every artifact with its
/// SHA-256. An entry that throws is recorded and the remaining entries still run.
RunOutcome run(const ParseResult& parsed, std::ostream& log);

/// Re-evaluates certificates from a run directory (or every run directory
/// under a root written by run). `only` restricts the certificate names.
RunOutcome diagnose(const std::filesystem::path& dir, const std::vector<std::string>& only, std::ostream& log);

}  // namespace coagsim

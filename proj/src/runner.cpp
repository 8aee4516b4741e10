#include "coagsim/runner.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <openssl/evp.h>

#include "coagsim/discrete_solver.hpp"
#include "coagsim/plots.hpp"
#include "coagsim/regularized_solver.hpp"
#include "coagsim/rng.hpp"

namespace coagsim {

namespace fs = std::filesystem;
using nlohmann::json;

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw IoError("sha256: digest failed");
  }
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
  return os.str();
}

namespace {

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::string shortest(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string moment_label(double alpha) { return "M" + shortest(alpha); }

std::vector<double> sample_times(const RunEntry& e) {
  std::vector<double> ts = e.output_times;
  if (ts.empty() || ts.back() < e.horizon) ts.push_back(e.horizon);
  return ts;
}

DiscreteState to_lattice(const MeasureState& f0, std::int64_t cap) {
  DiscreteState s(f0.dim(), cap, 0.0);
  for (const auto& p : f0.particles()) {
    LatticePoint a;
    a.dim = f0.dim();
    for (std::size_t i = 0; i < f0.dim(); ++i) {
      const double v = p.x[i];
      if (std::abs(v - std::round(v)) > 1e-12) throw ParameterError("discrete solver: initial atom off the lattice");
      a.a[i] = static_cast<std::int64_t>(std::llround(v));
    }
    if (a.norm() > cap) throw ParameterError("discrete solver: initial atom beyond the size cap");
    s.set(a, s.get(a) + p.w);
  }
  return s;
}

}  // namespace

std::string sha256_file(const fs::path& path) { return sha256_hex(slurp(path)); }

RunProducts execute(const RunEntry& entry, const fs::path& base_dir, std::uint64_t seed) {
  RunProducts out;
  out.kernel = entry.kernel.build();
  out.initial = entry.initial.build(entry.dim, base_dir);
  const auto times = sample_times(entry);
  const auto& solver = entry.solver;
  switch (solver.kind) {
    case SolverSpec::Kind::kRegularized: {
      const auto& block = solver.regularized;
      std::vector<double> levels = block.eps_ladder;
      if (levels.empty()) levels.push_back(block.params.eps);
      for (double eps : levels) {
        auto params = block.params;
        params.eps = eps;
        out.ladder_levels.push_back(1.0 / eps);
        out.ladder.push_back(solve(out.kernel, out.initial, entry.horizon, times, params));
      }
      out.trajectory = out.ladder.back();
      break;
    }
    case SolverSpec::Kind::kDiscrete: {
      const auto& block = solver.discrete;
      std::vector<std::int64_t> caps = block.cap_ladder;
      if (caps.empty()) caps.push_back(block.cap);
      for (std::int64_t cap : caps) {
        DiscreteSystem system(out.kernel, entry.dim, cap);
        auto res = integrate(system, to_lattice(out.initial, cap), entry.horizon, times, block.params);
        out.ladder_levels.push_back(static_cast<double>(cap));
        out.ladder.push_back(std::move(res.trajectory));
        out.lattice = std::move(res.lattice);
      }
      out.trajectory = out.ladder.back();
      break;
    }
    case SolverSpec::Kind::kMonteCarlo: {
      McParams p;
      p.n_particles = solver.montecarlo.n_particles;
      p.horizon = entry.horizon;
      p.seed = seed;
      p.record_times = times;
      p.check_conservation = solver.montecarlo.check_conservation;
      out.replicas = ensemble(out.kernel, out.initial, p, solver.montecarlo.replicas);
      out.trajectory = out.replicas.front().trajectory;
      break;
    }
  }
  return out;
}

namespace {

std::string reference_error(const std::string& name) { return "reference run '" + name + "' has no trajectory"; }

}  // namespace

std::vector<Certificate> evaluate(const RunEntry& entry, const RunProducts& products, CertificateContext& ctx) {
  std::vector<Certificate> certs;
  const auto& traj = products.trajectory;
  const auto& kernel = products.kernel;
  for (const auto& d : entry.diagnostics) {
    const auto& n = d.name;
    if (n == "mass_conservation") {
      certs.push_back(mass_conservation_certificate(traj, kernel, d.tol));
    } else if (n == "moment_monotonicity") {
      for (double a : d.alphas) certs.push_back(moment_monotonicity_certificate(traj, kernel, a, d.r));
    } else if (n == "picard_contraction") {
      certs.push_back(picard_contraction_certificate(traj, d.bound));
    } else if (n == "lattice_support") {
      certs.push_back(lattice_support_certificate(traj, d.tol));
    } else if (n == "gelation_onset") {
      if (products.ladder.size() < 2) {
        Certificate c;
        c.name = "gelation_onset";
        c.detail = "truncation ladder not available";
        certs.push_back(c);
        continue;
      }
      std::vector<GelLevel> levels;
      for (std::size_t i = 0; i < products.ladder.size(); ++i) {
        levels.push_back({products.ladder_levels[i], &products.ladder[i]});
      }
      ctx.onset = gelation_onset(levels, d.drop);
      certs.push_back(ctx.onset->certificate);
    } else if (n == "gel_inequality") {
      for (double radius : d.radii) {
        for (double t0 : d.t_starts) {
          if (!kernel.gel()) {
            Certificate c;
            c.name = "gel_inequality";
            c.inputs = "R=" + shortest(radius) + " T=" + shortest(t0);
            c.detail = "kernel carries no gelation lower bound";
            certs.push_back(c);
            continue;
          }
          certs.push_back(
              gel_inequality_certificate(traj, GelTestSpec::from_kernel(kernel, radius, t0), entry.horizon));
        }
      }
    } else if (n == "moment_growth") {
      certs.push_back(moment_growth_certificate(traj, kernel, d.k));
    } else if (n == "localization") {
      const double gp = kernel.homogeneity() ? kernel.homogeneity()->gamma_prime : 0.0;
      auto spec = LocalizationSpec::standard(mass_vector(products.initial), gp);
      spec.t_min = d.t_min;
      std::vector<const Trajectory*> runs;
      if (products.replicas.empty()) {
        runs.push_back(&traj);
      } else {
        for (const auto& r : products.replicas) runs.push_back(&r.trajectory);
      }
      if (!(gp >= 0.0 && gp < 1.0)) {
        Certificate c;
        c.name = "localization";
        c.detail = "gamma_prime outside [0,1)";
        certs.push_back(c);
        continue;
      }
      ctx.localization = localization_report(runs, spec);
      certs.push_back(ctx.localization->certificate);
    } else if (n == "stochastic_agreement") {
      Certificate c;
      c.name = "stochastic_agreement";
      c.tolerance = 0.0;
      c.inputs = "reference=" + d.reference + " z_max=" + shortest(d.z_max);
      const Trajectory* ref = nullptr;
      for (const auto& [name, t] : ctx.references) {
        if (name == d.reference) ref = t;
      }
      if (ref == nullptr) throw ParameterError(reference_error(d.reference));
      if (products.replicas.size() < 2) {
        c.detail = "needs at least two replicas";
        certs.push_back(c);
        continue;
      }
      std::vector<Observable> obs;
      for (double a : d.alphas) obs.push_back(Observable::moment(a, moment_label(a)));
      ctx.deviation = compare(products.replicas, *ref, obs);
      c.slack = d.z_max - ctx.deviation->max_abs_z;
      c.verdict = ctx.deviation->max_abs_z <= d.z_max ? Verdict::kPass : Verdict::kFail;
      c.detail = "max |z| " + format_double(ctx.deviation->max_abs_z) + " over " +
                 std::to_string(ctx.deviation->scores.size()) + " (time, observable) pairs";
      certs.push_back(c);
    }
  }
  return certs;
}

int exit_code_for(const std::vector<RunStatus>& runs) {
  int code = 0;
  for (const auto& r : runs) {
    if (!r.ok) return 1;
    for (const auto& c : r.certificates) {
      if (c.verdict == Verdict::kFail) code = 2;
    }
  }
  return code;
}

namespace {

class ArtifactLog {
 public:
  explicit ArtifactLog(fs::path root) : root_(std::move(root)) {}

  /// Writes `bytes` to root/rel and records it.
  void write(const fs::path& rel, const std::string& bytes) {
    const fs::path p = root_ / rel;
    fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    if (!out) throw IoError("cannot write " + p.string());
    out << bytes;
    out.close();
    if (!out) throw IoError("write failed for " + p.string());
    add(rel, bytes);
  }
  /// Records a file some other writer has already closed.
  void record(const fs::path& rel) { add(rel, slurp(root_ / rel)); }
  json entries() const { return entries_; }

 private:
  void add(const fs::path& rel, const std::string& bytes) {
    entries_.push_back({{"path", rel.generic_string()}, {"sha256", sha256_hex(bytes)}, {"bytes", bytes.size()}});
  }

  fs::path root_;
  json entries_ = json::array();
};

std::string moments_csv(const RunEntry& entry, const RunProducts& p) {
  std::ostringstream os;
  const std::size_t dim = entry.dim;
  os << "t";
  for (double a : entry.moments) os << "," << moment_label(a);
  os << ",gel_mass";
  for (std::size_t i = 0; i < dim; ++i) os << ",flux_" << (i + 1);
  os << ",atoms\n";
  if (p.replicas.empty()) {
    for (const auto& s : p.trajectory.samples()) {
      os << format_double(s.t);
      for (double a : entry.moments) os << "," << format_double(moment(s.state, a));
      os << "," << format_double(s.gel_mass);
      for (std::size_t i = 0; i < dim; ++i) os << "," << format_double(s.truncation_flux[i]);
      os << "," << s.state.size() << "\n";
    }
    return os.str();
  }
  // Ensemble mean over replicas, sample by sample.
  const auto& base = p.replicas.front().trajectory.samples();
  const double r = static_cast<double>(p.replicas.size());
  for (std::size_t k = 0; k < base.size(); ++k) {
    os << format_double(base[k].t);
    for (double a : entry.moments) {
      double sum = 0.0;
      for (const auto& rep : p.replicas) sum += moment(rep.trajectory.samples()[k].state, a);
      os << "," << format_double(sum / r);
    }
    os << "," << format_double(0.0);
    for (std::size_t i = 0; i < dim; ++i) os << "," << format_double(0.0);
    double atoms = 0.0;
    for (const auto& rep : p.replicas) atoms += static_cast<double>(rep.trajectory.samples()[k].state.size());
    os << "," << format_double(atoms / r) << "\n";
  }
  return os.str();
}

std::string replicas_csv(const RunEntry& entry, const RunProducts& p) {
  std::ostringstream os;
  os << "replica,t";
  for (double a : entry.moments) os << "," << moment_label(a);
  os << ",largest_fraction,events\n";
  for (std::size_t r = 0; r < p.replicas.size(); ++r) {
    const auto& rep = p.replicas[r];
    const auto& ss = rep.trajectory.samples();
    for (std::size_t k = 0; k < ss.size(); ++k) {
      os << r << "," << format_double(ss[k].t);
      for (double a : entry.moments) os << "," << format_double(moment(ss[k].state, a));
      os << "," << format_double(k < rep.largest_fraction.size() ? rep.largest_fraction[k] : 0.0) << ","
         << rep.events << "\n";
    }
  }
  return os.str();
}

std::string windows_csv(const Trajectory& traj) {
  std::ostringstream os;
  os << "t_start,length,iterations,max_ratio_after_first,ball_radius,max_particles,final_distance\n";
  for (const auto& w : traj.windows) {
    os << format_double(w.t_start) << "," << format_double(w.length) << "," << w.iterations << ","
       << format_double(w.max_ratio_after_first) << "," << format_double(w.ball_radius) << "," << w.max_particles
       << "," << format_double(w.distances.empty() ? 0.0 : w.distances.back()) << "\n";
  }
  return os.str();
}

std::string state_name(std::size_t k) {
  std::ostringstream os;
  os << "state_" << std::setw(4) << std::setfill('0') << k << ".csv";
  return os.str();
}

std::string replica_dir(std::size_t r) {
  std::ostringstream os;
  os << "r" << std::setw(3) << std::setfill('0') << r;
  return os.str();
}

std::string state_csv(const MeasureState& s) {
  std::ostringstream os;
  write_state_csv(os, s);
  return os.str();
}

void write_run_artifacts(ArtifactLog& log, const fs::path& rel, const RunEntry& entry, const RunProducts& p,
                         std::uint64_t seed) {
  json meta = serialize(entry);
  meta["seed"] = seed;
  log.write(rel / "run.json", meta.dump(2) + "\n");
  log.write(rel / "moments.csv", moments_csv(entry, p));
  if (!p.replicas.empty()) {
    log.write(rel / "replicas.csv", replicas_csv(entry, p));
    for (std::size_t r = 0; r < p.replicas.size(); ++r) {
      const auto& ss = p.replicas[r].trajectory.samples();
      for (std::size_t k = 0; k < ss.size(); ++k) {
        log.write(rel / "states" / replica_dir(r) / state_name(k), state_csv(ss[k].state));
      }
    }
  } else if (!p.lattice.empty()) {
    for (std::size_t k = 0; k < p.lattice.size(); ++k) {
      std::ostringstream os;
      write_lattice_csv(os, p.lattice[k]);
      log.write(rel / "states" / state_name(k), os.str());
    }
  } else {
    const auto& ss = p.trajectory.samples();
    for (std::size_t k = 0; k < ss.size(); ++k) log.write(rel / "states" / state_name(k), state_csv(ss[k].state));
  }
  if (!p.trajectory.windows.empty()) log.write(rel / "windows.csv", windows_csv(p.trajectory));
  if (p.ladder.size() > 1) {
    std::ostringstream os;
    os << "level,t,M1,gel_mass\n";
    for (std::size_t i = 0; i < p.ladder.size(); ++i) {
      for (const auto& s : p.ladder[i].samples()) {
        os << format_double(p.ladder_levels[i]) << "," << format_double(s.t) << ","
           << format_double(moment(s.state, 1.0)) << "," << format_double(s.gel_mass) << "\n";
      }
    }
    log.write(rel / "ladder.csv", os.str());
  }
}

void write_certificate_artifacts(ArtifactLog& log, const fs::path& rel, const std::vector<Certificate>& certs,
                                 const CertificateContext& ctx) {
  log.write(rel / "certificates.json", json(certs).dump(2) + "\n");
  if (ctx.localization && !ctx.localization->times.empty()) {
    std::ostringstream os;
    os << "t,D\n";
    for (std::size_t k = 0; k < ctx.localization->times.size(); ++k) {
      os << format_double(ctx.localization->times[k]) << "," << format_double(ctx.localization->deficit[k]) << "\n";
    }
    log.write(rel / "localization.csv", os.str());
  }
  if (ctx.deviation) {
    std::ostringstream os;
    os << "t,observable,mean,sd,deterministic,z\n";
    for (const auto& z : ctx.deviation->scores) {
      os << format_double(z.t) << "," << z.label << "," << format_double(z.empirical_mean) << ","
         << format_double(z.empirical_sd) << "," << format_double(z.deterministic) << "," << format_double(z.z)
         << "\n";
    }
    log.write(rel / "zscores.csv", os.str());
  }
  if (ctx.onset) {
    std::ostringstream os;
    os << "level,onset\n";
    const auto& certs_onsets = ctx.onset->onsets;
    for (std::size_t i = 0; i < certs_onsets.size(); ++i) os << i << "," << format_double(certs_onsets[i]) << "\n";
    os << "estimate," << format_double(ctx.onset->estimate) << "\n";
    log.write(rel / "gel_onset.csv", os.str());
  }
}

void plot_into(ArtifactLog& log, const fs::path& root, const fs::path& rel, std::vector<std::string>& notes) {
  for (const auto& f : emit_plots(root / rel, notes)) log.record(rel / f);
}

json status_json(const RunStatus& s) {
  json certs = json::array();
  for (const auto& c : s.certificates) certs.push_back({{"name", c.name}, {"verdict", to_string(c.verdict)}});
  json j{{"name", s.name}, {"solver", s.solver}, {"status", s.ok ? "ok" : "error"}, {"certificates", certs}};
  if (!s.ok) j["error"] = s.error;
  return j;
}

void log_certificates(std::ostream& log, const RunStatus& st) {
  for (const auto& c : st.certificates) {
    log << "  " << std::left << std::setw(22) << c.name << std::setw(13) << to_string(c.verdict) << c.inputs
        << (c.detail.empty() ? "" : "  [" + c.detail + "]") << "\n";
  }
}

}  // namespace

RunOutcome run(const ParseResult& parsed, std::ostream& log) {
  const auto& cfg = parsed.config;
  const fs::path root = cfg.output_dir;
  fs::create_directories(root);
  ArtifactLog artifacts(root);
  RunOutcome out;
  std::vector<std::string> notes;
  for (const auto& w : parsed.warnings) log << "warning: " << w << "\n";

  std::vector<std::pair<std::string, Trajectory>> kept;
  kept.reserve(cfg.runs.size());
  for (std::size_t i = 0; i < cfg.runs.size(); ++i) {
    const auto& entry = cfg.runs[i];
    RunStatus st;
    st.name = entry.name;
    st.solver = to_string(entry.solver.kind);
    const std::uint64_t seed = split_seed(cfg.seed, i);
    log << "[" << entry.name << "] " << st.solver << " solver, kernel " << entry.kernel.type << "\n";
    try {
      auto products = execute(entry, cfg.base_dir, seed);
      write_run_artifacts(artifacts, entry.name, entry, products, seed);
      CertificateContext ctx;
      for (const auto& [name, t] : kept) ctx.references.emplace_back(name, &t);
      st.certificates = evaluate(entry, products, ctx);
      write_certificate_artifacts(artifacts, entry.name, st.certificates, ctx);
      plot_into(artifacts, root, entry.name, notes);
      if (entry.solver.kind != SolverSpec::Kind::kMonteCarlo) kept.emplace_back(entry.name, products.trajectory);
      log_certificates(log, st);
    } catch (const std::exception& e) {
      st.ok = false;
      st.error = e.what();
      log << "  error: " << e.what() << "\n";
    }
    out.runs.push_back(std::move(st));
  }
  out.exit_code = exit_code_for(out.runs);
  json runs = json::array();
  for (const auto& s : out.runs) runs.push_back(status_json(s));
  out.manifest = {{"config", serialize(cfg)}, {"warnings", parsed.warnings}, {"runs", runs},
                  {"artifacts", artifacts.entries()}, {"notes", notes}, {"exit_code", out.exit_code}};
  std::ofstream mf(root / "manifest.json", std::ios::binary);
  mf << out.manifest.dump(2) << "\n";
  if (!mf) throw IoError("cannot write manifest in " + root.string());
  return out;
}

namespace {

std::vector<fs::path> sorted_csvs(const fs::path& dir) {
  std::vector<fs::path> files;
  if (!fs::exists(dir)) return files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".csv") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

Trajectory load_trajectory(const std::vector<fs::path>& files, const CsvTable* moments, std::size_t dim) {
  Trajectory traj(dim);
  for (std::size_t k = 0; k < files.size(); ++k) {
    const std::string text = slurp(files[k]);
    std::istringstream is(text);
    MeasureState s = text.find("alpha_1") != std::string::npos ? read_lattice_csv(is) : read_state_csv(is);
    Composition flux(dim);
    double gel = 0.0;
    if (moments != nullptr && k < moments->rows.size()) {
      for (std::size_t i = 0; i < dim; ++i) {
        const auto c = moments->column("flux_" + std::to_string(i + 1));
        if (c >= 0) flux[i] = moments->rows[k][static_cast<std::size_t>(c)];
      }
      if (const auto g = moments->column("gel_mass"); g >= 0) gel = moments->rows[k][static_cast<std::size_t>(g)];
    }
    const double t = s.time();
    traj.append({t, std::move(s), flux, gel});
  }
  return traj;
}

RunStatus diagnose_one(const fs::path& root, const fs::path& rel, const std::vector<std::string>& only,
                       std::vector<std::string>& notes, ArtifactLog& artifacts) {
  const fs::path dir = root / rel;
  RunStatus st;
  const json meta = json::parse(slurp(dir / "run.json"));
  json entry_json = meta;
  entry_json.erase("seed");
  // Ladder and cross-run certificates need the solver outputs themselves.
  std::vector<std::string> skipped;
  json kept = json::array();
  for (const auto& d : entry_json.value("diagnostics", json::array())) {
    const std::string name = d.is_string() ? d.get<std::string>() : d.value("name", "");
    if (name == "gelation_onset" || name == "stochastic_agreement") {
      skipped.push_back(name);
    } else {
      kept.push_back(d);
    }
  }
  entry_json["diagnostics"] = kept;
  const auto parsed = parse_config(json{{"output_dir", root.string()}, {"runs", json::array({entry_json})}});
  RunEntry entry = parsed.config.runs.front();
  st.name = entry.name;
  st.solver = to_string(entry.solver.kind);
  if (!only.empty()) {
    std::vector<DiagnosticSpec> chosen;
    for (const auto& name : only) {
      if (name == "gelation_onset" || name == "stochastic_agreement") continue;
      auto it = std::find_if(entry.diagnostics.begin(), entry.diagnostics.end(),
                             [&](const DiagnosticSpec& d) { return d.name == name; });
      if (it != entry.diagnostics.end()) {
        chosen.push_back(*it);
      } else {
        chosen.push_back(default_diagnostic(name));
      }
    }
    entry.diagnostics = std::move(chosen);
  }

  RunProducts p;
  p.kernel = entry.kernel.build();
  CsvTable moments;
  const bool have_moments = fs::exists(dir / "moments.csv");
  if (have_moments) moments = read_csv_table(dir / "moments.csv");
  if (fs::exists(dir / "states" / replica_dir(0))) {
    for (std::size_t r = 0; fs::exists(dir / "states" / replica_dir(r)); ++r) {
      McRun run;
      run.trajectory = load_trajectory(sorted_csvs(dir / "states" / replica_dir(r)), nullptr, entry.dim);
      p.replicas.push_back(std::move(run));
    }
    p.trajectory = p.replicas.front().trajectory;
  } else {
    p.trajectory = load_trajectory(sorted_csvs(dir / "states"), have_moments ? &moments : nullptr, entry.dim);
  }
  if (p.trajectory.empty()) throw IoError(dir.string() + ": no stored states");
  p.initial = p.trajectory.front().state;
  if (fs::exists(dir / "windows.csv")) {
    const auto w = read_csv_table(dir / "windows.csv");
    for (const auto& row : w.rows) {
      WindowReport rep;
      rep.t_start = row[0];
      rep.length = row[1];
      rep.iterations = static_cast<std::size_t>(row[2]);
      rep.max_ratio_after_first = row[3];
      rep.ball_radius = row[4];
      rep.max_particles = static_cast<std::size_t>(row[5]);
      p.trajectory.windows.push_back(rep);
    }
  }
  for (const auto& name : skipped) {
    if (!only.empty() && std::find(only.begin(), only.end(), name) == only.end()) continue;
    Certificate c;
    c.name = name;
    c.detail = "needs the solver outputs of a full run; not recomputed from stored states";
    st.certificates.push_back(c);
    notes.push_back(entry.name + ": " + name + " skipped by diagnose");
  }
  CertificateContext ctx;
  auto certs = evaluate(entry, p, ctx);
  st.certificates.insert(st.certificates.end(), certs.begin(), certs.end());
  write_certificate_artifacts(artifacts, rel, st.certificates, ctx);
  return st;
}

}  // namespace

RunOutcome diagnose(const fs::path& dir, const std::vector<std::string>& only, std::ostream& log) {
  RunOutcome out;
  std::vector<std::string> notes;
  fs::path root = dir;
  std::vector<fs::path> rels;
  if (fs::exists(dir / "run.json")) {
    root = dir.has_parent_path() ? dir.parent_path() : fs::path(".");
    rels.push_back(dir.filename());
  } else {
    if (!fs::is_directory(dir)) throw IoError(dir.string() + ": not a run directory");
    for (const auto& e : fs::directory_iterator(dir)) {
      if (e.is_directory() && fs::exists(e.path() / "run.json")) rels.push_back(e.path().filename());
    }
    std::sort(rels.begin(), rels.end());
    if (rels.empty()) throw IoError(dir.string() + ": no run directories found");
  }
  ArtifactLog artifacts(root);
  for (const auto& rel : rels) {
    RunStatus st;
    st.name = rel.string();
    try {
      st = diagnose_one(root, rel, only, notes, artifacts);
      log << "[" << st.name << "]\n";
      log_certificates(log, st);
    } catch (const std::exception& e) {
      st.ok = false;
      st.error = e.what();
      log << "[" << st.name << "] error: " << e.what() << "\n";
    }
    out.runs.push_back(std::move(st));
  }
  out.exit_code = exit_code_for(out.runs);
  json runs = json::array();
  for (const auto& s : out.runs) runs.push_back(status_json(s));
  out.manifest = {{"runs", runs}, {"artifacts", artifacts.entries()}, {"notes", notes}, {"exit_code", out.exit_code}};
  return out;
}

}  // namespace coagsim

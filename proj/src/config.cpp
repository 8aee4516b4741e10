#include "coagsim/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace coagsim {

using nlohmann::json;

ConfigError::ConfigError(std::vector<FieldError> errors)
    : Error([&] {
        std::string msg = "invalid config:";
        for (const auto& e : errors) msg += "\n  " + e.path + ": " + e.message;
        return msg;
      }()),
      errors_(std::move(errors)) {}

const char* to_string(SolverSpec::Kind k) noexcept {
  switch (k) {
    case SolverSpec::Kind::kRegularized:
      return "regularized";
    case SolverSpec::Kind::kDiscrete:
      return "discrete";
    case SolverSpec::Kind::kMonteCarlo:
      return "montecarlo";
  }
  return "?";
}

Kernel KernelSpec::build() const {
  Kernel k = [&] {
    if (type == "constant") return Kernel::constant(c0);
    if (type == "additive") return Kernel::additive(c0);
    if (type == "multiplicative") return Kernel::multiplicative(c0);
    if (type == "product") return Kernel::product(matrix);
    if (type == "power_law") return Kernel::power_law(c0, gamma_prime, lambda_prime);
    if (type == "diffusion") return Kernel::diffusion(c0);
    if (type == "ballistic") return Kernel::ballistic(c0);
    if (type == "transition") return Kernel::transition(c0);
    throw ParameterError("unknown kernel type '" + type + "'");
  }();
  if (envelope) k = k.with_envelope(*envelope);
  if (gel) k = k.with_gel(*gel);
  return k;
}

MeasureState InitialSpec::build(std::size_t dim, const std::filesystem::path& base_dir) const {
  switch (kind) {
    case Kind::kPreset: {
      MeasureState s(dim, 0.0);
      if (preset == "monodisperse") {
        Composition x(dim);
        if (point.empty()) {
          x[0] = 1.0;
        } else {
          if (point.size() != dim) throw ParameterError("monodisperse point has the wrong dimension");
          x = Composition::from_span(point);
        }
        s.add(x, weight);
      } else if (preset == "bi-species") {
        if (dim != 2) throw ParameterError("bi-species preset needs d = 2");
        s.add(Composition{1.0, 0.0}, weight / 2.0);
        s.add(Composition{0.0, 1.0}, weight / 2.0);
      } else {
        throw ParameterError("unknown preset '" + preset + "'");
      }
      return s;
    }
    case Kind::kAtoms: {
      MeasureState s(dim, 0.0);
      for (const auto& p : atoms) s.add(p.x, p.w);
      return s;
    }
    case Kind::kLattice: {
      MeasureState s(dim, 0.0);
      for (const auto& [alpha, n] : lattice) {
        if (n > 0.0) s.add(alpha.to_composition(), n);
      }
      return s;
    }
    case Kind::kFile: {
      const std::filesystem::path p = std::filesystem::path(file).is_absolute() ? std::filesystem::path(file) : base_dir / file;
      std::ifstream in(p);
      if (!in) throw IoError("cannot open initial data file " + p.string());
      std::stringstream buf;
      buf << in.rdbuf();
      const std::string text = buf.str();
      std::istringstream is(text);
      MeasureState s = text.find("alpha_1") != std::string::npos ? read_lattice_csv(is) : read_state_csv(is);
      if (s.dim() != dim) throw IoError("initial data file " + p.string() + " has dimension " + std::to_string(s.dim()));
      return s;
    }
  }
  throw ParameterError("bad initial data kind");
}

namespace {

struct Ctx {
  std::vector<FieldError> errors;
  std::vector<std::string> warnings;
  void fail(const std::string& path, const std::string& msg) { errors.push_back({path, msg}); }
};

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }
std::string index(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

/// Strict view of a JSON object: every key read is marked, finish() reports the rest.
class Obj {
 public:
  Obj(const json& j, std::string path, Ctx& ctx) : path_(std::move(path)), ctx_(ctx) {
    if (j.is_object()) {
      j_ = &j;
    } else {
      ctx_.fail(path_.empty() ? "<root>" : path_, "expected an object");
    }
  }

  bool ok() const noexcept { return j_ != nullptr; }
  const std::string& path() const noexcept { return path_; }
  std::string at(const std::string& key) const { return join(path_, key); }

  const json* find(const std::string& key) {
    seen_.insert(key);
    if (j_ == nullptr) return nullptr;
    auto it = j_->find(key);
    return it == j_->end() ? nullptr : &*it;
  }
  bool has(const std::string& key) const { return j_ != nullptr && j_->contains(key); }

  bool num(const std::string& key, double& out) {
    const json* p = find(key);
    if (p == nullptr) return false;
    if (!p->is_number()) return ctx_.fail(at(key), "expected a number"), false;
    out = p->get<double>();
    if (!std::isfinite(out)) return ctx_.fail(at(key), "must be finite"), false;
    return true;
  }
  bool integer(const std::string& key, std::int64_t& out) {
    const json* p = find(key);
    if (p == nullptr) return false;
    if (!p->is_number_integer()) return ctx_.fail(at(key), "expected an integer"), false;
    out = p->get<std::int64_t>();
    return true;
  }
  bool count(const std::string& key, std::size_t& out, std::size_t min_value) {
    std::int64_t v = 0;
    if (!integer(key, v)) return false;
    if (v < static_cast<std::int64_t>(min_value)) {
      return ctx_.fail(at(key), "must be >= " + std::to_string(min_value)), false;
    }
    out = static_cast<std::size_t>(v);
    return true;
  }
  bool unsigned_int(const std::string& key, std::uint64_t& out) {
    const json* p = find(key);
    if (p == nullptr) return false;
    if (!p->is_number_integer() || (!p->is_number_unsigned() && p->get<std::int64_t>() < 0)) {
      return ctx_.fail(at(key), "expected a nonnegative integer"), false;
    }
    out = p->get<std::uint64_t>();
    return true;
  }
  bool str(const std::string& key, std::string& out) {
    const json* p = find(key);
    if (p == nullptr) return false;
    if (!p->is_string()) return ctx_.fail(at(key), "expected a string"), false;
    out = p->get<std::string>();
    return true;
  }
  bool boolean(const std::string& key, bool& out) {
    const json* p = find(key);
    if (p == nullptr) return false;
    if (!p->is_boolean()) return ctx_.fail(at(key), "expected true or false"), false;
    out = p->get<bool>();
    return true;
  }
  bool num_list(const std::string& key, std::vector<double>& out) {
    const json* p = find(key);
    if (p == nullptr) return false;
    return read_num_list(*p, at(key), out);
  }
  bool read_num_list(const json& j, const std::string& path, std::vector<double>& out) {
    if (!j.is_array()) return ctx_.fail(path, "expected an array of numbers"), false;
    std::vector<double> v;
    for (std::size_t i = 0; i < j.size(); ++i) {
      if (!j[i].is_number() || !std::isfinite(j[i].get<double>())) {
        return ctx_.fail(index(path, i), "expected a finite number"), false;
      }
      v.push_back(j[i].get<double>());
    }
    out = std::move(v);
    return true;
  }
  bool required(const std::string& key) {
    if (has(key)) return true;
    if (j_ != nullptr) ctx_.fail(at(key), "required");
    return false;
  }

  void finish() {
    if (j_ == nullptr) return;
    for (auto it = j_->begin(); it != j_->end(); ++it) {
      if (!seen_.contains(it.key())) ctx_.fail(at(it.key()), "unknown key");
    }
  }

 private:
  const json* j_ = nullptr;
  std::string path_;
  Ctx& ctx_;
  std::set<std::string> seen_;
};

const std::set<std::string> kKernelTypes{"constant",  "additive",  "multiplicative", "product",
                                         "power_law", "diffusion", "ballistic",      "transition"};

KernelSpec parse_kernel(const json& j, const std::string& path, Ctx& ctx) {
  KernelSpec k;
  Obj o(j, path, ctx);
  if (!o.ok()) return k;
  if (o.required("type") && o.str("type", k.type) && !kKernelTypes.contains(k.type)) {
    ctx.fail(o.at("type"), "unknown kernel type '" + k.type + "'");
  }
  if (k.type != "product") {
    if (o.num("c0", k.c0) && !(k.c0 >= 0.0)) ctx.fail(o.at("c0"), "must be >= 0");
  }
  if (k.type == "product") {
    if (const json* m = o.find("matrix"); o.required("matrix") && m != nullptr) {
      if (!m->is_array()) {
        ctx.fail(o.at("matrix"), "expected an array of rows");
      } else {
        for (std::size_t i = 0; i < m->size(); ++i) {
          std::vector<double> row;
          o.read_num_list((*m)[i], index(o.at("matrix"), i), row);
          k.matrix.push_back(row);
        }
      }
    }
  }
  if (k.type == "power_law") {
    o.required("gamma_prime");
    o.required("lambda_prime");
    o.num("gamma_prime", k.gamma_prime);
    o.num("lambda_prime", k.lambda_prime);
  }
  if (const json* e = o.find("envelope")) {
    Obj eo(*e, o.at("envelope"), ctx);
    EnvelopeParams env;
    for (auto [key, field] : {std::pair{"beta", &env.beta}, {"gamma1", &env.gamma1}, {"lambda1", &env.lambda1},
                              {"gamma2", &env.gamma2}, {"lambda2", &env.lambda2}, {"c2", &env.c2}}) {
      eo.required(key);
      eo.num(key, *field);
    }
    eo.finish();
    k.envelope = env;
  }
  if (const json* g = o.find("gel")) {
    Obj go(*g, o.at("gel"), ctx);
    GelParams gel;
    for (auto [key, field] :
         {std::pair{"c1", &gel.c1}, {"gamma_gel", &gel.gamma_gel}, {"lambda_gel", &gel.lambda_gel}}) {
      go.required(key);
      go.num(key, *field);
    }
    go.finish();
    k.gel = gel;
  }
  o.finish();
  return k;
}

bool is_integral(double v) { return std::abs(v - std::round(v)) <= 1e-12; }

InitialSpec parse_initial(const json& j, const std::string& path, std::size_t dim, Ctx& ctx) {
  InitialSpec s;
  Obj o(j, path, ctx);
  if (!o.ok()) return s;
  const int kinds = o.has("preset") + o.has("atoms") + o.has("lattice") + o.has("file");
  if (kinds != 1) {
    ctx.fail(path, "exactly one of preset, atoms, lattice or file is required");
    return s;
  }
  if (o.has("preset")) {
    s.kind = InitialSpec::Kind::kPreset;
    o.str("preset", s.preset);
    if (o.num("weight", s.weight) && !(s.weight > 0.0)) ctx.fail(o.at("weight"), "must be > 0");
    if (s.preset == "monodisperse") {
      if (o.num_list("point", s.point)) {
        if (s.point.size() != dim) {
          ctx.fail(o.at("point"), "must have " + std::to_string(dim) + " entries");
        } else {
          try {
            require_positive_composition(Composition::from_span(s.point), "point");
          } catch (const Error& e) {
            ctx.fail(o.at("point"), e.what());
          }
        }
      }
    } else if (s.preset == "bi-species") {
      if (dim != 2) ctx.fail(o.at("preset"), "bi-species needs dim = 2");
    } else {
      ctx.fail(o.at("preset"), "unknown preset '" + s.preset + "' (monodisperse, bi-species)");
    }
  } else if (const json* a = o.find("atoms")) {
    s.kind = InitialSpec::Kind::kAtoms;
    if (!a->is_array() || a->empty()) {
      ctx.fail(o.at("atoms"), "expected a nonempty array");
    } else {
      for (std::size_t i = 0; i < a->size(); ++i) {
        Obj ao((*a)[i], index(o.at("atoms"), i), ctx);
        std::vector<double> x;
        double w = 0.0;
        const bool okx = ao.required("x") && ao.num_list("x", x);
        const bool okw = ao.required("w") && ao.num("w", w);
        ao.finish();
        if (!okx || !okw) continue;
        if (x.size() != dim) {
          ctx.fail(ao.at("x"), "must have " + std::to_string(dim) + " entries");
          continue;
        }
        if (!(w > 0.0)) ctx.fail(ao.at("w"), "must be > 0");
        try {
          require_positive_composition(Composition::from_span(x), "x");
          s.atoms.push_back({Composition::from_span(x), w});
        } catch (const Error& e) {
          ctx.fail(ao.at("x"), e.what());
        }
      }
    }
  } else if (const json* l = o.find("lattice")) {
    s.kind = InitialSpec::Kind::kLattice;
    if (!l->is_array() || l->empty()) {
      ctx.fail(o.at("lattice"), "expected a nonempty array");
    } else {
      for (std::size_t i = 0; i < l->size(); ++i) {
        Obj lo((*l)[i], index(o.at("lattice"), i), ctx);
        std::vector<double> alpha;
        double n = 0.0;
        const bool oka = lo.required("alpha") && lo.num_list("alpha", alpha);
        const bool okn = lo.required("n") && lo.num("n", n);
        lo.finish();
        if (!oka || !okn) continue;
        if (alpha.size() != dim) {
          ctx.fail(lo.at("alpha"), "must have " + std::to_string(dim) + " entries");
          continue;
        }
        LatticePoint p;
        p.dim = dim;
        bool good = true;
        for (std::size_t c = 0; c < dim; ++c) {
          if (!is_integral(alpha[c]) || alpha[c] < 0.0) good = false;
          p.a[c] = static_cast<std::int64_t>(std::llround(alpha[c]));
        }
        if (!good || p.norm() == 0) {
          ctx.fail(lo.at("alpha"), "must be a nonzero multi-index of nonnegative integers");
          continue;
        }
        if (!(n >= 0.0)) ctx.fail(lo.at("n"), "must be >= 0");
        s.lattice.emplace_back(p, n);
      }
    }
  } else {
    s.kind = InitialSpec::Kind::kFile;
    o.str("file", s.file);
    if (s.file.empty()) ctx.fail(o.at("file"), "must not be empty");
  }
  o.finish();
  return s;
}

void parse_window(const json& j, const std::string& path, WindowPolicy& out, Ctx& ctx) {
  if (j.is_string()) {
    if (j.get<std::string>() == "theorem") {
      out = WindowPolicy::theorem();
    } else {
      ctx.fail(path, "expected \"theorem\", {\"fixed\": T} or {\"adaptive\": rate_step}");
    }
    return;
  }
  Obj o(j, path, ctx);
  if (!o.ok()) return;
  double v = 0.0;
  if (o.has("fixed") == o.has("adaptive")) {
    ctx.fail(path, "exactly one of fixed or adaptive is required");
  } else if (o.num("fixed", v)) {
    if (!(v > 0.0)) ctx.fail(o.at("fixed"), "must be > 0");
    out = WindowPolicy::fixed(v);
  } else if (o.num("adaptive", v)) {
    if (!(v > 0.0)) ctx.fail(o.at("adaptive"), "must be > 0");
    out = WindowPolicy::adaptive(v);
  }
  o.finish();
}

void parse_regularized(Obj& o, RegularizedBlock& b, Ctx& ctx) {
  auto& p = b.params;
  if (o.num("eps", p.eps) && !(p.eps > 0.0 && p.eps < 1.0)) ctx.fail(o.at("eps"), "must lie in (0,1)");
  if (o.num("picard_tol", p.picard_tol) && !(p.picard_tol > 0.0)) ctx.fail(o.at("picard_tol"), "must be > 0");
  o.count("max_picard_iters", p.max_picard_iters, 1);
  o.count("steps_per_window", p.steps_per_window, 1);
  o.count("max_particles", p.max_particles, 1);
  if (o.num("weight_floor", p.weight_floor) && !(p.weight_floor >= 0.0)) {
    ctx.fail(o.at("weight_floor"), "must be >= 0");
  }
  if (const json* g = o.find("grid")) {
    Obj go(*g, o.at("grid"), ctx);
    if (go.num("q", p.grid.q) && !(p.grid.q > 1.0)) ctx.fail(go.at("q"), "must be > 1");
    if (go.num("lattice_radius", p.grid.lattice_radius) && !(p.grid.lattice_radius >= 0.0)) {
      ctx.fail(go.at("lattice_radius"), "must be >= 0");
    }
    go.finish();
  }
  if (const json* w = o.find("window")) parse_window(*w, o.at("window"), p.window, ctx);
  if (o.num_list("eps_ladder", b.eps_ladder)) {
    bool good = !b.eps_ladder.empty();
    for (std::size_t i = 0; i < b.eps_ladder.size(); ++i) {
      const double e = b.eps_ladder[i];
      if (!(e > 0.0 && e < 1.0) || (i > 0 && !(e < b.eps_ladder[i - 1]))) good = false;
    }
    if (!good) {
      ctx.fail(o.at("eps_ladder"), "must be a nonempty strictly decreasing list in (0,1)");
    } else if (o.has("eps") && p.eps != b.eps_ladder.back()) {
      ctx.fail(o.at("eps"), "must equal the last eps_ladder entry when both are given");
    } else {
      p.eps = b.eps_ladder.back();
    }
  }
}

void parse_discrete(Obj& o, DiscreteBlock& b, Ctx& ctx) {
  if (o.integer("cap", b.cap) && b.cap < 1) ctx.fail(o.at("cap"), "must be >= 1");
  auto& p = b.params;
  if (o.num("rtol", p.rtol) && !(p.rtol > 0.0 && p.rtol < 1.0)) ctx.fail(o.at("rtol"), "must lie in (0,1)");
  if (o.num("initial_step", p.initial_step) && !(p.initial_step >= 0.0)) {
    ctx.fail(o.at("initial_step"), "must be >= 0");
  }
  o.count("max_steps", p.max_steps, 1);
  if (const json* l = o.find("cap_ladder")) {
    bool good = l->is_array() && !l->empty();
    if (good) {
      for (std::size_t i = 0; i < l->size(); ++i) {
        if (!(*l)[i].is_number_integer() || (*l)[i].get<std::int64_t>() < 1 ||
            (i > 0 && (*l)[i].get<std::int64_t>() <= b.cap_ladder.back())) {
          good = false;
          break;
        }
        b.cap_ladder.push_back((*l)[i].get<std::int64_t>());
      }
    }
    if (!good) {
      ctx.fail(o.at("cap_ladder"), "must be a nonempty strictly increasing list of positive integers");
      b.cap_ladder.clear();
    } else if (o.has("cap") && b.cap != b.cap_ladder.back()) {
      ctx.fail(o.at("cap"), "must equal the last cap_ladder entry when both are given");
    } else {
      b.cap = b.cap_ladder.back();
    }
  }
}

void parse_montecarlo(Obj& o, MonteCarloBlock& b, Ctx&) {
  o.count("n_particles", b.n_particles, 2);
  o.count("replicas", b.replicas, 1);
  o.boolean("check_conservation", b.check_conservation);
}

SolverSpec parse_solver(const json& j, const std::string& path, Ctx& ctx) {
  SolverSpec s;
  Obj o(j, path, ctx);
  if (!o.ok()) return s;
  const int n = o.has("regularized") + o.has("discrete") + o.has("montecarlo");
  if (n != 1) {
    ctx.fail(path, "exactly one of regularized, discrete or montecarlo is required");
    o.find("regularized");
    o.find("discrete");
    o.find("montecarlo");
    o.finish();
    return s;
  }
  if (const json* b = o.find("regularized")) {
    s.kind = SolverSpec::Kind::kRegularized;
    Obj bo(*b, o.at("regularized"), ctx);
    parse_regularized(bo, s.regularized, ctx);
    bo.finish();
  } else if (const json* b = o.find("discrete")) {
    s.kind = SolverSpec::Kind::kDiscrete;
    Obj bo(*b, o.at("discrete"), ctx);
    parse_discrete(bo, s.discrete, ctx);
    bo.finish();
  } else if (const json* b = o.find("montecarlo")) {
    s.kind = SolverSpec::Kind::kMonteCarlo;
    Obj bo(*b, o.at("montecarlo"), ctx);
    parse_montecarlo(bo, s.montecarlo, ctx);
    bo.finish();
  }
  o.finish();
  return s;
}

const std::set<std::string> kDiagnostics{"mass_conservation", "moment_monotonicity", "picard_contraction",
                                         "lattice_support",   "gelation_onset",      "gel_inequality",
                                         "moment_growth",     "localization",        "stochastic_agreement"};

}  // namespace

DiagnosticSpec default_diagnostic(const std::string& name) {
  if (!kDiagnostics.contains(name)) throw ParameterError("unknown diagnostic '" + name + "'");
  DiagnosticSpec d;
  d.name = name;
  if (name == "lattice_support") d.tol = 1e-12;
  if (name == "stochastic_agreement") d.alphas = {0.0};
  return d;
}

namespace {

DiagnosticSpec defaults_for(const std::string& name) {
  if (kDiagnostics.contains(name)) return default_diagnostic(name);
  DiagnosticSpec d;
  d.name = name;
  return d;
}

DiagnosticSpec parse_diagnostic(const json& j, const std::string& path, Ctx& ctx) {
  if (j.is_string()) {
    const std::string name = j.get<std::string>();
    if (!kDiagnostics.contains(name)) ctx.fail(path, "unknown diagnostic '" + name + "'");
    return defaults_for(name);
  }
  Obj o(j, path, ctx);
  if (!o.ok()) return {};
  std::string name;
  if (!o.required("name") || !o.str("name", name)) return o.finish(), DiagnosticSpec{};
  if (!kDiagnostics.contains(name)) {
    ctx.fail(o.at("name"), "unknown diagnostic '" + name + "'");
    return {};
  }
  DiagnosticSpec d = defaults_for(name);
  auto positive = [&](const char* key, double& v) {
    if (o.num(key, v) && !(v > 0.0)) ctx.fail(o.at(key), "must be > 0");
  };
  if (name == "mass_conservation" || name == "lattice_support") positive("tol", d.tol);
  if (name == "moment_monotonicity") {
    o.num_list("alphas", d.alphas);
    if (o.num("r", d.r) && !(d.r >= 0.0)) ctx.fail(o.at("r"), "must be >= 0");
  }
  if (name == "picard_contraction") positive("bound", d.bound);
  if (name == "gelation_onset" && o.num("drop", d.drop) && !(d.drop > 0.0 && d.drop < 1.0)) {
    ctx.fail(o.at("drop"), "must lie in (0,1)");
  }
  if (name == "gel_inequality") {
    if (o.num_list("radii", d.radii)) {
      for (double r : d.radii) {
        if (!(r > 0.0)) ctx.fail(o.at("radii"), "radii must be > 0");
      }
    }
    if (o.num_list("t_starts", d.t_starts)) {
      for (double t : d.t_starts) {
        if (!(t >= 0.0)) ctx.fail(o.at("t_starts"), "start times must be >= 0");
      }
    }
  }
  if (name == "moment_growth" && o.num("k", d.k) && !(d.k > 1.0)) ctx.fail(o.at("k"), "must be > 1");
  if (name == "localization" && o.num("t_min", d.t_min) && !(d.t_min >= 0.0)) {
    ctx.fail(o.at("t_min"), "must be >= 0");
  }
  if (name == "stochastic_agreement") {
    if (o.required("reference")) o.str("reference", d.reference);
    positive("z_max", d.z_max);
    o.num_list("alphas", d.alphas);
  }
  o.finish();
  return d;
}

bool valid_run_name(const std::string& s) {
  if (s.empty() || s == "." || s == "..") return false;
  for (char c : s) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.')) return false;
  }
  return true;
}

RunEntry parse_run(const json& j, const std::string& path, Ctx& ctx) {
  RunEntry r;
  Obj o(j, path, ctx);
  if (!o.ok()) return r;
  if (o.required("name") && o.str("name", r.name) && !valid_run_name(r.name)) {
    ctx.fail(o.at("name"), "must be nonempty and use only letters, digits, '_', '-' or '.'");
  }
  if (o.count("dim", r.dim, 1) && r.dim > kMaxDim) {
    ctx.fail(o.at("dim"), "must be <= " + std::to_string(kMaxDim));
    r.dim = 1;
  }
  if (const json* k = o.find("kernel"); o.required("kernel") && k != nullptr) {
    r.kernel = parse_kernel(*k, o.at("kernel"), ctx);
  }
  if (const json* i = o.find("initial"); o.required("initial") && i != nullptr) {
    r.initial = parse_initial(*i, o.at("initial"), r.dim, ctx);
  }
  if (o.num("horizon", r.horizon) && !(r.horizon > 0.0)) ctx.fail(o.at("horizon"), "must be > 0");
  if (o.num_list("output_times", r.output_times)) {
    for (std::size_t i = 0; i < r.output_times.size(); ++i) {
      const double t = r.output_times[i];
      if (!(t > 0.0 && t <= r.horizon) || (i > 0 && !(t > r.output_times[i - 1]))) {
        ctx.fail(o.at("output_times"), "must be strictly increasing within (0, horizon]");
        break;
      }
    }
  }
  o.num_list("moments", r.moments);
  if (const json* s = o.find("solver"); o.required("solver") && s != nullptr) {
    r.solver = parse_solver(*s, o.at("solver"), ctx);
  }
  if (const json* d = o.find("diagnostics")) {
    if (!d->is_array()) {
      ctx.fail(o.at("diagnostics"), "expected an array");
    } else {
      for (std::size_t i = 0; i < d->size(); ++i) {
        r.diagnostics.push_back(parse_diagnostic((*d)[i], index(o.at("diagnostics"), i), ctx));
      }
    }
  }
  o.finish();

  // Cross-field checks.
  const std::size_t before = ctx.errors.size();
  std::optional<Kernel> kernel;
  try {
    kernel = r.kernel.build();
  } catch (const Error& e) {
    ctx.fail(o.at("kernel"), e.what());
  }
  if (kernel && r.kernel.type == "product" && r.kernel.matrix.size() != r.dim) {
    ctx.fail(join(o.at("kernel"), "matrix"), "must be dim x dim");
  }
  if (kernel && r.solver.kind == SolverSpec::Kind::kRegularized && !kernel->envelope().strict()) {
    ctx.warnings.push_back(o.at("kernel") +
                           ": gamma_j + lambda_j = 1 for some regime; the existence guarantee for the "
                           "regularized scheme needs a strict inequality, running anyway");
  }
  if (r.solver.kind == SolverSpec::Kind::kDiscrete && ctx.errors.size() == before) {
    const bool lattice_like =
        r.initial.kind == InitialSpec::Kind::kLattice || r.initial.kind == InitialSpec::Kind::kFile ||
        (r.initial.kind == InitialSpec::Kind::kPreset && r.initial.preset == "bi-species") ||
        (r.initial.kind == InitialSpec::Kind::kPreset &&
         std::all_of(r.initial.point.begin(), r.initial.point.end(), is_integral)) ||
        (r.initial.kind == InitialSpec::Kind::kAtoms &&
         std::all_of(r.initial.atoms.begin(), r.initial.atoms.end(), [](const Particle& p) {
           return std::all_of(p.x.values().begin(), p.x.values().end(), is_integral);
         }));
    if (!lattice_like) ctx.fail(o.at("initial"), "discrete solver needs initial data on integer points");
  }
  for (std::size_t i = 0; i < r.diagnostics.size(); ++i) {
    const auto& d = r.diagnostics[i];
    const std::string dp = index(o.at("diagnostics"), i);
    if (d.name == "gelation_onset") {
      const std::size_t levels = r.solver.kind == SolverSpec::Kind::kDiscrete
                                     ? r.solver.discrete.cap_ladder.size()
                                     : (r.solver.kind == SolverSpec::Kind::kRegularized
                                            ? r.solver.regularized.eps_ladder.size()
                                            : 0);
      if (levels < 2) ctx.fail(dp, "gelation_onset needs a cap_ladder or eps_ladder with at least two levels");
    }
    if (d.name == "stochastic_agreement" && r.solver.kind != SolverSpec::Kind::kMonteCarlo) {
      ctx.fail(dp, "stochastic_agreement applies to montecarlo runs only");
    }
  }
  return r;
}

}  // namespace

ParseResult parse_config(const json& doc) {
  Ctx ctx;
  ParseResult out;
  Obj o(doc, "", ctx);
  if (o.ok()) {
    o.str("output_dir", out.config.output_dir);
    if (out.config.output_dir.empty()) ctx.fail("output_dir", "must not be empty");
    o.unsigned_int("seed", out.config.seed);
    if (const json* runs = o.find("runs"); o.required("runs") && runs != nullptr) {
      if (!runs->is_array() || runs->empty()) {
        ctx.fail("runs", "expected a nonempty array of run entries");
      } else {
        for (std::size_t i = 0; i < runs->size(); ++i) {
          out.config.runs.push_back(parse_run((*runs)[i], index("runs", i), ctx));
        }
      }
    }
    o.finish();
  }
  std::set<std::string> names;
  std::set<std::string> deterministic;
  for (std::size_t i = 0; i < out.config.runs.size(); ++i) {
    const auto& r = out.config.runs[i];
    if (!names.insert(r.name).second) ctx.fail(index("runs", i) + ".name", "duplicate run name '" + r.name + "'");
    for (std::size_t k = 0; k < r.diagnostics.size(); ++k) {
      const auto& d = r.diagnostics[k];
      if (d.name == "stochastic_agreement" && !deterministic.contains(d.reference)) {
        ctx.fail(index(index("runs", i) + ".diagnostics", k) + ".reference",
                 "must name an earlier regularized or discrete run");
      }
    }
    if (r.solver.kind != SolverSpec::Kind::kMonteCarlo) deterministic.insert(r.name);
  }
  if (!ctx.errors.empty()) throw ConfigError(std::move(ctx.errors));
  out.warnings = std::move(ctx.warnings);
  return out;
}

ParseResult parse_config(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError({{"<root>", std::string("malformed JSON: ") + e.what()}});
  }
  return parse_config(doc);
}

ParseResult load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  auto res = parse_config(buf.str());
  res.config.base_dir = path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path();
  return res;
}

namespace {

json serialize_kernel(const KernelSpec& k) {
  json j{{"type", k.type}};
  if (k.type == "product") {
    j["matrix"] = k.matrix;
  } else {
    j["c0"] = k.c0;
  }
  if (k.type == "power_law") {
    j["gamma_prime"] = k.gamma_prime;
    j["lambda_prime"] = k.lambda_prime;
  }
  if (k.envelope) {
    const auto& e = *k.envelope;
    j["envelope"] = {{"beta", e.beta},       {"gamma1", e.gamma1},   {"lambda1", e.lambda1},
                     {"gamma2", e.gamma2},   {"lambda2", e.lambda2}, {"c2", e.c2}};
  }
  if (k.gel) j["gel"] = {{"c1", k.gel->c1}, {"gamma_gel", k.gel->gamma_gel}, {"lambda_gel", k.gel->lambda_gel}};
  return j;
}

json serialize_initial(const InitialSpec& s) {
  switch (s.kind) {
    case InitialSpec::Kind::kPreset: {
      json j{{"preset", s.preset}, {"weight", s.weight}};
      if (!s.point.empty()) j["point"] = s.point;
      return j;
    }
    case InitialSpec::Kind::kAtoms: {
      json atoms = json::array();
      for (const auto& p : s.atoms) {
        atoms.push_back({{"x", std::vector<double>(p.x.values().begin(), p.x.values().end())}, {"w", p.w}});
      }
      return {{"atoms", atoms}};
    }
    case InitialSpec::Kind::kLattice: {
      json entries = json::array();
      for (const auto& [alpha, n] : s.lattice) {
        entries.push_back({{"alpha", std::vector<std::int64_t>(alpha.a.begin(), alpha.a.begin() + alpha.dim)},
                           {"n", n}});
      }
      return {{"lattice", entries}};
    }
    case InitialSpec::Kind::kFile:
      return {{"file", s.file}};
  }
  return {};
}

json serialize_window(const WindowPolicy& w) {
  switch (w.kind) {
    case WindowPolicy::Kind::kTheorem:
      return "theorem";
    case WindowPolicy::Kind::kFixed:
      return {{"fixed", w.fixed_length}};
    case WindowPolicy::Kind::kAdaptive:
      return {{"adaptive", w.rate_step}};
  }
  return {};
}

json serialize_solver(const SolverSpec& s) {
  switch (s.kind) {
    case SolverSpec::Kind::kRegularized: {
      const auto& p = s.regularized.params;
      json b{{"eps", p.eps},
             {"picard_tol", p.picard_tol},
             {"max_picard_iters", p.max_picard_iters},
             {"steps_per_window", p.steps_per_window},
             {"max_particles", p.max_particles},
             {"weight_floor", p.weight_floor},
             {"grid", {{"q", p.grid.q}, {"lattice_radius", p.grid.lattice_radius}}},
             {"window", serialize_window(p.window)}};
      if (!s.regularized.eps_ladder.empty()) b["eps_ladder"] = s.regularized.eps_ladder;
      return {{"regularized", b}};
    }
    case SolverSpec::Kind::kDiscrete: {
      const auto& p = s.discrete.params;
      json b{{"cap", s.discrete.cap},
             {"rtol", p.rtol},
             {"initial_step", p.initial_step},
             {"max_steps", p.max_steps}};
      if (!s.discrete.cap_ladder.empty()) b["cap_ladder"] = s.discrete.cap_ladder;
      return {{"discrete", b}};
    }
    case SolverSpec::Kind::kMonteCarlo:
      return {{"montecarlo",
               {{"n_particles", s.montecarlo.n_particles},
                {"replicas", s.montecarlo.replicas},
                {"check_conservation", s.montecarlo.check_conservation}}}};
  }
  return {};
}

json serialize_diagnostic(const DiagnosticSpec& d) {
  json j{{"name", d.name}};
  const auto& n = d.name;
  if (n == "mass_conservation" || n == "lattice_support") j["tol"] = d.tol;
  if (n == "moment_monotonicity") {
    j["alphas"] = d.alphas;
    j["r"] = d.r;
  }
  if (n == "picard_contraction") j["bound"] = d.bound;
  if (n == "gelation_onset") j["drop"] = d.drop;
  if (n == "gel_inequality") {
    j["radii"] = d.radii;
    j["t_starts"] = d.t_starts;
  }
  if (n == "moment_growth") j["k"] = d.k;
  if (n == "localization") j["t_min"] = d.t_min;
  if (n == "stochastic_agreement") {
    j["reference"] = d.reference;
    j["z_max"] = d.z_max;
    j["alphas"] = d.alphas;
  }
  return j;
}

}  // namespace

json serialize(const RunEntry& r) {
  json diags = json::array();
  for (const auto& d : r.diagnostics) diags.push_back(serialize_diagnostic(d));
  return {{"name", r.name},
          {"dim", r.dim},
          {"kernel", serialize_kernel(r.kernel)},
          {"initial", serialize_initial(r.initial)},
          {"horizon", r.horizon},
          {"output_times", r.output_times},
          {"moments", r.moments},
          {"solver", serialize_solver(r.solver)},
          {"diagnostics", diags}};
}

json serialize(const RunConfig& c) {
  json runs = json::array();
  for (const auto& r : c.runs) runs.push_back(serialize(r));
  return {{"output_dir", c.output_dir}, {"seed", c.seed}, {"runs", runs}};
}

bool operator==(const RunConfig& a, const RunConfig& b) { return serialize(a) == serialize(b); }

}  // namespace coagsim

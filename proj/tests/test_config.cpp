#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

#include "coagsim/config.hpp"

using namespace coagsim;
using nlohmann::json;

namespace {

json minimal() {
  return json::parse(R"({
    "runs": [{
      "name": "a",
      "kernel": {"type": "constant", "c0": 2.0},
      "initial": {"preset": "monodisperse"},
      "horizon": 0.5,
      "solver": {"regularized": {"eps": 0.01}}
    }]
  })");
}

/// Paths of every field error reported for `doc`; empty when it parses.
std::vector<std::string> error_paths(const json& doc) {
  try {
    parse_config(doc);
  } catch (const ConfigError& e) {
    std::vector<std::string> out;
    for (const auto& f : e.errors()) out.push_back(f.path + ": " + f.message);
    return out;
  }
  return {};
}

bool mentions(const std::vector<std::string>& errors, const std::string& needle) {
  for (const auto& e : errors) {
    if (e.find(needle) != std::string::npos) return true;
  }
  return false;
}

}  // namespace

TEST_CASE("minimal config takes defaults") {
  const auto r = parse_config(minimal());
  REQUIRE(r.config.runs.size() == 1);
  const auto& e = r.config.runs[0];
  CHECK(r.config.output_dir == "out");
  CHECK(e.dim == 1);
  CHECK(e.solver.kind == SolverSpec::Kind::kRegularized);
  CHECK(e.solver.regularized.params.eps == 0.01);
  CHECK(e.moments == std::vector<double>{0.0, 1.0, 2.0});
  CHECK(e.kernel.build()(Composition{1.0}, Composition{3.0}) == 2.0);
  CHECK(r.warnings.empty());
}

TEST_CASE("eps outside (0,1) is reported with its path") {
  auto doc = minimal();
  doc["runs"][0]["solver"]["regularized"]["eps"] = 1.5;
  const auto errs = error_paths(doc);
  REQUIRE(errs.size() == 1);
  CHECK(errs[0] == "runs[0].solver.regularized.eps: must lie in (0,1)");
  doc["runs"][0]["solver"]["regularized"]["eps"] = 0.0;
  CHECK(mentions(error_paths(doc), "runs[0].solver.regularized.eps"));
}

TEST_CASE("all errors are collected at once") {
  auto doc = minimal();
  doc["runs"][0]["solver"]["regularized"]["eps"] = -1;
  doc["runs"][0]["horizon"] = -2;
  doc["runs"][0]["bogus"] = true;
  const auto errs = error_paths(doc);
  CHECK(errs.size() >= 3);
  CHECK(mentions(errs, "runs[0].bogus"));
  CHECK(mentions(errs, "runs[0].horizon"));
}

TEST_CASE("unknown keys and type mismatches") {
  auto doc = minimal();
  doc["extra"] = 1;
  CHECK(mentions(error_paths(doc), "extra"));
  doc = minimal();
  doc["runs"][0]["kernel"]["c0"] = "two";
  CHECK(mentions(error_paths(doc), "runs[0].kernel.c0"));
  doc = minimal();
  doc["runs"][0]["kernel"]["type"] = "warp";
  CHECK(mentions(error_paths(doc), "runs[0].kernel"));
  CHECK_THROWS_AS(parse_config(std::string("{ not json")), ConfigError);
}

TEST_CASE("non-strict envelope with the regularized solver gives a warning") {
  auto doc = minimal();
  doc["runs"][0]["kernel"] = {{"type", "additive"}};
  const auto r = parse_config(doc);
  REQUIRE(r.warnings.size() == 1);
  CHECK(r.warnings[0].find("runs[0].kernel") == 0);
  doc["runs"][0]["solver"] = {{"discrete", {{"cap", 64}}}};
  CHECK(parse_config(doc).warnings.empty());
}

TEST_CASE("cross-field checks") {
  auto doc = minimal();
  doc["runs"][0]["solver"] = {{"discrete", {{"cap", 64}}}};
  doc["runs"][0]["initial"] = {{"atoms", {{{"x", {1.5}}, {"w", 1.0}}}}};
  CHECK(mentions(error_paths(doc), "integer points"));

  doc = minimal();
  doc["runs"][0]["diagnostics"] = {"gelation_onset"};
  CHECK(mentions(error_paths(doc), "gelation_onset needs"));
  doc["runs"][0]["solver"]["regularized"] = {{"eps_ladder", {0.1, 0.01}}};
  CHECK(error_paths(doc).empty());

  doc = minimal();
  doc["runs"].push_back(doc["runs"][0]);
  CHECK(mentions(error_paths(doc), "duplicate run name"));

  doc = minimal();
  doc["runs"][0]["solver"] = {{"montecarlo", {{"n_particles", 100}}}};
  doc["runs"][0]["diagnostics"] = {{{"name", "stochastic_agreement"}, {"reference", "missing"}}};
  CHECK_FALSE(error_paths(doc).empty());
}

TEST_CASE("window policy syntax") {
  auto doc = minimal();
  auto& reg = doc["runs"][0]["solver"]["regularized"];
  reg["window"] = "theorem";
  CHECK(parse_config(doc).config.runs[0].solver.regularized.params.window == WindowPolicy::theorem());
  reg["window"] = {{"fixed", 0.1}};
  CHECK(parse_config(doc).config.runs[0].solver.regularized.params.window == WindowPolicy::fixed(0.1));
  reg["window"] = {{"adaptive", 1e-3}};
  CHECK(parse_config(doc).config.runs[0].solver.regularized.params.window == WindowPolicy::adaptive(1e-3));
  reg["window"] = {{"fixed", 0.1}, {"adaptive", 1e-3}};
  CHECK_FALSE(error_paths(doc).empty());
}

TEST_CASE("serialize and parse round trip") {
  auto doc = minimal();
  doc["seed"] = 17;
  doc["runs"][0]["diagnostics"] = {"mass_conservation", {{"name", "moment_monotonicity"}, {"alphas", {0.0, 1.0}}}};
  doc["runs"][0]["solver"]["regularized"]["grid"] = {{"q", 1.5}, {"lattice_radius", 8}};
  const auto a = parse_config(doc).config;
  const auto b = parse_config(serialize(a)).config;
  CHECK(a == b);
  CHECK(serialize(a) == serialize(b));
  CHECK(b.seed == 17);
  CHECK(b.runs[0].diagnostics[1].alphas == std::vector<double>{0.0, 1.0});
}

TEST_CASE("initial data presets") {
  InitialSpec s;
  s.preset = "bi-species";
  s.weight = 2.0;
  const auto f = s.build(2, ".");
  REQUIRE(f.size() == 2);
  CHECK(mass_vector(f)[0] == 1.0);
  CHECK(mass_vector(f)[1] == 1.0);
  CHECK_THROWS(s.build(1, "."));
  InitialSpec m;
  const auto g = m.build(3, ".");
  CHECK(g.particles()[0].x == Composition{1.0, 0.0, 0.0});
}

TEST_CASE("initial data from a state file") {
  const auto dir = std::filesystem::temp_directory_path() / "coagsim_config_test";
  std::filesystem::create_directories(dir);
  {
    std::ofstream os(dir / "init.csv");
    os << "# t=0 d=1\nx1,w\n1,0.5\n2,0.25\n";
  }
  auto doc = minimal();
  doc["runs"][0]["initial"] = {{"file", "init.csv"}};
  {
    std::ofstream os(dir / "cfg.json");
    os << doc.dump();
  }
  const auto r = load_config(dir / "cfg.json");
  const auto f = r.config.runs[0].initial.build(1, r.config.base_dir);
  CHECK(moment(f, 1.0) == 1.0);
  std::filesystem::remove_all(dir);
}

TEST_CASE("shipped example configs parse and round trip") {
  const std::filesystem::path dir = std::filesystem::path(COAGSIM_SOURCE_DIR) / "configs";
  std::size_t seen = 0;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.path().extension() != ".json") continue;
    CAPTURE(e.path().string());
    const auto r = load_config(e.path());
    CHECK_FALSE(r.config.runs.empty());
    CHECK(parse_config(serialize(r.config)).config == r.config);
    ++seen;
  }
  CHECK(seen >= 1);
}

TEST_CASE("default diagnostics") {
  CHECK(default_diagnostic("lattice_support").tol == 1e-12);
  CHECK(default_diagnostic("stochastic_agreement").alphas == std::vector<double>{0.0});
  CHECK(default_diagnostic("mass_conservation").tol == 1e-6);
  CHECK_THROWS(default_diagnostic("nope"));
}

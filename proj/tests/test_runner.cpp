#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>

#include <nlohmann/json.hpp>

#include "coagsim/pair_kernels.hpp"
#include "coagsim/plots.hpp"
#include "coagsim/runner.hpp"

namespace fs = std::filesystem;
using namespace coagsim;
using nlohmann::json;

namespace {

/// Fresh scratch directory per test case.
struct Scratch {
  fs::path dir;
  explicit Scratch(const std::string& name) : dir(fs::temp_directory_path() / ("coagsim_runner_" + name)) {
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Scratch() { fs::remove_all(dir); }
};

json small_config(const fs::path& out) {
  json doc = json::parse(R"({
    "seed": 5,
    "runs": [
      {
        "name": "disc",
        "kernel": {"type": "constant", "c0": 2.0},
        "initial": {"preset": "monodisperse"},
        "horizon": 0.5,
        "output_times": [0.25],
        "solver": {"discrete": {"cap": 64}},
        "diagnostics": ["mass_conservation", "moment_monotonicity", "lattice_support"]
      },
      {
        "name": "reg",
        "kernel": {"type": "constant", "c0": 2.0},
        "initial": {"preset": "monodisperse"},
        "horizon": 0.25,
        "solver": {"regularized": {"eps": 0.01, "steps_per_window": 16,
                                   "grid": {"lattice_radius": 16}, "window": {"fixed": 0.125}}},
        "diagnostics": ["picard_contraction", "lattice_support"]
      },
      {
        "name": "ml",
        "kernel": {"type": "constant", "c0": 2.0},
        "initial": {"preset": "monodisperse"},
        "horizon": 0.5,
        "output_times": [0.25],
        "solver": {"montecarlo": {"n_particles": 4000, "replicas": 4}},
        "diagnostics": [{"name": "stochastic_agreement", "reference": "disc", "alphas": [0]}]
      }
    ]
  })");
  doc["output_dir"] = out.string();
  return doc;
}

fs::path write_json(const fs::path& path, const json& doc) {
  std::ofstream(path) << doc.dump(2);
  return path;
}

int cli(const std::string& args) {
  const std::string cmd = std::string(COAGSIM_CLI_PATH) + " --threads 1 " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("sha256 of known strings") {
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST_CASE("exit code policy") {
  RunStatus ok;
  Certificate pass;
  pass.verdict = Verdict::kPass;
  Certificate na;
  na.verdict = Verdict::kInapplicable;
  ok.certificates = {pass, na};
  CHECK(exit_code_for({ok}) == 0);
  RunStatus failed = ok;
  failed.certificates.back().verdict = Verdict::kFail;
  CHECK(exit_code_for({ok, failed}) == 2);
  RunStatus broken;
  broken.ok = false;
  CHECK(exit_code_for({failed, broken}) == 1);
}

TEST_CASE("run writes artifacts and a manifest with matching hashes") {
  Scratch s("artifacts");
  set_worker_count(1);
  std::ostringstream log;
  const auto out = run(parse_config(small_config(s.dir / "out")), log);
  CHECK(out.exit_code == 0);
  REQUIRE(out.runs.size() == 3);
  for (const char* f : {"disc/moments.csv", "disc/run.json", "disc/certificates.json", "disc/states/state_0000.csv",
                        "reg/windows.csv", "ml/replicas.csv", "ml/zscores.csv", "disc/moments.svg", "manifest.json"}) {
    CAPTURE(f);
    CHECK(fs::exists(s.dir / "out" / f));
  }
  const json manifest = json::parse(slurp(s.dir / "out" / "manifest.json"));
  CHECK(manifest["exit_code"] == 0);
  REQUIRE(manifest["artifacts"].size() > 5);
  for (const auto& a : manifest["artifacts"]) {
    const fs::path p = s.dir / "out" / a["path"].get<std::string>();
    CAPTURE(p.string());
    CHECK(sha256_file(p) == a["sha256"].get<std::string>());
    CHECK(fs::file_size(p) == a["bytes"].get<std::uintmax_t>());
  }
  const json certs = json::parse(slurp(s.dir / "out" / "disc" / "certificates.json"));
  CHECK(certs.size() >= 5);
}

TEST_CASE("runs are byte-reproducible") {
  Scratch s("repro");
  set_worker_count(1);
  std::ostringstream log;
  run(parse_config(small_config(s.dir / "a")), log);
  run(parse_config(small_config(s.dir / "b")), log);
  std::size_t compared = 0;
  for (const auto& e : fs::recursive_directory_iterator(s.dir / "a")) {
    const auto ext = e.path().extension();
    if (!e.is_regular_file() || (ext != ".csv" && ext != ".svg")) continue;
    CAPTURE(e.path().string());
    CHECK(slurp(e.path()) == slurp(s.dir / "b" / fs::relative(e.path(), s.dir / "a")));
    ++compared;
  }
  CHECK(compared > 10);
}

TEST_CASE("inapplicable certificates on a gelling kernel do not fail the run") {
  Scratch s("gelling");
  json doc = json::parse(R"({
    "runs": [{
      "name": "pl",
      "kernel": {"type": "power_law", "c0": 0.5, "gamma_prime": 1.5, "lambda_prime": -0.75},
      "initial": {"preset": "monodisperse"},
      "horizon": 0.5,
      "solver": {"discrete": {"cap": 32}},
      "diagnostics": ["mass_conservation"]
    }]
  })");
  doc["output_dir"] = (s.dir / "out").string();
  std::ostringstream log;
  const auto out = run(parse_config(doc), log);
  REQUIRE(out.runs.size() == 1);
  REQUIRE(out.runs[0].certificates.size() == 1);
  CHECK(out.runs[0].certificates[0].verdict == Verdict::kInapplicable);
  CHECK(out.exit_code == 0);
}

TEST_CASE("CLI exit codes") {
  Scratch s("cli");
  const auto good = write_json(s.dir / "good.json", small_config(s.dir / "out"));
  CHECK(cli("run " + good.string()) == 0);
  CHECK(cli("diagnose " + (s.dir / "out").string()) == 0);
  CHECK(cli("diagnose " + (s.dir / "out" / "disc").string() + " --certs mass_conservation") == 0);
  CHECK(cli("plot " + (s.dir / "out").string()) == 0);

  // A certificate that cannot pass: contraction bound 0.
  json strict = small_config(s.dir / "out2");
  strict["runs"][1]["diagnostics"] = {{{"name", "picard_contraction"}, {"bound", 1e-12}}};
  CHECK(cli("run " + write_json(s.dir / "strict.json", strict).string()) == 2);

  // Invalid config values and unreadable input.
  json bad = small_config(s.dir / "out3");
  bad["runs"][1]["solver"]["regularized"]["eps"] = 2.0;
  CHECK(cli("run " + write_json(s.dir / "bad.json", bad).string()) == 1);
  std::ofstream(s.dir / "corrupt.json") << "{\"runs\": [";
  CHECK(cli("run " + (s.dir / "corrupt.json").string()) == 1);
  CHECK(cli("run " + (s.dir / "missing.json").string()) == 1);

  // A corrupted state file makes diagnose an execution error.
  std::ofstream(s.dir / "out" / "disc" / "states" / "state_0001.csv") << "# t=0.25 d=1\nalpha_1,n\n1,garbage\n";
  CHECK(cli("diagnose " + (s.dir / "out" / "disc").string()) == 1);
}

TEST_CASE("CLI kernel audit, Monte Carlo and sweep") {
  Scratch s("cli2");
  const auto cfg = write_json(s.dir / "cfg.json", small_config(s.dir / "out"));
  CHECK(cli("validate-kernel " + cfg.string() + " --samples 5000") == 0);

  json liar = small_config(s.dir / "out");
  liar["runs"][0]["kernel"] = {{"type", "additive"}, {"envelope", {{"beta", 0}, {"gamma1", 0.5}, {"lambda1", 0},
                                                                   {"gamma2", 0.5}, {"lambda2", 0}, {"c2", 1}}}};
  CHECK(cli("validate-kernel " + write_json(s.dir / "liar.json", liar).string() + " --samples 5000") == 2);

  CHECK(cli("mc " + cfg.string() + " --particles 2000 --replicas 2 --check-conservation") == 0);
  CHECK(fs::exists(s.dir / "out" / "mc" / "disc" / "moments.csv"));

  CHECK(cli("sweep " + cfg.string() + " --param runs[0].solver.discrete.cap --values 32 48") == 0);
  CHECK(fs::exists(s.dir / "out" / "sweep.json"));
  CHECK(fs::exists(s.dir / "out" / "sweep_1" / "disc" / "moments.csv"));
}

TEST_CASE("SVG charts are deterministic and skip bad points") {
  const std::vector<Series> series{{"M0", {0, 1, 2, 3}, {1, 0.5, 0.0, 0.25}}};
  std::ostringstream a;
  std::ostringstream b;
  write_line_chart(a, {"moments", "t", "M", true}, series);
  write_line_chart(b, {"moments", "t", "M", true}, series);
  CHECK(a.str() == b.str());
  CHECK(a.str().rfind("<svg", 0) == 0);
  CHECK(a.str().find("M0") != std::string::npos);
}

TEST_CASE("CSV table reader") {
  Scratch s("csv");
  std::ofstream(s.dir / "t.csv") << "# comment\nt,M0\n0,1\n1,0.5\n";
  const auto t = read_csv_table(s.dir / "t.csv");
  CHECK(t.column("M0") == 1);
  CHECK(t.column("nope") == -1);
  CHECK(t.values(1) == std::vector<double>{1.0, 0.5});
  std::ofstream(s.dir / "bad.csv") << "t\nx\n";
  CHECK_THROWS_AS(read_csv_table(s.dir / "bad.csv"), IoError);
  CHECK_THROWS_AS(read_csv_table(s.dir / "absent.csv"), IoError);
}

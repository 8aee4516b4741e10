#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "coagsim/config.hpp"
#include "coagsim/pair_kernels.hpp"
#include "coagsim/plots.hpp"
#include "coagsim/runner.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace coagsim;

namespace {

void apply_thread_cap(int cli_threads) {
  int n = cli_threads;
  if (n <= 0) {
    if (const char* env = std::getenv("COAGSIM_THREADS")) {
      try {
        n = std::stoi(env);
      } catch (const std::exception&) {
        throw ParameterError(std::string("COAGSIM_THREADS must be an integer, got '") + env + "'");
      }
    }
  }
  if (n > 0) set_worker_count(n);
}

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError({{"<root>", std::string("malformed JSON: ") + e.what()}});
  }
}

ParseResult parse_doc(const json& doc, const fs::path& config_path) {
  auto res = parse_config(doc);
  res.config.base_dir = config_path.parent_path().empty() ? fs::path(".") : config_path.parent_path();
  return res;
}

/// "runs[0].solver.discrete.cap" or "/runs/0/solver/discrete/cap" as a JSON pointer.
json::json_pointer to_pointer(const std::string& path) {
  if (!path.empty() && path[0] == '/') return json::json_pointer(path);
  std::string ptr;
  std::string token;
  auto flush = [&] {
    if (!token.empty()) ptr += "/" + token;
    token.clear();
  };
  for (char c : path) {
    if (c == '.' || c == '[') {
      flush();
    } else if (c == ']') {
      flush();
    } else {
      token += c;
    }
  }
  flush();
  return json::json_pointer(ptr);
}

json parse_value(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error&) {
    return text;
  }
}

int worst(int a, int b) {
  if (a == 1 || b == 1) return 1;
  return std::max(a, b);
}

int cmd_run(const std::string& config, const std::string& out_dir) {
  const fs::path path(config);
  json doc = read_json_file(path);
  if (!out_dir.empty()) doc["output_dir"] = out_dir;
  const auto parsed = parse_doc(doc, path);
  const auto outcome = run(parsed, std::cout);
  std::cout << "manifest: " << (fs::path(parsed.config.output_dir) / "manifest.json").string() << "\n"
            << "exit status " << outcome.exit_code << "\n";
  return outcome.exit_code;
}

int cmd_validate_kernel(const std::string& config, std::size_t samples, std::uint64_t seed) {
  const auto parsed = load_config(config);
  json report = json::array();
  int code = 0;
  for (const auto& entry : parsed.config.runs) {
    const Kernel k = entry.kernel.build();
    const auto cls = classify(k);
    const auto b = validate_envelope(k, log_pair_sampler(entry.dim, seed), samples);
    const auto& e = k.envelope();
    json r{{"run", entry.name},
           {"kernel", k.name()},
           {"envelope",
            {{"beta", e.beta}, {"gamma1", e.gamma1}, {"lambda1", e.lambda1}, {"gamma2", e.gamma2},
             {"lambda2", e.lambda2}, {"c2", e.c2}}},
           {"classification", to_string(cls.verdict)},
           {"existence_regime", cls.existence},
           {"samples", b.n_samples},
           {"max_upper_ratio", b.max_upper_ratio},
           {"max_ratio_by_regime",
            {{"small-small", b.max_ratio_by_regime[0]},
             {"large-small", b.max_ratio_by_regime[1]},
             {"large-large", b.max_ratio_by_regime[2]}}},
           {"worst_regime", to_string(b.worst_regime)},
           {"upper_pass", b.upper_pass},
           {"lower_pass", b.lower_pass}};
    if (b.min_lower_ratio) r["min_lower_ratio"] = *b.min_lower_ratio;
    if (!b.pass()) code = 2;
    report.push_back(r);
  }
  std::cout << report.dump(2) << "\n";
  return code;
}

int cmd_diagnose(const std::string& dir, const std::vector<std::string>& certs) {
  const auto outcome = diagnose(dir, certs, std::cout);
  std::cout << "exit status " << outcome.exit_code << "\n";
  return outcome.exit_code;
}

int cmd_mc(const std::string& config, std::size_t particles, std::size_t replicas, bool check) {
  const fs::path path(config);
  json doc = read_json_file(path);
  if (doc.is_object() && doc.contains("runs") && doc["runs"].is_array()) {
    for (auto& r : doc["runs"]) {
      if (!r.is_object()) continue;
      json block = json::object();
      if (r.contains("solver") && r["solver"].is_object() && r["solver"].contains("montecarlo")) {
        block = r["solver"]["montecarlo"];
      }
      if (particles > 0) block["n_particles"] = particles;
      if (replicas > 0) block["replicas"] = replicas;
      if (check) block["check_conservation"] = true;
      r["solver"] = {{"montecarlo", block}};
      if (r.contains("diagnostics") && r["diagnostics"].is_array()) {
        json kept = json::array();
        for (const auto& d : r["diagnostics"]) {
          const std::string name = d.is_string() ? d.get<std::string>() : d.value("name", "");
          if (name != "gelation_onset" && name != "stochastic_agreement" && name != "picard_contraction") {
            kept.push_back(d);
          }
        }
        r["diagnostics"] = kept;
      }
    }
    doc["output_dir"] = (fs::path(doc.value("output_dir", std::string("out"))) / "mc").string();
  }
  const auto parsed = parse_doc(doc, path);
  const auto outcome = run(parsed, std::cout);
  std::cout << "exit status " << outcome.exit_code << "\n";
  return outcome.exit_code;
}

int cmd_sweep(const std::string& config, const std::string& param, const std::vector<std::string>& values) {
  const fs::path path(config);
  const json base = read_json_file(path);
  const auto ptr = to_pointer(param);
  const fs::path root = base.is_object() ? base.value("output_dir", std::string("out")) : std::string("out");
  json summary = json::array();
  int code = 0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    json doc = base;
    if (!doc.contains(ptr.parent_pointer())) throw ConfigError({{param, "parent of the swept path does not exist"}});
    doc[ptr] = parse_value(values[i]);
    std::ostringstream sub;
    sub << "sweep_" << i;
    doc["output_dir"] = (root / sub.str()).string();
    std::cout << "== " << param << " = " << doc[ptr].dump() << "\n";
    int rc = 1;
    try {
      rc = run(parse_doc(doc, path), std::cout).exit_code;
    } catch (const ConfigError& e) {
      std::cerr << e.what() << "\n";
    }
    summary.push_back({{"value", doc[ptr]}, {"output_dir", doc["output_dir"]}, {"exit_code", rc}});
    code = worst(code, rc);
  }
  fs::create_directories(root);
  std::ofstream(root / "sweep.json") << json{{"param", param}, {"runs", summary}}.dump(2) << "\n";
  std::cout << "exit status " << code << "\n";
  return code;
}

int cmd_plot(const std::string& dir) {
  std::vector<std::string> notes;
  std::vector<fs::path> dirs;
  if (fs::exists(fs::path(dir) / "moments.csv") || fs::exists(fs::path(dir) / "run.json")) {
    dirs.push_back(dir);
  } else {
    for (const auto& e : fs::directory_iterator(dir)) {
      if (e.is_directory()) dirs.push_back(e.path());
    }
    std::sort(dirs.begin(), dirs.end());
  }
  for (const auto& d : dirs) {
    for (const auto& f : emit_plots(d, notes)) std::cout << (d / f).string() << "\n";
  }
  for (const auto& n : notes) std::cout << "note: " << n << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"coagsim: coagulation solvers, stochastic cross-checks and numerical certificates"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "Worker cap (overrides COAGSIM_THREADS)");

  std::string config;
  std::string out_dir;
  auto* run_cmd = app.add_subcommand("run", "Run every entry of a config and evaluate its certificates");
  run_cmd->add_option("config", config, "JSON config")->required();
  run_cmd->add_option("--out", out_dir, "Override output_dir");

  std::size_t samples = 200000;
  std::uint64_t seed = 1;
  auto* vk_cmd = app.add_subcommand("validate-kernel", "Audit kernels against their declared envelopes");
  vk_cmd->add_option("config", config, "JSON config")->required();
  vk_cmd->add_option("--samples", samples, "Sample pairs per kernel");
  vk_cmd->add_option("--seed", seed, "Sampler seed");

  std::string dir;
  std::vector<std::string> certs;
  auto* diag_cmd = app.add_subcommand("diagnose", "Recompute certificates from a run directory");
  diag_cmd->add_option("dir", dir, "Run directory or output root")->required();
  diag_cmd->add_option("--certs", certs, "Certificate names to evaluate")->delimiter(',');

  std::size_t particles = 0;
  std::size_t replicas = 0;
  bool check = false;
  auto* mc_cmd = app.add_subcommand("mc", "Run every entry with the Marcus-Lushnikov oracle");
  mc_cmd->add_option("config", config, "JSON config")->required();
  mc_cmd->add_option("--particles", particles, "Particles per replica");
  mc_cmd->add_option("--replicas", replicas, "Replica count");
  mc_cmd->add_flag("--check-conservation", check, "Per-event mass-vector checks");

  std::string param;
  std::vector<std::string> values;
  auto* sweep_cmd = app.add_subcommand("sweep", "Run a config once per value of one parameter");
  sweep_cmd->add_option("config", config, "JSON config")->required();
  sweep_cmd->add_option("--param", param, "Path such as runs[0].solver.discrete.cap")->required();
  sweep_cmd->add_option("--values", values, "Values (JSON literals)")->required();

  auto* plot_cmd = app.add_subcommand("plot", "Regenerate SVG charts of a run directory");
  plot_cmd->add_option("dir", dir, "Run directory or output root")->required();

  CLI11_PARSE(app, argc, argv);
  try {
    apply_thread_cap(threads);
    if (*run_cmd) return cmd_run(config, out_dir);
    if (*vk_cmd) return cmd_validate_kernel(config, samples, seed);
    if (*diag_cmd) return cmd_diagnose(dir, certs);
    if (*mc_cmd) return cmd_mc(config, particles, replicas, check);
    if (*sweep_cmd) return cmd_sweep(config, param, values);
    if (*plot_cmd) return cmd_plot(dir);
  } catch (const ConfigError& e) {
    std::cerr << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

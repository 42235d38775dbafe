#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "alloylab/alloylab.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitCheck = 3;

struct Options {
  std::string config;
  std::uint64_t seed = 0;
  bool seed_set = false;
  unsigned threads = 0;
  bool threads_set = false;
  std::size_t trials = 0;
  std::string out;
  bool check = false;
  int grid = 64;
  int half_side = 0;
  std::uint64_t trial = 0;
  std::string matrix_path;
};

int report(int status) {
  const char* path = alab_last_error_path();
  std::fprintf(stderr, "error (%s): %s\n", alab_status_name(status), alab_last_error());
  if (path && *path) std::fprintf(stderr, "  at field %s\n", path);
  return status == ALAB_E_CONFIG ? kExitConfig : kExitFailure;
}

// Loads the config and applies command-line overrides.
int load(const Options& o, alab_config** cfg) {
  int st = alab_config_load(o.config.c_str(), cfg);
  if (st != ALAB_OK) return st;
  if (o.seed_set && (st = alab_config_set_seed(*cfg, o.seed)) != ALAB_OK) return st;
  if (o.threads_set && (st = alab_config_set_threads(*cfg, o.threads)) != ALAB_OK) return st;
  if (o.trials > 0 && (st = alab_config_set_trials(*cfg, o.trials)) != ALAB_OK) return st;
  if (!o.out.empty() && (st = alab_config_set_output(*cfg, o.out.c_str())) != ALAB_OK) return st;
  return ALAB_OK;
}

int run_experiment(const Options& o, const std::string& expected) {
  alab_config* cfg = nullptr;
  if (const int st = load(o, &cfg); st != ALAB_OK) {
    alab_config_free(cfg);
    return report(st);
  }
  if (!expected.empty() && expected != alab_config_experiment(cfg)) {
    std::fprintf(stderr, "error (config): file describes experiment '%s', not '%s'\n  at field /experiment\n",
                 alab_config_experiment(cfg), expected.c_str());
    alab_config_free(cfg);
    return kExitConfig;
  }
  alab_summary* summary = nullptr;
  const int st = alab_run(cfg, &summary);
  alab_config_free(cfg);
  if (st != ALAB_OK) return report(st);

  std::printf("%s\n", alab_summary_json(summary));
  const bool passed = alab_summary_passed(summary) != 0;
  const std::size_t n = alab_summary_verdict_count(summary);
  for (std::size_t i = 0; i < n; ++i) {
    const char *name = nullptr, *detail = nullptr;
    int ok = 0;
    alab_summary_verdict(summary, i, &name, &ok, &detail);
    std::fprintf(stderr, "%s %s: %s\n", ok ? "PASS" : "FAIL", name, detail);
  }
  alab_summary_free(summary);
  return (o.check && !passed) ? kExitCheck : kExitOk;
}

void add_common(CLI::App* app, Options& o) {
  app->add_option("--config", o.config, "Experiment configuration (JSON)")->required()->check(CLI::ExistingFile);
  app->add_option_function<std::uint64_t>(
      "--seed", [&o](const std::uint64_t& s) { o.seed = s; o.seed_set = true; }, "Master seed override");
  app->add_option_function<unsigned>(
      "--threads", [&o](const unsigned& t) { o.threads = t; o.threads_set = true; }, "Thread budget (0: all cores)");
  app->add_option("--trials", o.trials, "Trial count override")->check(CLI::PositiveNumber);
  app->add_option("--out", o.out, "Output directory override");
  app->add_flag("--check", o.check, "Exit with status 3 when an acceptance verdict fails");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Monte Carlo experiments on lattice Schrödinger operators with correlated alloy-type disorder"};
  app.set_version_flag("--version", std::string(alab_version()));
  app.require_subcommand(1);
  Options o;

  const std::vector<std::string> experiments = {"poisson",        "wegner-minami", "localization", "wiener",
                                                "representation", "truncation",    "lemmas",       "joint"};
  std::string chosen;
  for (const auto& e : experiments) {
    auto* sub = app.add_subcommand(e, "Run the " + e + " experiment");
    add_common(sub, o);
    sub->callback([&chosen, e] { chosen = e; });
  }
  auto* any = app.add_subcommand("run", "Run whichever experiment the config names");
  add_common(any, o);

  auto* inspect = app.add_subcommand("inspect-potential", "Check the single-site potential of a config");
  inspect->add_option("--config", o.config, "Configuration holding the potential")->required()->check(CLI::ExistingFile);
  inspect->add_option("--grid", o.grid, "Multiplier grid points per axis")->check(CLI::PositiveNumber);

  auto* dump = app.add_subcommand("dump-hamiltonian", "Write one trial's Hamiltonian as triplets");
  add_common(dump, o);
  dump->add_option("--half-side", o.half_side, "Box half-side L")->required()->check(CLI::NonNegativeNumber);
  dump->add_option("--trial", o.trial, "Trial index");
  dump->add_option("--matrix", o.matrix_path, "Output file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  if (!chosen.empty()) return run_experiment(o, chosen);
  if (any->parsed()) return run_experiment(o, "");

  if (inspect->parsed()) {
    alab_config* cfg = nullptr;
    if (const int st = alab_config_load(o.config.c_str(), &cfg); st != ALAB_OK) return report(st);
    char* text = nullptr;
    const int st = alab_inspect_potential(cfg, o.grid, &text);
    alab_config_free(cfg);
    if (st != ALAB_OK) return report(st);
    std::printf("%s\n", text);
    alab_string_free(text);
    return kExitOk;
  }

  if (dump->parsed()) {
    alab_config* cfg = nullptr;
    if (const int st = load(o, &cfg); st != ALAB_OK) {
      alab_config_free(cfg);
      return report(st);
    }
    const int st = alab_dump_hamiltonian(cfg, o.half_side, o.trial, o.matrix_path.c_str());
    alab_config_free(cfg);
    return st == ALAB_OK ? kExitOk : report(st);
  }
  return kExitFailure;
}

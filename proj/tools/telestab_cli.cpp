// Command-line front end; talks to the library only through the C API.

#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "telestab/telestab.h"

namespace {

struct Handle {
  ts_experiment* exp = nullptr;
  ~Handle() { ts_experiment_free(exp); }
};

int fail(ts_status st) {
  std::fprintf(stderr, "telestab: %s: %s\n", ts_status_name(st), ts_last_error());
  return ts_exit_code(st);
}

int print_report(ts_status st, char* report) {
  if (st != TS_OK) return fail(st);
  if (report) {
    std::printf("%s\n", report);
    ts_string_free(report);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  if (const char* lvl = std::getenv("TELESTAB_LOG")) {
    if (ts_set_log_level(lvl) != TS_OK)
      std::fprintf(stderr, "telestab: ignoring TELESTAB_LOG: %s\n", ts_last_error());
  } else {
    ts_set_log_level("warn");
  }

  CLI::App app{"Stability certificates and simulation for sampled-data teleoperation"};
  app.set_help_flag("--help", "Print this help message and exit");
  app.set_version_flag("--version", std::string(ts_version()));
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  app.add_option("--config", config_path, "Experiment config (JSON)");
  auto* seed_opt = app.add_option("--seed", seed, "Random seed");
  app.add_option("--out", out_dir, "Output directory");

  auto* masp = app.add_subcommand("masp", "Maximum allowable sampling period");
  std::vector<double> alphas;
  masp->add_option("--alpha", alphas, "Decay rate; repeat for a sweep");

  auto* simulate = app.add_subcommand("simulate", "Hybrid simulation");
  bool plot = false;
  double h = 0.0;
  simulate->add_flag("--plot", plot, "Write an SVG plot");
  auto* sim_h = simulate->add_option("--h", h, "Constant sampling period (s)");

  auto* stochastic = app.add_subcommand("stochastic", "Dropout stability certificate");
  std::uint64_t runs = 0;
  auto* runs_opt = stochastic->add_option("--runs", runs, "Monte-Carlo runs");

  auto* discretize = app.add_subcommand("discretize", "Print A_d and B_d");
  double dh = 0.001;
  discretize->add_option("--h", dh, "Sampling period (s)");

  auto* sweep = app.add_subcommand("sweep", "Grid over h or Kp");
  sweep->add_flag("--plot", plot, "Write SVG plots");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  Handle handle;
  ts_status st = config_path.empty() ? ts_experiment_default(&handle.exp)
                                     : ts_experiment_load(config_path.c_str(), &handle.exp);
  if (st != TS_OK) return fail(st);
  if (*seed_opt && (st = ts_experiment_set_seed(handle.exp, seed)) != TS_OK) return fail(st);
  if (!out_dir.empty() &&
      (st = ts_experiment_set_output_dir(handle.exp, out_dir.c_str())) != TS_OK)
    return fail(st);

  char* report = nullptr;
  if (*masp) {
    st = ts_run_masp(handle.exp, alphas.data(), alphas.size(), &report);
  } else if (*simulate) {
    if (*sim_h && (st = ts_experiment_set_period(handle.exp, h)) != TS_OK) return fail(st);
    st = ts_run_simulate(handle.exp, plot ? 1 : 0, &report);
  } else if (*stochastic) {
    if (*runs_opt && (st = ts_experiment_set_runs(handle.exp, runs)) != TS_OK) return fail(st);
    st = ts_run_stochastic(handle.exp, &report);
  } else if (*discretize) {
    st = ts_run_discretize(handle.exp, dh, nullptr, nullptr, &report);
  } else if (*sweep) {
    st = ts_run_sweep(handle.exp, plot ? 1 : 0, &report);
  }
  return print_report(st, report);
}

#include "telestab/telestab.h"

#include <cstring>
#include <exception>
#include <string>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "telestab/commands.hpp"
#include "telestab/config.hpp"
#include "telestab/errors.hpp"

struct ts_experiment {
  telestab::ExperimentConfig cfg;
};

namespace {

thread_local std::string g_last_error;

ts_status map_kind(telestab::ErrorKind kind) {
  using telestab::ErrorKind;
  switch (kind) {
    case ErrorKind::kArgument: return TS_ERR_ARGUMENT;
    case ErrorKind::kStructural: return TS_ERR_STRUCTURAL;
    case ErrorKind::kBracket: return TS_ERR_BRACKET;
    case ErrorKind::kNumerical: return TS_ERR_NUMERICAL;
    case ErrorKind::kContract: return TS_ERR_CONTRACT;
    case ErrorKind::kClassification: return TS_ERR_CLASSIFICATION;
    case ErrorKind::kConfig: return TS_ERR_CONFIG;
    case ErrorKind::kIo: return TS_ERR_IO;
  }
  return TS_ERR_INTERNAL;
}

template <typename F>
ts_status guard(F&& f) {
  try {
    g_last_error.clear();
    f();
    return TS_OK;
  } catch (const telestab::Error& e) {
    g_last_error = e.what();
    return map_kind(e.kind());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return TS_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return TS_ERR_INTERNAL;
  }
}

char* copy_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void emit(char** out, const nlohmann::json& j) {
  if (out) *out = copy_string(j.dump(2));
}

void require(bool ok, const char* what) {
  if (!ok) throw telestab::ArgumentError(what);
}

}  // namespace

extern "C" {

const char* ts_version(void) { return TELESTAB_VERSION; }

const char* ts_last_error(void) { return g_last_error.c_str(); }

const char* ts_status_name(ts_status status) {
  switch (status) {
    case TS_OK: return "ok";
    case TS_ERR_ARGUMENT: return "argument error";
    case TS_ERR_STRUCTURAL: return "structural error";
    case TS_ERR_BRACKET: return "bracket error";
    case TS_ERR_NUMERICAL: return "numerical error";
    case TS_ERR_CONTRACT: return "contract error";
    case TS_ERR_CLASSIFICATION: return "classification error";
    case TS_ERR_CONFIG: return "config error";
    case TS_ERR_IO: return "io error";
    case TS_ERR_INTERNAL: return "internal error";
  }
  return "unknown";
}

int ts_exit_code(ts_status status) {
  switch (status) {
    case TS_OK: return 0;
    case TS_ERR_ARGUMENT:
    case TS_ERR_STRUCTURAL:
    case TS_ERR_BRACKET:
    case TS_ERR_CONFIG:
    case TS_ERR_IO: return 2;
    default: return 1;
  }
}

ts_status ts_experiment_default(ts_experiment** out) {
  return guard([&] {
    require(out != nullptr, "null output handle");
    *out = new ts_experiment{telestab::default_config()};
  });
}

ts_status ts_experiment_load(const char* path, ts_experiment** out) {
  return guard([&] {
    require(path != nullptr && out != nullptr, "null argument");
    *out = new ts_experiment{telestab::load_config(path)};
  });
}

ts_status ts_experiment_parse(const char* json, ts_experiment** out) {
  return guard([&] {
    require(json != nullptr && out != nullptr, "null argument");
    *out = new ts_experiment{telestab::parse_config(json)};
  });
}

void ts_experiment_free(ts_experiment* exp) { delete exp; }

ts_status ts_experiment_set(ts_experiment* exp, const char* key,
                            const char* json_value) {
  return guard([&] {
    require(exp && key && json_value, "null argument");
    telestab::set_config_value(exp->cfg, key, json_value);
  });
}

ts_status ts_experiment_set_seed(ts_experiment* exp, uint64_t seed) {
  return guard([&] {
    require(exp != nullptr, "null experiment");
    exp->cfg.sim.seed = seed;
  });
}

ts_status ts_experiment_set_output_dir(ts_experiment* exp, const char* dir) {
  return guard([&] {
    require(exp && dir && *dir, "output directory must be non-empty");
    exp->cfg.output.dir = dir;
  });
}

ts_status ts_experiment_set_runs(ts_experiment* exp, uint64_t runs) {
  return guard([&] {
    require(exp != nullptr, "null experiment");
    require(runs >= 1, "runs must be >= 1");
    exp->cfg.stochastic.runs = runs;
  });
}

ts_status ts_experiment_set_period(ts_experiment* exp, double h) {
  return guard([&] {
    require(exp != nullptr, "null experiment");
    require(h > 0, "period must be > 0");
    telestab::ExperimentConfig next = exp->cfg;
    next.sim.sampling.periods = {h};
    next.sim.sampling.probabilities.clear();
    next.sim.step = std::min(next.sim.step, h / 10.0);
    next.validate();
    exp->cfg = std::move(next);
  });
}

ts_status ts_experiment_to_json(const ts_experiment* exp, char** out) {
  return guard([&] {
    require(exp && out, "null argument");
    *out = copy_string(telestab::dump_config(exp->cfg));
  });
}

ts_status ts_experiment_hash(const ts_experiment* exp, char** out) {
  return guard([&] {
    require(exp && out, "null argument");
    *out = copy_string(telestab::config_hash(exp->cfg));
  });
}

ts_status ts_run_masp(const ts_experiment* exp, const double* alphas,
                      size_t n_alphas, char** report) {
  return guard([&] {
    require(exp != nullptr, "null experiment");
    require(n_alphas == 0 || alphas != nullptr, "null alpha list");
    std::vector<double> a(alphas, alphas + n_alphas);
    emit(report, telestab::cmd_masp(exp->cfg, a));
  });
}

ts_status ts_run_simulate(const ts_experiment* exp, int plot, char** report) {
  return guard([&] {
    require(exp != nullptr, "null experiment");
    emit(report, telestab::cmd_simulate(exp->cfg, plot != 0));
  });
}

ts_status ts_run_stochastic(const ts_experiment* exp, char** report) {
  return guard([&] {
    require(exp != nullptr, "null experiment");
    emit(report, telestab::cmd_stochastic(exp->cfg));
  });
}

ts_status ts_run_discretize(const ts_experiment* exp, double h, double ad[4],
                            double bd[2], char** report) {
  return guard([&] {
    require(exp != nullptr, "null experiment");
    const nlohmann::json j = telestab::cmd_discretize(exp->cfg, h);
    if (ad)
      for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 2; ++c) ad[2 * r + c] = j["Ad"][r][c].get<double>();
    if (bd)
      for (int r = 0; r < 2; ++r) bd[r] = j["Bd"][r][0].get<double>();
    emit(report, j);
  });
}

ts_status ts_run_sweep(const ts_experiment* exp, int plot, char** report) {
  return guard([&] {
    require(exp != nullptr, "null experiment");
    emit(report, telestab::cmd_sweep(exp->cfg, plot != 0));
  });
}

void ts_string_free(char* s) { delete[] s; }

ts_status ts_set_log_level(const char* level) {
  return guard([&] {
    require(level != nullptr, "null level");
    const auto lvl = spdlog::level::from_str(level);
    if (lvl == spdlog::level::off && std::string(level) != "off")
      throw telestab::ArgumentError(std::string("unknown log level '") + level + "'");
    // Reports go to stdout; keep diagnostics on stderr.
    static const bool redirected = [] {
      spdlog::set_default_logger(spdlog::stderr_color_mt("telestab"));
      return true;
    }();
    (void)redirected;
    spdlog::set_level(lvl);
  });
}

}  // extern "C"

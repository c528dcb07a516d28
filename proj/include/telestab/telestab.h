#ifndef TELESTAB_TELESTAB_H
#define TELESTAB_TELESTAB_H

/* C interface to the telestab library. Every call returns a ts_status;
 * on failure ts_last_error() describes the cause (per thread). Strings
 * returned through out-parameters are owned by the caller and released with
 * ts_string_free(). */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define TS_API __declspec(dllexport)
#else
#define TS_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ts_status {
  TS_OK = 0,
  TS_ERR_ARGUMENT = 1,
  TS_ERR_STRUCTURAL = 2,
  TS_ERR_BRACKET = 3,
  TS_ERR_NUMERICAL = 4,
  TS_ERR_CONTRACT = 5,
  TS_ERR_CLASSIFICATION = 6,
  TS_ERR_CONFIG = 7,
  TS_ERR_IO = 8,
  TS_ERR_INTERNAL = 9
} ts_status;

typedef struct ts_experiment ts_experiment;

TS_API const char* ts_version(void);
TS_API const char* ts_last_error(void);
TS_API const char* ts_status_name(ts_status status);
/* 0 for TS_OK, 2 for invalid input (argument, config, bracket, structural,
 * I/O), 1 otherwise. */
TS_API int ts_exit_code(ts_status status);

TS_API ts_status ts_experiment_default(ts_experiment** out);
TS_API ts_status ts_experiment_load(const char* path, ts_experiment** out);
TS_API ts_status ts_experiment_parse(const char* json, ts_experiment** out);
TS_API void ts_experiment_free(ts_experiment* exp);

/* Generic setter: `key` is a dotted config key, `json_value` its JSON text. */
TS_API ts_status ts_experiment_set(ts_experiment* exp, const char* key,
                                   const char* json_value);
TS_API ts_status ts_experiment_set_seed(ts_experiment* exp, uint64_t seed);
TS_API ts_status ts_experiment_set_output_dir(ts_experiment* exp,
                                              const char* dir);
TS_API ts_status ts_experiment_set_runs(ts_experiment* exp, uint64_t runs);
/* Replaces the sampling set by the single period h. */
TS_API ts_status ts_experiment_set_period(ts_experiment* exp, double h);

TS_API ts_status ts_experiment_to_json(const ts_experiment* exp, char** out);
TS_API ts_status ts_experiment_hash(const ts_experiment* exp, char** out);

/* Commands. `report` (optional) receives the JSON report. */
TS_API ts_status ts_run_masp(const ts_experiment* exp, const double* alphas,
                             size_t n_alphas, char** report);
TS_API ts_status ts_run_simulate(const ts_experiment* exp, int plot,
                                 char** report);
TS_API ts_status ts_run_stochastic(const ts_experiment* exp, char** report);
TS_API ts_status ts_run_discretize(const ts_experiment* exp, double h,
                                   double ad[4], double bd[2], char** report);
TS_API ts_status ts_run_sweep(const ts_experiment* exp, int plot,
                              char** report);

TS_API void ts_string_free(char* s);

/* Verbosity for the library log: "trace", "debug", "info", "warn", "error",
 * "off". */
TS_API ts_status ts_set_log_level(const char* level);

#ifdef __cplusplus
}
#endif

#endif /* TELESTAB_TELESTAB_H */

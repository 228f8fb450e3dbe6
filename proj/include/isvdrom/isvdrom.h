#ifndef ISVDROM_H
#define ISVDROM_H

/* C interface to the adaptive reduced-order model library.
 *
 * Every function returns an isvdrom_status. On failure a message is available
 * from isvdrom_last_error() on the calling thread until the next call.
 * String outputs follow one convention: *needed receives the size including
 * the terminating NUL; if buf_len is smaller the call fails with
 * ISVDROM_ERR_ARGUMENT and nothing is written. */

#include <stddef.h>

#if defined(ISVDROM_BUILDING_LIBRARY)
#define ISVDROM_API __attribute__((visibility("default")))
#else
#define ISVDROM_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum isvdrom_status {
  ISVDROM_OK = 0,
  ISVDROM_ERR_SOLVER = 1,    /* nonlinear solve or numerical breakdown during a run */
  ISVDROM_ERR_CONFIG = 2,    /* invalid or unreadable configuration */
  ISVDROM_ERR_ARGUMENT = 3,  /* null handle, bad index, buffer too small */
  ISVDROM_ERR_IO = 4,
  ISVDROM_ERR_INTERNAL = 5
} isvdrom_status;

typedef struct isvdrom_config isvdrom_config;
typedef struct isvdrom_truth isvdrom_truth;
typedef struct isvdrom_result isvdrom_result;

typedef struct isvdrom_summary {
  int steps;
  int w_init;
  int n_fields;
  int n_error_rows; /* steps - w_init */
  int n_events;
  int n_signal;
  int rom_nonconverged_steps;
  int fom_nonconverged_steps;
  double seconds_fom;
  double seconds_rom;
  double acceleration;
} isvdrom_summary;

ISVDROM_API const char* isvdrom_version(void);
ISVDROM_API const char* isvdrom_last_error(void);

/* Configuration. Keys are dotted ("rule.lambda"); see the README for the list. */
ISVDROM_API isvdrom_status isvdrom_config_create(isvdrom_config** out);
ISVDROM_API isvdrom_status isvdrom_config_load_file(const char* path, isvdrom_config** out);
ISVDROM_API isvdrom_status isvdrom_config_parse(const char* text, isvdrom_config** out);
ISVDROM_API isvdrom_status isvdrom_config_clone(const isvdrom_config* cfg, isvdrom_config** out);
ISVDROM_API isvdrom_status isvdrom_config_set(isvdrom_config* cfg, const char* key, const char* value);
/* Applies n "section.key=value" assignments, validating once at the end. On
 * failure the configuration is left unchanged. */
ISVDROM_API isvdrom_status isvdrom_config_apply(isvdrom_config* cfg, const char* const* assignments, size_t n);
/* Fully resolved value of one key (defaults filled in). */
ISVDROM_API isvdrom_status isvdrom_config_get(const isvdrom_config* cfg, const char* key, char* buf,
                                              size_t buf_len, size_t* needed);
/* Resolved configuration as a JSON object of key -> string. */
ISVDROM_API isvdrom_status isvdrom_config_to_json(const isvdrom_config* cfg, char* buf, size_t buf_len,
                                                  size_t* needed);
ISVDROM_API isvdrom_status isvdrom_config_validate(const isvdrom_config* cfg);
ISVDROM_API void isvdrom_config_destroy(isvdrom_config* cfg);

/* Reference FOM trajectory; reusable across runs sharing model and time settings. */
ISVDROM_API isvdrom_status isvdrom_truth_compute(const isvdrom_config* cfg, isvdrom_truth** out);
ISVDROM_API void isvdrom_truth_destroy(isvdrom_truth* truth);

/* Runs the experiment selected by rom.mode. `truth` may be NULL. */
ISVDROM_API isvdrom_status isvdrom_run(const isvdrom_config* cfg, const isvdrom_truth* truth, isvdrom_result** out);
ISVDROM_API isvdrom_status isvdrom_result_summary(const isvdrom_result* res, isvdrom_summary* out);
ISVDROM_API isvdrom_status isvdrom_result_field_name(const isvdrom_result* res, int field, char* buf, size_t buf_len,
                                                     size_t* needed);
/* Time-averaged relative error per field; `out` holds n_fields values. */
ISVDROM_API isvdrom_status isvdrom_result_mean_errors(const isvdrom_result* res, double* out, size_t n);
/* Time-averaged coarse-signal error per field; fails for runs without a signal. */
ISVDROM_API isvdrom_status isvdrom_result_mean_signal_errors(const isvdrom_result* res, double* out, size_t n);
/* Relative error history of one field, n_error_rows values for steps w_init+1 .. steps. */
ISVDROM_API isvdrom_status isvdrom_result_error_history(const isvdrom_result* res, int field, double* out, size_t n);
/* Writes CSV/JSON artifacts into `dir`; `files` receives the newline-separated file names. */
ISVDROM_API isvdrom_status isvdrom_result_write(const isvdrom_result* res, const char* dir, char* files,
                                                size_t buf_len, size_t* needed);
ISVDROM_API void isvdrom_result_destroy(isvdrom_result* res);

#ifdef __cplusplus
}
#endif

#endif /* ISVDROM_H */

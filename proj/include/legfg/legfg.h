#ifndef LEGFG_H
#define LEGFG_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define LEGFG_API __declspec(dllexport)
#else
#define LEGFG_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum legfg_status {
  LEGFG_OK = 0,
  LEGFG_ERR_VALIDATION = 2,
  LEGFG_ERR_SOLVER = 3, /* also: optimizer stopped before convergence */
  LEGFG_ERR_IO = 4,
  LEGFG_ERR_INVALID_ARGUMENT = 5,
  LEGFG_ERR_INTERNAL = 6
} legfg_status;

typedef struct legfg_config legfg_config;
typedef struct legfg_model legfg_model;
typedef struct legfg_log legfg_log;
typedef struct legfg_trajectory legfg_trajectory;
typedef struct legfg_string legfg_string;

/* Message of the last failed call on this thread; "" when none. */
LEGFG_API const char* legfg_last_error(void);
LEGFG_API const char* legfg_version(void);

/* Owned strings returned by the library. */
LEGFG_API const char* legfg_string_data(const legfg_string* s);
LEGFG_API void legfg_string_destroy(legfg_string* s);

/* Sectioned key=value configuration. Keys are "section.key" or "key". */
LEGFG_API legfg_status legfg_config_create(legfg_config** out);
LEGFG_API legfg_status legfg_config_load(const char* path, legfg_config** out);
LEGFG_API legfg_status legfg_config_parse(const char* text, legfg_config** out);
/* "key=value" assignment, as given on a command line. */
LEGFG_API legfg_status legfg_config_assign(legfg_config* config, const char* assignment);
LEGFG_API legfg_status legfg_config_set(legfg_config* config, const char* key, const char* value);
/* LEGFG_ERR_INVALID_ARGUMENT when the key is absent. */
LEGFG_API legfg_status legfg_config_get(const legfg_config* config, const char* key, legfg_string** out);
/* Entries of `other` override those of `config`. */
LEGFG_API legfg_status legfg_config_merge(legfg_config* config, const legfg_config* other);
LEGFG_API legfg_status legfg_config_text(const legfg_config* config, legfg_string** out);
LEGFG_API void legfg_config_destroy(legfg_config* config);

/* Built-in name ("quadruped", "biped") or description file path. */
LEGFG_API legfg_status legfg_model_load(const char* name_or_path, legfg_model** out);
LEGFG_API int legfg_model_leg_count(const legfg_model* model);
LEGFG_API int legfg_model_joint_count(const legfg_model* model);
LEGFG_API void legfg_model_destroy(legfg_model* model);

/* Gait spec keys at the top level of `spec`; the model comes from its
   "model" key. */
LEGFG_API legfg_status legfg_synthesize(const legfg_config* spec, legfg_log** out);
LEGFG_API legfg_status legfg_log_read(const char* directory, legfg_log** out);
/* with_feet != 0 also writes the true foot poses of a synthetic log. */
LEGFG_API legfg_status legfg_log_write(const legfg_log* log, const char* directory, int with_feet);
LEGFG_API size_t legfg_log_imu_count(const legfg_log* log);
LEGFG_API double legfg_log_duration(const legfg_log* log);
/* Duration and contact phases per leg, one "key=value" per line. */
LEGFG_API legfg_status legfg_log_summary(const legfg_log* log, legfg_string** out);
/* Value of a meta.txt key; LEGFG_ERR_INVALID_ARGUMENT when absent. */
LEGFG_API legfg_status legfg_log_meta(const legfg_log* log, const char* key, legfg_string** out);
LEGFG_API legfg_status legfg_log_ground_truth(const legfg_log* log, legfg_trajectory** out);
LEGFG_API void legfg_log_destroy(legfg_log* log);

/* Runs the estimator selected by the "mode" key (proposed | baseline).
   `estimator` may be NULL for defaults. `report` (optional) receives the
   convergence report. Returns LEGFG_ERR_SOLVER with *out still set when the
   optimizer stopped before convergence. */
LEGFG_API legfg_status legfg_estimate(const legfg_log* log, const legfg_model* model, const legfg_config* estimator,
                                      legfg_trajectory** out, legfg_string** report);
/* Same, also writing estimate.txt, report.txt, convergence.txt,
   landmarks.txt and config.txt into `directory`. */
LEGFG_API legfg_status legfg_estimate_to_directory(const legfg_log* log, const legfg_model* model,
                                                   const legfg_config* estimator, const char* directory,
                                                   legfg_trajectory** out, legfg_string** report);

/* TUM files: "t x y z qx qy qz qw" per line. */
LEGFG_API legfg_status legfg_trajectory_read(const char* path, legfg_trajectory** out);
LEGFG_API legfg_status legfg_trajectory_write(const legfg_trajectory* trajectory, const char* path);
LEGFG_API size_t legfg_trajectory_size(const legfg_trajectory* trajectory);
/* pose: x y z qx qy qz qw */
LEGFG_API legfg_status legfg_trajectory_get(const legfg_trajectory* trajectory, size_t index, double* t,
                                            double pose[7]);
LEGFG_API void legfg_trajectory_destroy(legfg_trajectory* trajectory);

typedef struct legfg_metrics {
  size_t matched;
  double ape_rmse;
  double ape_mean;
  double ape_max;
  size_t rpe_pairs;
  double rpe_rmse;
  double rpe_mean;
  double rpe_max;
  double align_yaw;
  double align_x;
  double align_y;
} legfg_metrics;

/* `eval` may be NULL for defaults. `report` and `series` are optional. */
LEGFG_API legfg_status legfg_evaluate(const legfg_trajectory* reference, const legfg_trajectory* estimate,
                                      const legfg_config* eval, legfg_metrics* metrics, legfg_string** report,
                                      legfg_string** series);

/* Runs a comparison manifest. `base_dir` anchors relative model paths.
   Writes config.txt, summary.txt, cells.txt and series files into
   `output_dir` (NULL: none). `summary` (optional) receives the table.
   `failed_cells` (optional) counts cells with a failed stage. */
LEGFG_API legfg_status legfg_compare(const legfg_config* manifest, const char* base_dir, const char* output_dir,
                                     legfg_string** summary, int* failed_cells);

/* Resolved manifest with defaults expanded. */
LEGFG_API legfg_status legfg_manifest_resolve(const legfg_config* manifest, const char* base_dir,
                                              legfg_config** out);

#ifdef __cplusplus
}
#endif

#endif

#ifndef RAILSIM_H
#define RAILSIM_H

#include <stddef.h>
#include <stdint.h>

#if defined(RAILSIM_BUILDING_LIBRARY)
#define RS_API __attribute__((visibility("default")))
#else
#define RS_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum rs_status {
  RS_OK = 0,
  RS_ERR_PARSE = 1,
  RS_ERR_DANGLING_REFERENCE = 2,
  RS_ERR_INVARIANT = 3,
  RS_ERR_INVALID_ARGUMENT = 4,
  RS_ERR_IO = 5,
  RS_ERR_INCOMPATIBLE = 6,
  RS_ERR_NUMERIC = 7,
  RS_ERR_INTERNAL = 99
} rs_status;

typedef struct rs_world rs_world;
typedef struct rs_policy rs_policy;
typedef struct rs_record rs_record;
typedef struct rs_env rs_env;

/* Message of the last failed call on this thread; empty after a success. */
RS_API const char* rs_last_error(void);
RS_API const char* rs_status_name(rs_status status);
RS_API const char* rs_version(void);

/* Strings returned through char** out-parameters are owned by the caller. */
RS_API void rs_string_free(char* s);

RS_API rs_status rs_world_load(const char* route_path, const char* timetable_path, const char* od_path,
                               rs_world** out);
RS_API void rs_world_free(rs_world* world);

typedef struct rs_world_info {
  size_t stations;
  size_t blocks;
  size_t control_points;
  size_t routes;
  size_t trains;
  size_t timetable_entries;
  int64_t service_start_s;
  int64_t service_end_s;
  uint64_t fingerprint;
} rs_world_info;

RS_API rs_status rs_world_info_get(const rs_world* world, rs_world_info* out);

RS_API rs_status rs_policy_load(const char* path, rs_policy** out);
RS_API rs_status rs_policy_save(const rs_policy* policy, const char* path);
RS_API void rs_policy_free(rs_policy* policy);

typedef struct rs_run_options {
  const char* scenario_path;
  const char* controller; /* "timetable-only", "all-proceed" or "policy" */
  const rs_policy* policy;
  uint64_t seed;
  int64_t horizon_s; /* <= 0 keeps the scenario's horizon */
  int greedy;
  int stochastic_passengers;
} rs_run_options;

RS_API void rs_run_options_init(rs_run_options* options);
RS_API rs_status rs_run(const rs_world* world, const rs_run_options* options, rs_record** out);

RS_API rs_status rs_record_load(const char* path, rs_record** out);
RS_API rs_status rs_record_save(const rs_record* record, const char* path);
RS_API void rs_record_free(rs_record* record);
RS_API rs_status rs_record_metrics_json(const rs_record* record, char** out);
RS_API rs_status rs_record_wall_ms(const rs_record* record, double* out);

typedef struct rs_svg_style {
  int width;
  int height;
  int margin;
  int title;
} rs_svg_style;

RS_API void rs_svg_style_init(rs_svg_style* style);
/* style may be NULL for defaults. */
RS_API rs_status rs_render_svg(const rs_record* record, const rs_svg_style* style, char** out);

/* Fails with RS_ERR_INCOMPATIBLE when the records come from different inputs or scenarios. */
RS_API rs_status rs_compare(const rs_record* baseline, const rs_record* candidate, char** report_json,
                            char** report_table);

/* Called once per training iteration with a JSON learning-curve line. */
typedef void (*rs_train_callback)(const char* curve_json, void* user);

/* train_config_path may be NULL for defaults; seed 0 keeps the configured seed. */
RS_API rs_status rs_train(const char* env_config_path, const char* train_config_path, uint64_t seed,
                          rs_train_callback callback, void* user, rs_policy** out);

/* Line-delimited trajectory records for `count` episodes starting at `first_seed`. */
RS_API rs_status rs_rollout_dump(const char* env_config_path, const rs_policy* policy, uint64_t first_seed,
                                 size_t count, const char* out_path);

RS_API rs_status rs_env_create(const char* env_config_path, rs_env** out);
RS_API void rs_env_free(rs_env* env);
RS_API rs_status rs_env_observation_size(const rs_env* env, size_t* out);
/* Writes up to `capacity` entries; `count` receives the number of decision points. */
RS_API rs_status rs_env_action_dims(const rs_env* env, int* dims, size_t capacity, size_t* count);
RS_API rs_status rs_env_reset(rs_env* env, uint64_t seed, double* observation, size_t capacity);
RS_API rs_status rs_env_step(rs_env* env, const int* actions, size_t count, double* observation, size_t capacity,
                             double* reward, int* done);

#ifdef __cplusplus
}
#endif

#endif

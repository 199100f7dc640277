/* kinoplan C API: kinodynamic planning with learned steering functions.
 *
 * Every object is an opaque handle created and destroyed through this
 * interface; every fallible call returns a kp_status. kp_last_error()
 * carries the message of the calling thread's most recent failure.
 *
 * Vector arguments are plain double arrays whose lengths follow the model:
 * kp_model_state_dim() for states, kp_model_control_dim() for controls.
 */
#ifndef KINOPLAN_H
#define KINOPLAN_H

#include <stdint.h>

#if defined(_WIN32)
#define KP_API __declspec(dllexport)
#else
#define KP_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum kp_status {
  KP_OK = 0,
  KP_ERROR_INVALID_ARGUMENT = 1,
  KP_ERROR_PARSE = 2,
  KP_ERROR_IO = 3,
  KP_ERROR_NUMERIC = 4,
  KP_ERROR_NO_SOLUTION = 5,
  KP_ERROR_SATURATED = 6,
  KP_ERROR_RUN_FAILED = 7,
  KP_ERROR_INTERNAL = 8
} kp_status;

KP_API const char* kp_version(void);
/* Message of this thread's most recent failing call; never NULL. */
KP_API const char* kp_last_error(void);

/* ---------------------------------------------------------------- models */

typedef struct kp_model kp_model;

/* name: "dubins" | "tractor" | "quadrotor" */
KP_API kp_status kp_model_create(const char* name, kp_model** out);
KP_API void kp_model_destroy(kp_model* model);
KP_API int kp_model_state_dim(const kp_model* model);
KP_API int kp_model_control_dim(const kp_model* model);
KP_API kp_status kp_model_state_bounds(const kp_model* model, double* lo_out, double* hi_out);
KP_API kp_status kp_model_control_bounds(const kp_model* model, double* lo_out, double* hi_out);

KP_API kp_status kp_model_derivative(const kp_model* model, const double* x, const double* u,
                                     double* dx_out);
/* Fixed-step RK4 over tau seconds; the control is clamped to bounds. */
KP_API kp_status kp_model_integrate(const kp_model* model, const double* x, const double* u,
                                    double tau, double* x_out);
/* Bounds-normalized distance with wrapped angular differences. */
KP_API kp_status kp_model_distance(const kp_model* model, const double* a, const double* b,
                                   double* dist_out);
KP_API kp_status kp_model_sample_state(const kp_model* model, uint64_t seed, double* x_out);
KP_API kp_status kp_model_clamp_control(const kp_model* model, const double* u, double* u_out);

/* ----------------------------------------------------------------- grids */

typedef struct kp_grid kp_grid;

KP_API kp_status kp_grid_load(const char* path, kp_grid** out);
KP_API kp_status kp_grid_save(const kp_grid* grid, const char* path);
KP_API void kp_grid_destroy(kp_grid* grid);
KP_API int kp_grid_width(const kp_grid* grid);
KP_API int kp_grid_height(const kp_grid* grid);
KP_API double kp_grid_resolution(const kp_grid* grid);
KP_API int kp_grid_has_heights(const kp_grid* grid);
/* New grid with per-cell obstacle heights drawn uniformly on [0.5, 4.5] m. */
KP_API kp_status kp_grid_extrude(const kp_grid* grid, uint64_t seed, kp_grid** out);
/* *out = 1 when the disc of robot_radius at x collides (or leaves the map). */
KP_API kp_status kp_state_in_collision(const kp_grid* grid, const kp_model* model,
                                       double robot_radius, const double* x, int* out);

/* --------------------------------------------------------------- policies */

typedef struct kp_policy kp_policy;

KP_API kp_status kp_policy_load(const char* path, const kp_model* model, kp_policy** out);
KP_API kp_status kp_policy_save(const kp_policy* policy, const char* path);
KP_API void kp_policy_destroy(kp_policy* policy);
KP_API kp_status kp_policy_eval(const kp_policy* policy, const kp_model* model, const double* x,
                                const double* goal, double* u_out);

/* ----------------------------------------------------------- trajectories */

typedef struct kp_trajectory kp_trajectory;

KP_API void kp_trajectory_destroy(kp_trajectory* traj);
KP_API double kp_trajectory_cost(const kp_trajectory* traj);
KP_API double kp_trajectory_goal_distance(const kp_trajectory* traj);
KP_API int kp_trajectory_segment_count(const kp_trajectory* traj);
KP_API kp_status kp_trajectory_segment(const kp_trajectory* traj, int index, double* u_out,
                                       double* duration_out);
KP_API int kp_trajectory_sample_count(const kp_trajectory* traj);
KP_API kp_status kp_trajectory_sample(const kp_trajectory* traj, int index, double* time_out,
                                      double* state_out);

/* S3F steering: policy rollout for `horizon` intervals of tau seconds,
 * reward-selected end time (weights alpha, beta, mu), truncated result. */
KP_API kp_status kp_steer(const kp_policy* policy, const kp_model* model, const double* xa,
                          const double* xb, int horizon, double tau, double alpha, double beta,
                          double mu, kp_trajectory** out);

/* Direct-shooting time-optimal connection. options is a comma- or
 * newline-separated "key=value" list using the oracle.* keys (NULL for the
 * model defaults). KP_ERROR_NO_SOLUTION when no restart converges. */
KP_API kp_status kp_solve_tpbvp(const kp_model* model, const double* xa, const double* xb,
                                const char* options, uint64_t seed, kp_trajectory** out);

/* ----------------------------------------------------------- CLI commands
 *
 * The kinoplan CLI maps one-to-one onto these. config_path may be NULL;
 * overrides is a NULL-terminated array of "key=value" strings applied on
 * top of the config file (the CLI builds it from its flags). Outputs land
 * where the resolved options point.
 */
KP_API kp_status kp_cmd_gen_data(const char* config_path, const char* const* overrides);
KP_API kp_status kp_cmd_train(const char* config_path, const char* const* overrides);
KP_API kp_status kp_cmd_eval_steering(const char* config_path, const char* const* overrides);
/* KP_ERROR_NO_SOLUTION when the run completes without a solution
 * (artifacts are still written). */
KP_API kp_status kp_cmd_plan(const char* config_path, const char* const* overrides);
KP_API kp_status kp_cmd_bench(const char* config_path, const char* const* overrides);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* KINOPLAN_H */

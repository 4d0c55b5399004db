#ifndef COORDINFER_H
#define COORDINFER_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CiStatus {
  CI_STATUS_OK = 0,
  CI_STATUS_NULL_POINTER = 1,
  CI_STATUS_INVALID_ARGUMENT = 2,
  CI_STATUS_PARSE = 3,
  CI_STATUS_IO = 4,
  CI_STATUS_DATA_CONTRACT = 5,
  CI_STATUS_PANIC = 6,
} CiStatus;

// Opaque set of agent trajectories.
typedef struct CiTrajectorySet CiTrajectorySet;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copies the calling thread's last error message into `buf` (NUL-terminated,
// truncated to `cap`). Returns the full message length excluding the NUL.
//
// # Safety
// `buf` must be null or point to `cap` writable bytes.
size_t ci_last_error_message(char *buf, size_t cap);

// Angular distance in degrees between two headings, in `[0, 180]`.
double ci_dist_dir(double a_deg, double b_deg);

// Simulates one event. `model` is one of HM, LRA, HM_AND_LRA, MIXED, RANDOM;
// `rho` is used by HM only.
//
// # Safety
// `model` must be a NUL-terminated string; `out` must be writable.
enum CiStatus ci_simulate(const char *model,
                          size_t n_agents,
                          size_t n_steps,
                          double rho,
                          uint64_t seed,
                          struct CiTrajectorySet **out);

// Loads a `t,agent_id,x,y` CSV file. Gaps in the time grid are rejected.
//
// # Safety
// `path` must be a NUL-terminated string, `informed_ids` null or pointing
// to `n_informed` values, and `out` writable.
enum CiStatus ci_load_csv(const char *path,
                          const uint32_t *informed_ids,
                          size_t n_informed,
                          struct CiTrajectorySet **out);

// Releases a handle. Null is ignored.
//
// # Safety
// `set` must come from this library and not be used afterwards.
void ci_trajectory_free(struct CiTrajectorySet *set);

// Number of agents, or 0 for a null handle.
//
// # Safety
// `set` must be null or a live handle.
size_t ci_trajectory_n_agents(const struct CiTrajectorySet *set);

// Number of direction steps, or 0 for a null handle.
//
// # Safety
// `set` must be null or a live handle.
size_t ci_trajectory_n_steps(const struct CiTrajectorySet *set);

// Heading of agent index `agent` at step `t`, in degrees.
//
// # Safety
// `set` must be a live handle and `out` writable.
enum CiStatus ci_trajectory_direction(const struct CiTrajectorySet *set,
                                      size_t agent,
                                      size_t t,
                                      double *out);

// First step from which every agent stays within `epsilon` degrees of the
// informed agent, or -1 if the event never settles.
//
// # Safety
// `set` must be a live handle and `out` writable.
enum CiStatus ci_convergence_step(const struct CiTrajectorySet *set, double epsilon, int64_t *out);

// Fits the support vector `w` minimizing the embedded squared error of the
// mixed prediction against `target`, subject to `w >= kappa`, `sum w = 1`.
// The four direction arrays hold `n_rows` headings in degrees.
//
// # Safety
// Each array must point to `n_rows` values, `kappa` to 3 values (or be null
// for zero thresholds) and `w_out` to 3 writable values.
enum CiStatus ci_solve_support(const double *hm,
                               const double *lra,
                               const double *ar,
                               const double *target,
                               size_t n_rows,
                               const double *kappa,
                               double *w_out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* COORDINFER_H */

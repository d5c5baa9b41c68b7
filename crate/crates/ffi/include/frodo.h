#ifndef FRODO_H
#define FRODO_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Result codes. Values 3 and 4 match the command-line exit codes for
 configuration and data errors.
 */
typedef enum FrodoStatus {
  FRODO_STATUS_OK = 0,
  FRODO_STATUS_NULL_POINTER = 1,
  FRODO_STATUS_INVALID_ARGUMENT = 2,
  FRODO_STATUS_CONFIG_ERROR = 3,
  FRODO_STATUS_DATA_ERROR = 4,
  FRODO_STATUS_SAMPLER_ERROR = 5,
  FRODO_STATUS_PANIC = 6,
} FrodoStatus;

/*
 A fit configuration.
 */
typedef struct FrodoConfig FrodoConfig;

/*
 A grouped dataset.
 */
typedef struct FrodoDataset FrodoDataset;

/*
 A finished fit.
 */
typedef struct FrodoRunHandle FrodoRunHandle;

/*
 Convergence gate values of a run.
 */
typedef struct FrodoGates {
  double max_rhat;
  double min_ess;
  uint64_t divergences;
  /*
   1 when every gate holds.
   */
  int32_t passed;
} FrodoGates;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message of the last failed call on this thread, or null. The pointer
 stays valid until the next failing call on the same thread.
 */
const char *frodo_last_error(void);

/*
 Library version as a static nul-terminated string.
 */
const char *frodo_version(void);

/*
 Creates an empty dataset.
 */
struct FrodoDataset *frodo_dataset_new(void);

/*
 Appends a group with response `y` and `n` covariate values. `z` is the
 group's scalar covariate, or null when there is none.

 # Safety
 `ds` must come from this library; `x` must point to `n` doubles; `z` must
 be null or point to one double.
 */
enum FrodoStatus frodo_dataset_add_group(struct FrodoDataset *ds,
                                         double y,
                                         const double *x,
                                         uintptr_t n,
                                         const double *z);

/*
 Number of groups, or 0 for a null handle.

 # Safety
 `ds` must be null or come from this library.
 */
uintptr_t frodo_dataset_len(const struct FrodoDataset *ds);

/*
 Reads a dataset file.

 # Safety
 `path` must be a nul-terminated string and `out` a valid pointer.
 */
enum FrodoStatus frodo_dataset_read(const char *path, struct FrodoDataset **out);

/*
 Writes a dataset file.

 # Safety
 `ds` must come from this library and `path` be nul-terminated.
 */
enum FrodoStatus frodo_dataset_write(const struct FrodoDataset *ds, const char *path);

/*
 Simulates a study scenario; `n_groups = 0` keeps the study's size.

 # Safety
 `scenario` must be nul-terminated and `out` a valid pointer.
 */
enum FrodoStatus frodo_simulate(const char *scenario,
                                uint64_t seed,
                                uintptr_t n_groups,
                                struct FrodoDataset **out);

/*
 # Safety
 `ds` must be null or come from this library, and not be used afterwards.
 */
void frodo_dataset_free(struct FrodoDataset *ds);

/*
 The study defaults of `scenario` for the given dataset.

 # Safety
 Pointers must be valid; `scenario` nul-terminated.
 */
enum FrodoStatus frodo_config_for_scenario(const char *scenario,
                                           const struct FrodoDataset *ds,
                                           uint64_t seed,
                                           struct FrodoConfig **out);

/*
 Parses a flat TOML configuration.

 # Safety
 `text` must be nul-terminated and `out` valid.
 */
enum FrodoStatus frodo_config_from_toml(const char *text, struct FrodoConfig **out);

/*
 Overrides the sampler's chain count, warmup and sampling lengths and seed.

 # Safety
 `cfg` must come from this library.
 */
enum FrodoStatus frodo_config_set_sampler(struct FrodoConfig *cfg,
                                          uintptr_t chains,
                                          uintptr_t warmup,
                                          uintptr_t sampling,
                                          uint64_t seed);

/*
 # Safety
 `cfg` must be null or come from this library, and not be used afterwards.
 */
void frodo_config_free(struct FrodoConfig *cfg);

/*
 Fits the model. Blocks until every chain has finished.

 # Safety
 Pointers must be valid handles from this library.
 */
enum FrodoStatus frodo_fit(const struct FrodoDataset *ds,
                           const struct FrodoConfig *cfg,
                           struct FrodoRunHandle **out);

/*
 Number of bins `K` of a run, or 0 for a null handle.

 # Safety
 `run` must be null or come from this library.
 */
uintptr_t frodo_run_bins(const struct FrodoRunHandle *run);

/*
 Posterior mean and central 95% interval of σ_Y, original scale.

 # Safety
 `run` must come from this library; output pointers must be valid.
 */
enum FrodoStatus frodo_run_sigma_y(const struct FrodoRunHandle *run,
                                   double *mean,
                                   double *lo,
                                   double *hi);

/*
 Secant slope of the posterior mean coefficient function.

 # Safety
 `run` must come from this library; `out` must be valid.
 */
enum FrodoStatus frodo_run_secant_slope(const struct FrodoRunHandle *run, double *out);

/*
 Copies the pointwise β band into four caller arrays of length `len`,
 which must equal [`frodo_run_bins`].

 # Safety
 Arrays must each hold `len` doubles.
 */
enum FrodoStatus frodo_run_beta_band(const struct FrodoRunHandle *run,
                                     double *midpoint,
                                     double *mean,
                                     double *lo,
                                     double *hi,
                                     uintptr_t len);

/*
 Convergence gate values of a run.

 # Safety
 `run` must come from this library; `out` must be valid.
 */
enum FrodoStatus frodo_run_gates(const struct FrodoRunHandle *run, struct FrodoGates *out);

/*
 Writes the run's manifest, summaries, draws and bands into `dir`.

 # Safety
 `run` must come from this library and `dir` be nul-terminated.
 */
enum FrodoStatus frodo_run_write(const struct FrodoRunHandle *run, const char *dir);

/*
 # Safety
 `run` must be null or come from this library, and not be used afterwards.
 */
void frodo_run_free(struct FrodoRunHandle *run);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FRODO_H */

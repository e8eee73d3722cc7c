#ifndef PARTIAL_IHT_H
#define PARTIAL_IHT_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Result codes shared by every entry point.
 */
typedef enum PihtStatus {
  PIHT_STATUS_OK = 0,
  PIHT_STATUS_NULL_POINTER = 1,
  PIHT_STATUS_INVALID_ARGUMENT = 2,
  PIHT_STATUS_CONFIG = 3,
  PIHT_STATUS_DATA = 4,
  PIHT_STATUS_BUDGET_EXCEEDED = 5,
  PIHT_STATUS_IO = 6,
  PIHT_STATUS_PANIC = 7,
} PihtStatus;

/*
 A synthetic regression problem with known optimum.
 */
typedef struct PihtInstance PihtInstance;

/*
 Result of one solver run: final iterate plus the per-update trace.
 */
typedef struct PihtRun PihtRun;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Copies the calling thread's last error message into `buf` as a
 NUL-terminated string, truncating to `len - 1` bytes. Returns the full
 message length in bytes, excluding the terminator.

 # Safety
 `buf` must be null or point to `len` writable bytes.
 */
size_t piht_last_error_message(char *buf, size_t len);

/*
 Keeps the `s` largest-magnitude entries of `values[0..d]` (ties to the
 smaller index) and writes the result to `out[0..d]`.

 # Safety
 `values` and `out` must each point to `d` doubles. They may alias.
 */
enum PihtStatus piht_hard_threshold(const double *values, size_t d, size_t s, double *out);

/*
 Builds a synthetic instance: `s_star` coefficients of size `amplitude`,
 label noise `sigma`. Features are standard normal when `uniform_bound <= 0`
 and uniform on `[-uniform_bound, uniform_bound]` otherwise.

 # Safety
 `out` must be a valid pointer to write the handle to.
 */
enum PihtStatus piht_instance_synthetic(size_t d,
                                        size_t s_star,
                                        double amplitude,
                                        double sigma,
                                        double uniform_bound,
                                        struct PihtInstance **out);

/*
 Dimension of the instance, 0 for a null handle.

 # Safety
 `inst` must be null or a live handle.
 */
size_t piht_instance_dim(const struct PihtInstance *inst);

/*
 Writes the instance optimum to `out[0..d]`.

 # Safety
 `inst` must be a live handle and `out` must point to `dim` doubles.
 */
enum PihtStatus piht_instance_theta_star(const struct PihtInstance *inst, double *out);

/*
 # Safety
 `inst` must be null or a handle not yet freed.
 */
void piht_instance_free(struct PihtInstance *inst);

/*
 Runs exploration from zero with a constant batch size. Metrics are taken
 on `test_size` fresh rows every `eval_every` updates.

 # Safety
 `inst` must be a live handle and `out` a valid pointer.
 */
enum PihtStatus piht_run_exploration(const struct PihtInstance *inst,
                                     size_t s,
                                     size_t s_prime,
                                     double eta,
                                     size_t batch,
                                     size_t iterations,
                                     size_t test_size,
                                     size_t eval_every,
                                     uint64_t seed,
                                     struct PihtRun **out);

/*
 Number of trace records, including the initial one.

 # Safety
 `run` must be null or a live handle.
 */
size_t piht_run_len(const struct PihtRun *run);

/*
 Largest number of attributes read from any single example.

 # Safety
 `run` must be null or a live handle.
 */
size_t piht_run_max_attributes(const struct PihtRun *run);

/*
 Fills `cum_examples` and `test_mse` for record `index`. `test_mse` is NaN
 where no metrics were taken.

 # Safety
 `run` must be a live handle; the out pointers must be valid.
 */
enum PihtStatus piht_run_record(const struct PihtRun *run,
                                size_t index,
                                uint64_t *cum_examples,
                                double *test_mse);

/*
 Writes the final iterate to `out[0..d]`.

 # Safety
 `run` must be a live handle and `out` must point to `d` doubles.
 */
enum PihtStatus piht_run_theta(const struct PihtRun *run, double *out, size_t d);

/*
 # Safety
 `run` must be null or a handle not yet freed.
 */
void piht_run_free(struct PihtRun *run);

/*
 Runs the experiment described by a TOML document and writes its outputs.
 `mean_final_test_mse` may be null.

 # Safety
 `toml` must be a NUL-terminated UTF-8 string.
 */
enum PihtStatus piht_experiment_run(const char *toml, double *mean_final_test_mse);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PARTIAL_IHT_H */

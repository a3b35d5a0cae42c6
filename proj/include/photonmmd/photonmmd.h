/* C interface to the photonic MMD trainer.
 *
 * Every function returns a pmmd_status. On failure the message for the
 * calling thread is available from pmmd_last_error() until the next call.
 * Handles are opaque and owned by the caller; release them with the matching
 * *_free function (passing NULL is allowed).
 */
#ifndef PHOTONMMD_H
#define PHOTONMMD_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define PMMD_API __declspec(dllexport)
#else
#define PMMD_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum pmmd_status {
  PMMD_OK = 0,
  PMMD_ERR_INVALID_ARGUMENT = 1,
  PMMD_ERR_SHAPE_MISMATCH = 2,
  PMMD_ERR_CAP_EXCEEDED = 3,
  PMMD_ERR_PARSE = 4,
  PMMD_ERR_IO = 5,
  PMMD_ERR_NUMERIC = 6,
  PMMD_ERR_INTERNAL = 7
} pmmd_status;

typedef enum pmmd_kernel { PMMD_KERNEL_MOD2 = 0, PMMD_KERNEL_GAUSSIAN = 1 } pmmd_kernel;

typedef struct pmmd_dataset pmmd_dataset;
typedef struct pmmd_circuit pmmd_circuit;
typedef struct pmmd_run pmmd_run;

PMMD_API const char* pmmd_last_error(void);
PMMD_API const char* pmmd_status_name(pmmd_status status);
PMMD_API const char* pmmd_version(void);

/* Worker threads for internal loops; results never depend on it. */
PMMD_API pmmd_status pmmd_set_threads(unsigned threads);

/* ---- datasets ---- */

PMMD_API pmmd_status pmmd_dataset_generate_boson(size_t m, size_t n, size_t size, uint64_t seed,
                                                 int collision_free, pmmd_dataset** out);
PMMD_API pmmd_status pmmd_dataset_generate_uniform(size_t m, size_t n, size_t size,
                                                   uint64_t seed, pmmd_dataset** out);
/* format: "csv" (one ranking per row) or "preflib" (strict-order lines). */
PMMD_API pmmd_status pmmd_dataset_ingest_rankings(const char* path, const char* format, size_t m,
                                                  size_t n, pmmd_dataset** out);
/* universe may be NULL (all columns, in file order). */
PMMD_API pmmd_status pmmd_dataset_ingest_expression(const char* path,
                                                    const char* const* universe,
                                                    size_t universe_len, size_t n,
                                                    int signed_order, pmmd_dataset** out);
PMMD_API pmmd_status pmmd_dataset_read(const char* path, pmmd_dataset** out);
PMMD_API pmmd_status pmmd_dataset_write(const pmmd_dataset* ds, const char* path);
PMMD_API pmmd_status pmmd_dataset_info(const pmmd_dataset* ds, size_t* m, size_t* n,
                                       size_t* size);
/* Adds a '#' comment line to the dataset's provenance block. */
PMMD_API pmmd_status pmmd_dataset_add_comment(pmmd_dataset* ds, const char* text);
PMMD_API pmmd_status pmmd_dataset_split(const pmmd_dataset* ds, double train_fraction,
                                        uint64_t seed, pmmd_dataset** train,
                                        pmmd_dataset** test);
PMMD_API void pmmd_dataset_free(pmmd_dataset* ds);

/* ---- circuits ---- */

/* mesh: "clements_rectangular", "butterfly", "three_mzi", "qr_haar" (or a
 * short alias). positions: 0-based input modes, or NULL for modes 0..n-1.
 * init: "identity", "identity:<eps>" or "random". */
PMMD_API pmmd_status pmmd_circuit_create(const char* mesh, size_t m, size_t n,
                                         const size_t* positions, const char* init,
                                         uint64_t seed, pmmd_circuit** out);
PMMD_API pmmd_status pmmd_circuit_load(const char* path, pmmd_circuit** out);
PMMD_API pmmd_status pmmd_circuit_save(const pmmd_circuit* c, const char* path);
PMMD_API pmmd_status pmmd_circuit_info(const pmmd_circuit* c, size_t* m, size_t* n,
                                       size_t* param_count);
PMMD_API pmmd_status pmmd_circuit_unitarity_defect(const pmmd_circuit* c, double* defect);
PMMD_API void pmmd_circuit_free(pmmd_circuit* c);

/* ---- training ---- */

typedef struct pmmd_train_options {
  size_t steps;
  double lr;
  double beta1;
  double beta2;
  double eps;
  double sigma; /* used when schedule_len == 0 */
  size_t mask_batch;
  size_t glynn_batch;
  size_t data_batch;
  const double* schedule_sigmas;
  const size_t* schedule_steps;
  size_t schedule_len;
  uint64_t seed;
  size_t eval_every;
  size_t eval_repeats;
  pmmd_kernel eval_kernel;
  int frozen_batches;
} pmmd_train_options;

typedef struct pmmd_trace_record {
  size_t step;
  double sigma;
  double mmd;
  double grad_norm;
  double wall_ms;
} pmmd_trace_record;

typedef struct pmmd_summary {
  double mean;
  double std;
  size_t repeats;
} pmmd_summary;

typedef struct pmmd_eval_record {
  size_t step;
  double sigma;
  pmmd_summary result;
} pmmd_eval_record;

/* Called at every checkpoint; the circuit handle is only valid during the call. */
typedef void (*pmmd_checkpoint_fn)(size_t step, const pmmd_circuit* circuit, void* user);

PMMD_API void pmmd_train_options_init(pmmd_train_options* options);
/* test may be NULL, which disables evaluation. */
PMMD_API pmmd_status pmmd_train(const pmmd_circuit* initial, const pmmd_dataset* train,
                                const pmmd_dataset* test, const pmmd_train_options* options,
                                pmmd_checkpoint_fn checkpoint, void* user, pmmd_run** out);
PMMD_API size_t pmmd_run_trace_length(const pmmd_run* run);
PMMD_API pmmd_status pmmd_run_trace_record(const pmmd_run* run, size_t index,
                                           pmmd_trace_record* record);
PMMD_API size_t pmmd_run_eval_count(const pmmd_run* run);
PMMD_API pmmd_status pmmd_run_eval_record(const pmmd_run* run, size_t index,
                                          pmmd_eval_record* record);
PMMD_API pmmd_status pmmd_run_final_circuit(const pmmd_run* run, pmmd_circuit** out);
PMMD_API void pmmd_run_free(pmmd_run* run);

/* ---- evaluation and baselines ---- */

PMMD_API pmmd_status pmmd_evaluate(const pmmd_circuit* c, const pmmd_dataset* test,
                                   pmmd_kernel kernel, double sigma, size_t repeats,
                                   uint64_t seed, pmmd_summary* out);
PMMD_API pmmd_status pmmd_baseline_uniform(const pmmd_dataset* test, pmmd_kernel kernel,
                                           double sigma, size_t repeats, uint64_t seed,
                                           pmmd_summary* out);
PMMD_API pmmd_status pmmd_baseline_test_to_test(const pmmd_dataset* test, pmmd_kernel kernel,
                                                double sigma, size_t repeats, uint64_t seed,
                                                pmmd_summary* out);

typedef struct pmmd_rbm_options {
  size_t hidden; /* 0: same as m */
  size_t epochs;
  double lr;
  size_t batch_size;
} pmmd_rbm_options;

PMMD_API void pmmd_rbm_options_init(pmmd_rbm_options* options);
/* fallback_count receives the number of samples produced by the top-n
 * projection; final_reconstruction_error the last epoch's error. Both may be NULL. */
PMMD_API pmmd_status pmmd_baseline_rbm(const pmmd_dataset* train, const pmmd_dataset* test,
                                       const pmmd_rbm_options* options, pmmd_kernel kernel,
                                       double sigma, size_t repeats, uint64_t seed,
                                       pmmd_summary* out, size_t* fallback_count,
                                       double* final_reconstruction_error);

/* Runs one grid point per (lr, epsilon, sigma) combination; `out` must hold
 * n_lr * n_eps * n_sigma entries, filled lr-major. */
typedef struct pmmd_grid_point {
  double lr;
  double epsilon;
  double sigma;
  double final_loss;
  pmmd_summary evaluation;
} pmmd_grid_point;

PMMD_API pmmd_status pmmd_grid(const char* mesh, const pmmd_dataset* train,
                               const pmmd_dataset* test, const pmmd_train_options* base,
                               const double* lrs, size_t n_lr, const double* epsilons,
                               size_t n_eps, const double* sigmas, size_t n_sigma,
                               pmmd_grid_point* out);

/* ---- verification ---- */

typedef struct pmmd_grad_check {
  size_t param_count;
  double loss;
  double max_relative_error;
} pmmd_grad_check;

/* Random circuit (seeded) against boson samples from a seeded unitary. */
PMMD_API pmmd_status pmmd_check_grad(const char* mesh, size_t m, size_t n, double sigma,
                                     size_t mask_batch, size_t glynn_batch, size_t data_batch,
                                     double h, uint64_t seed, pmmd_grad_check* out);

typedef struct pmmd_kernel_identity_report {
  double lo_mod2;          /* exhaustive mask sum, single-permanent expectations */
  double brute_mod2;       /* model-model term from the brute-force distribution */
  double lo_gaussian_cf;   /* mask sum restricted to collision-free outputs */
  double brute_gaussian_cf;
  double collision_mass;
} pmmd_kernel_identity_report;

/* Compares the linear-optical model-model term with the brute-force kernel
 * sum for a seeded Haar-like unitary. */
PMMD_API pmmd_status pmmd_oracle_kernel_identity(size_t m, size_t n, double sigma, uint64_t seed,
                                              pmmd_kernel_identity_report* out);

/* Exact MMD between the circuit's output distribution and the dataset's
 * empirical distribution. */
PMMD_API pmmd_status pmmd_oracle_exact_mmd(const pmmd_circuit* c, const pmmd_dataset* data,
                                           pmmd_kernel kernel, double sigma, double* out);

#ifdef __cplusplus
}
#endif

#endif

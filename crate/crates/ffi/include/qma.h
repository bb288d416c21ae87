#ifndef QMA_H
#define QMA_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum QmaStatus {
  QMA_STATUS_OK = 0,
  QMA_STATUS_NULL_POINTER = 1,
  QMA_STATUS_INVALID_STRING = 2,
  QMA_STATUS_COMPOSITION = 3,
  QMA_STATUS_CONTRACT = 4,
  QMA_STATUS_POST_SELECTION = 5,
  QMA_STATUS_DISPERSION_OVERFLOW = 6,
  QMA_STATUS_INTEGRATION = 7,
  QMA_STATUS_SEPARATION = 8,
  QMA_STATUS_CONFIG = 9,
  QMA_STATUS_OUT_OF_RANGE = 10,
  QMA_STATUS_PANIC = 11,
} QmaStatus;

// A branch decomposition.
typedef struct QmaBranchSet QmaBranchSet;

// A state vector over named subsystems.
typedef struct QmaKet QmaKet;

// The report of one experiment run.
typedef struct QmaReport QmaReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or NULL. Valid until the
// next call into the library from the same thread.
const char *qma_last_error(void);

// Build a ket from subsystem names and dimensions and `len` amplitudes given
// as separate real and imaginary arrays. `im` may be NULL for a real state.
//
// # Safety
// `names` and `dims` hold `n_subsystems` entries; `re` (and `im` if given)
// hold `len` entries; `out` is writable.
enum QmaStatus qma_ket_new(const char *const *names,
                           const size_t *dims,
                           size_t n_subsystems,
                           const double *re,
                           const double *im,
                           size_t len,
                           struct QmaKet **out);

// # Safety
// `ket` is a live handle or NULL.
size_t qma_ket_dim(const struct QmaKet *ket);

// # Safety
// `ket` is a live handle or NULL.
double qma_ket_norm(const struct QmaKet *ket);

// Copy amplitude `index` (row-major over the subsystems) into `re`/`im`.
//
// # Safety
// `ket` is a live handle; `re` and `im` are writable.
enum QmaStatus qma_ket_amplitude(const struct QmaKet *ket, size_t index, double *re, double *im);

// # Safety
// `a` and `b` are live handles; `out` is writable.
enum QmaStatus qma_ket_tensor(const struct QmaKet *a, const struct QmaKet *b, struct QmaKet **out);

// `⟨a|b⟩`, conjugate-linear in `a`.
//
// # Safety
// `a` and `b` are live handles; `re` and `im` are writable.
enum QmaStatus qma_ket_inner(const struct QmaKet *a,
                             const struct QmaKet *b,
                             double *re,
                             double *im);

// # Safety
// `ket` came from this library and is not used afterwards. NULL is ignored.
void qma_ket_free(struct QmaKet *ket);

// Split `ket` into branches labeled by the named pointer subsystems.
//
// # Safety
// `ket` is live; `pointer` holds `n_pointer` strings; `out` is writable.
enum QmaStatus qma_decompose(const struct QmaKet *ket,
                             const char *const *pointer,
                             size_t n_pointer,
                             struct QmaBranchSet **out);

// # Safety
// `set` is a live handle or NULL.
size_t qma_branchset_len(const struct QmaBranchSet *set);

// Number of pointer subsystems, i.e. the length of every label.
//
// # Safety
// `set` is a live handle or NULL.
size_t qma_branchset_label_len(const struct QmaBranchSet *set);

// # Safety
// `set` is live; `out` is writable.
enum QmaStatus qma_branchset_weight(const struct QmaBranchSet *set, size_t index, double *out);

// Write the outcome indices of branch `index` into `out`, which must hold
// `qma_branchset_label_len(set)` entries.
//
// # Safety
// `set` is live; `out` holds `capacity` writable entries.
enum QmaStatus qma_branchset_label(const struct QmaBranchSet *set,
                                   size_t index,
                                   size_t *out,
                                   size_t capacity);

// # Safety
// `set` came from this library and is not used afterwards. NULL is ignored.
void qma_branchset_free(struct QmaBranchSet *set);

// Run a registered experiment. `params_json` is a JSON object or NULL for
// defaults; `hbar <= 0` selects the built-in value.
//
// # Safety
// `name` and `params_json` are NUL-terminated or NULL; `out` is writable.
enum QmaStatus qma_run_experiment(const char *name,
                                  const char *params_json,
                                  uint64_t seed,
                                  double hbar,
                                  struct QmaReport **out);

// The report as JSON. Free the string with [`qma_string_free`].
//
// # Safety
// `report` is live; `out` is writable.
enum QmaStatus qma_report_json(const struct QmaReport *report, char **out);

// True when every verdict passed. NULL yields false.
//
// # Safety
// `report` is a live handle or NULL.
bool qma_report_all_pass(const struct QmaReport *report);

// # Safety
// `report` came from this library and is not used afterwards. NULL is ignored.
void qma_report_free(struct QmaReport *report);

// # Safety
// `s` came from this library and is not used afterwards. NULL is ignored.
void qma_string_free(char *s);

// Order-of-magnitude packet width `sqrt(x0² + 2ħt/m)`.
double qma_spread_estimate(double x0, double t, double mass, double hbar);

// Registered experiment names as a JSON array of strings.
//
// # Safety
// `out` is writable.
enum QmaStatus qma_list_experiments_json(char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QMA_H */

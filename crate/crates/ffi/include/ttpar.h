#ifndef TTPAR_H
#define TTPAR_H

#include <stddef.h>
#include <stdint.h>

#define TTPAR_NORM_INNERPROD 0

#define TTPAR_NORM_SYMMETRIC 1

#define TTPAR_NORM_ORTHO 2

#define TTPAR_ROUND_LRL 0

#define TTPAR_ROUND_LRLI 1

#define TTPAR_ROUND_RLR 2

#define TTPAR_ROUND_RLRI 3

#define TTPAR_DIR_LEFT 0

#define TTPAR_DIR_RIGHT 1

#define TTPAR_OP_ADD 0

#define TTPAR_OP_HADAMARD 1

#define TTPAR_OP_DOT 2

#define TTPAR_OP_NORM 3

#define TTPAR_OP_ORTHO 4

#define TTPAR_OP_ROUND 5

#define TTPAR_OP_TSQR 6

#define TTPAR_OP_APPLYQ 7

typedef enum TtparStatus {
  TTPAR_OK = 0,
  TTPAR_NULL_POINTER = 1,
  TTPAR_INVALID_ARGUMENT = 2,
  TTPAR_SHAPE = 3,
  TTPAR_BOUNDS = 4,
  TTPAR_CAPACITY = 5,
  TTPAR_CONTRACT = 6,
  TTPAR_NUMERIC = 7,
  TTPAR_COMM = 8,
  TTPAR_IO = 9,
  TTPAR_FORMAT = 10,
  TTPAR_PANIC = 11,
} TtparStatus;

// Opaque tensor-train handle.
typedef struct TtparTensor TtparTensor;

// Leading and total counts of one cost-model estimate.
typedef struct TtparCost {
  double flops;
  double leading_flops;
  double words;
  double messages;
  double seconds;
} TtparCost;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failure on this thread, or null. The pointer stays
// valid until the next failing call on the same thread.
const char *ttpar_last_error(void);

void ttpar_clear_error(void);

// Library version as a static NUL-terminated string.
const char *ttpar_version(void);

// Gaussian random train with `n` modes; `ranks` has `n + 1` entries with
// unit ends.
//
// # Safety
// `dims` and `ranks` must point to `n` and `n + 1` readable values; `out`
// must be writable.
enum TtparStatus ttpar_tensor_random(size_t n,
                                     const size_t *dims,
                                     const size_t *ranks,
                                     uint64_t seed,
                                     struct TtparTensor **out);

// Builds a train from cores stored back to back. Core `k` holds
// `ranks[k] * dims[k] * ranks[k+1]` values with entry `(a, i, b)` at
// `a + ranks[k] * (i + dims[k] * b)`.
//
// # Safety
// `dims`, `ranks` and `data` must point to `n`, `n + 1` and `data_len`
// readable values; `out` must be writable.
enum TtparStatus ttpar_tensor_from_cores(size_t n,
                                         const size_t *dims,
                                         const size_t *ranks,
                                         const double *data,
                                         size_t data_len,
                                         struct TtparTensor **out);

// # Safety
// `t` must be null or a handle from this library not yet freed.
void ttpar_tensor_free(struct TtparTensor *t);

// # Safety
// `t` must be a live handle; `out` must be writable.
enum TtparStatus ttpar_tensor_clone(const struct TtparTensor *t, struct TtparTensor **out);

// Number of modes, or 0 for a null handle.
//
// # Safety
// `t` must be null or a live handle.
size_t ttpar_tensor_order(const struct TtparTensor *t);

// Copies the `order` mode sizes into `out`.
//
// # Safety
// `t` must be a live handle; `out` must have room for `len` values.
enum TtparStatus ttpar_tensor_dims(const struct TtparTensor *t, size_t *out, size_t len);

// Copies the `order + 1` bond ranks into `out`.
//
// # Safety
// `t` must be a live handle; `out` must have room for `len` values.
enum TtparStatus ttpar_tensor_ranks(const struct TtparTensor *t, size_t *out, size_t len);

// Single entry at a zero-based multi-index.
//
// # Safety
// `t` must be a live handle; `idx` must hold `n` values; `out` writable.
enum TtparStatus ttpar_tensor_entry(const struct TtparTensor *t,
                                    const size_t *idx,
                                    size_t n,
                                    double *out);

// # Safety
// `path` must be a NUL-terminated string; `out` must be writable.
enum TtparStatus ttpar_tensor_load(const char *path_, struct TtparTensor **out);

// # Safety
// `t` must be a live handle; `path` must be a NUL-terminated string.
enum TtparStatus ttpar_tensor_save(const struct TtparTensor *t, const char *path_);

// # Safety
// `x` and `y` must be live handles; `out` must be writable.
enum TtparStatus ttpar_add(const struct TtparTensor *x,
                           const struct TtparTensor *y,
                           struct TtparTensor **out);

// # Safety
// `x` must be a live handle; `out` must be writable.
enum TtparStatus ttpar_scale(const struct TtparTensor *x, double alpha, struct TtparTensor **out);

// # Safety
// `x` and `y` must be live handles; `out` must be writable.
enum TtparStatus ttpar_hadamard(const struct TtparTensor *x,
                                const struct TtparTensor *y,
                                struct TtparTensor **out);

// # Safety
// `x` and `y` must be live handles; `out` must be writable.
enum TtparStatus ttpar_dot(const struct TtparTensor *x, const struct TtparTensor *y, double *out);

// Frobenius norm with one of the `TTPAR_NORM_*` methods.
//
// # Safety
// `x` must be a live handle; `out` must be writable.
enum TtparStatus ttpar_norm(const struct TtparTensor *x, int method, double *out);

// Orthonormalizes `x` in direction `TTPAR_DIR_*` on `nprocs` simulated
// ranks (1 runs sequentially).
//
// # Safety
// `x` must be a live handle; `out` must be writable.
enum TtparStatus ttpar_orthonormalize(const struct TtparTensor *x,
                                      int dir,
                                      size_t nprocs,
                                      struct TtparTensor **out);

// Rounds `x` to relative accuracy `eps0` with variant `TTPAR_ROUND_*` on
// `nprocs` simulated ranks. `max_rank` of 0 means no cap. The absolute
// error bound reported by the truncations is written to `error_bound`
// when it is not null.
//
// # Safety
// `x` must be a live handle; `out` must be writable; `error_bound` must be
// null or writable.
enum TtparStatus ttpar_round(const struct TtparTensor *x,
                             double eps0,
                             int variant_,
                             size_t max_rank,
                             size_t nprocs,
                             struct TtparTensor **out,
                             double *error_bound);

// Cost-model estimate for a uniform shape. `l` of 0 uses `R/2`; `variant`
// only matters for `TTPAR_OP_ROUND`. `alpha`, `beta` and `gamma` price
// messages, words and flops; pass negative values for the defaults.
//
// # Safety
// `out` must be writable.
enum TtparStatus ttpar_cost_estimate(int op,
                                     int variant_,
                                     size_t n,
                                     size_t i,
                                     size_t r,
                                     size_t p,
                                     size_t l,
                                     double alpha,
                                     double beta,
                                     double gamma,
                                     struct TtparCost *out);

// Predicted `T(1)/T(P)` under the cost model; arguments as in
// [`ttpar_cost_estimate`].
//
// # Safety
// `out` must be writable.
enum TtparStatus ttpar_predicted_speedup(int op,
                                         int variant_,
                                         size_t n,
                                         size_t i,
                                         size_t r,
                                         size_t p,
                                         size_t l,
                                         double alpha,
                                         double beta,
                                         double gamma,
                                         double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TTPAR_H */

/* Rounds X + X back to the ranks of X through the C interface. */
#include <math.h>
#include <stdio.h>

#include "ttpar.h"

#define CHECK(call)                                                        \
  do {                                                                     \
    TtparStatus s_ = (call);                                               \
    if (s_ != TTPAR_OK) {                                                  \
      fprintf(stderr, "%s failed (%d): %s\n", #call, (int)s_,              \
              ttpar_last_error());                                         \
      return 1;                                                            \
    }                                                                      \
  } while (0)

int main(void) {
  size_t dims[4] = {8, 7, 6, 5};
  size_t ranks[5] = {1, 3, 4, 2, 1};
  TtparTensor *x = NULL, *twice = NULL, *z = NULL;
  CHECK(ttpar_tensor_random(4, dims, ranks, 11, &x));
  CHECK(ttpar_add(x, x, &twice));

  double bound = 0.0;
  CHECK(ttpar_round(twice, 1e-10, TTPAR_ROUND_LRLI, 0, 4, &z, &bound));

  size_t got[5];
  CHECK(ttpar_tensor_ranks(z, got, 5));
  for (int k = 0; k < 5; k++) {
    if (got[k] != ranks[k]) {
      fprintf(stderr, "rank %d: %zu vs %zu\n", k, got[k], ranks[k]);
      return 1;
    }
  }

  double nx = 0.0, nz = 0.0;
  CHECK(ttpar_norm(x, TTPAR_NORM_SYMMETRIC, &nx));
  CHECK(ttpar_norm(z, TTPAR_NORM_ORTHO, &nz));
  if (fabs(nz - 2.0 * nx) > 1e-10 * nz) {
    fprintf(stderr, "norm %g vs %g\n", nz, 2.0 * nx);
    return 1;
  }

  if (ttpar_norm(x, 99, &nx) != TTPAR_INVALID_ARGUMENT || ttpar_last_error() == NULL) {
    fprintf(stderr, "bad method accepted\n");
    return 1;
  }

  TtparCost cost;
  CHECK(ttpar_cost_estimate(TTPAR_OP_ROUND, TTPAR_ROUND_LRLI, 50, 200, 50, 8, 0, -1.0, -1.0, -1.0, &cost));
  printf("ttpar %s ok: ranks restored, round flops %.3e\n", ttpar_version(), cost.flops);

  ttpar_tensor_free(z);
  ttpar_tensor_free(twice);
  ttpar_tensor_free(x);
  return 0;
}

#include <math.h>
#include <stdio.h>
#include <stdlib.h>

#include "kkwave.h"

#define CHECK(cond)                                              \
    do {                                                         \
        if (!(cond)) {                                           \
            fprintf(stderr, "check failed: %s (line %d)\n", #cond, __LINE__); \
            return 1;                                            \
        }                                                        \
    } while (0)

int main(void) {
    KkCusp k;
    CHECK(kk_cusp_point(&k) == KK_STATUS_OK);
    CHECK(fabs(k.q_g - 0.316762381) < 1e-8);

    KkEquilibria *eqs = NULL;
    CHECK(kk_equilibria_find(0.16, 0.133886021, 0.204071932, &eqs) == KK_STATUS_OK);
    CHECK(kk_equilibria_len(eqs) == 3);
    KkEquilibrium e;
    CHECK(kk_equilibria_get(eqs, 1, &e) == KK_STATUS_OK);
    CHECK(e.kind == KK_EQUILIBRIUM_KIND_UNSTABLE_FOCUS);
    CHECK(kk_equilibria_get(eqs, 3, &e) == KK_STATUS_OUT_OF_RANGE);
    kk_equilibria_free(eqs);

    CHECK(kk_equilibria_find(0.16, 0.1, -2.0, &eqs) == KK_STATUS_DOMAIN);
    CHECK(eqs == NULL);
    size_t need = kk_last_error(NULL, 0);
    char *msg = malloc(need);
    CHECK(kk_last_error(msg, need) == need);
    CHECK(msg[need - 1] == '\0');
    free(msg);

    KkHopfCurve *h = NULL;
    CHECK(kk_hopf_from_bt(0.15, 20000, &h) == KK_STATUS_OK);
    CHECK(kk_hopf_gh_count(h) == 1);
    KkBtPoint end;
    CHECK(kk_hopf_bt(h, 1, &end) == KK_STATUS_OK);
    CHECK(end.branch == KK_BRANCH_GAMMA_PLUS);
    kk_hopf_free(h);

    printf("kkwave %s C smoke test passed\n", kk_version());
    return 0;
}

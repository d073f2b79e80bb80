#include <stdio.h>
#include "foldq.h"

int main(void) {
    FoldqPolynomial *p = NULL, *q = NULL;
    FoldqIsing *m = NULL;
    char *samples = NULL;
    if (foldq_polynomial_fixture("exp6", &p) != FOLDQ_STATUS_OK) return 1;
    if (foldq_polynomial_quadratize(p, "q1q2=6,q3q4=4", &q) != FOLDQ_STATUS_OK) return 1;
    printf("arity %zu\n", foldq_polynomial_arity(q));
    if (foldq_ising_from_polynomial(q, &m) != FOLDQ_STATUS_OK) return 1;
    printf("spins %zu\n", foldq_ising_num_spins(m));
    if (foldq_solve_sa(m, 10, 100, 0.1, 10.0, 1, &samples) != FOLDQ_STATUS_OK) return 1;
    foldq_string_free(samples);
    FoldqStatus s = foldq_polynomial_fixture("missing", &p);
    printf("error %d\n", (int)s);
    if (foldq_last_error() == NULL) return 1;
    foldq_ising_free(m);
    foldq_polynomial_free(q);
    foldq_polynomial_free(p);
    return 0;
}

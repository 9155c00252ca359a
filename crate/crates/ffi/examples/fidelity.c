#include <stdio.h>
#include "optoloss.h"
int main(void) {
    OptolossComplex alpha = {1.0, 0.0};
    double f = 0.0, lo = 0.0, hi = 0.0;
    if (optoloss_cat_fidelity(alpha, 0.5, 0.05, &f) != OPTOLOSS_STATUS_OK) return 1;
    if (optoloss_fidelity_bounds(alpha, 0.05, &lo, &hi) != OPTOLOSS_STATUS_OK) return 1;
    if (optoloss_cat_fidelity(alpha, 0.5, -1.0, &f) != OPTOLOSS_STATUS_DOMAIN) return 1;
    printf("%s|%.6f|%d\n", optoloss_version(), lo, lo <= hi);
    return 0;
}

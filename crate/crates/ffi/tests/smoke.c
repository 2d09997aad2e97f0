#include <math.h>
#include <stdio.h>
#include "mixlab.h"

int main(void) {
    double centers[2] = {0.5, 0.5}, radii[1] = {0.3};
    MixlabTable *t = NULL;
    if (mixlab_table_lorentz(centers, radii, 1, &t) != MIXLAB_STATUS_OK) {
        fprintf(stderr, "%s\n", mixlab_last_error());
        return 1;
    }
    MixlabCollision x[4], y;
    double h;
    if (mixlab_sample_invariant(t, 1, 4, x) != MIXLAB_STATUS_OK) return 2;
    for (int i = 0; i < 4; i++) {
        if (mixlab_billiard_map(t, &x[i], &y, &h) != MIXLAB_STATUS_OK || !(h > 0.0)) return 3;
    }
    mixlab_table_free(t);
    const double roof[2] = {1.0, 0.5};
    MixlabGm *gm = NULL;
    double re, im;
    if (mixlab_gm_new("doubling", 0.0, roof, 2, &gm) != MIXLAB_STATUS_OK) return 4;
    if (mixlab_gm_leading_eigenvalue(gm, 0.0, 0.0, 32, &re, &im) != MIXLAB_STATUS_OK) return 5;
    mixlab_gm_free(gm);
    if (fabs(re - 1.0) > 1e-8) return 6;
    printf("mixlab %s ok\n", mixlab_version());
    return 0;
}

/* Minimal consumer of the C ABI: run the reference transfer, print the
 * final populations and the closed-form report.
 *
 * Build (from the workspace root, after `cargo build -p stirap-capi --release`):
 *   cc crates/capi/examples/demo.c -Icrates/capi/include \
 *      -Ltarget/release -lstirap_capi -lm -o demo
 *   LD_LIBRARY_PATH=target/release ./demo
 */

#include <stdio.h>
#include <stdlib.h>

#include "stirap.h"

static int check(StirapStatus status, const char *what) {
    if (status != STIRAP_STATUS_OK) {
        fprintf(stderr, "%s failed (%d): %s\n", what, (int)status,
                stirap_last_error_message());
        return 1;
    }
    return 0;
}

int main(void) {
    StirapParams params;
    if (check(stirap_params_single_default(&params), "defaults")) return 1;

    StirapTrajectory *traj = NULL;
    if (check(stirap_run_single(&params, NULL, &traj), "run")) return 1;

    size_t len = 0, dim = 0;
    stirap_trajectory_len(traj, &len);
    stirap_trajectory_dim(traj, &dim);

    double final_pops[8] = {0};
    if (check(stirap_trajectory_final_populations(traj, final_pops, dim),
              "final populations")) {
        stirap_trajectory_free(traj);
        return 1;
    }
    printf("records: %zu\n", len);
    printf("P0(T) = %.9f  P1(T) = %.9f  Pe(T) = %.9f\n", final_pops[0],
           final_pops[1], final_pops[2]);
    stirap_trajectory_free(traj);

    double closed = 0.0, numeric = 0.0;
    if (check(stirap_max_excited_population(&params, &closed, &numeric),
              "peak excited population")) return 1;
    printf("peak Pe: closed form %.6e, numeric %.6e\n", closed, numeric);

    double integral = 0.0, fidelity = 0.0;
    if (check(stirap_perturbative_fidelity(&params, &integral, &fidelity),
              "perturbative fidelity")) return 1;
    printf("dephasing integral %.6e, fidelity estimate %.9f\n", integral,
           fidelity);

    double success = 0.0;
    stirap_distillation_success(0.2, &success);
    printf("distillation success at 20%% loss: %.3f\n", success);
    return 0;
}

/* Build: cargo build -p dualpure-ffi --release
 * cc -I crates/ffi/include crates/ffi/examples/bell.c \
 *    target/release/libdualpure_ffi.a -lpthread -ldl -lm -o bell */
#include <stdio.h>

#include "dualpure.h"

int main(void) {
    DpCircuit *c = NULL;
    if (dp_circuit_parse("QUBITS 2\nH 0\nCX 0 1\n", &c) != DP_STATUS_OK) {
        fprintf(stderr, "%s\n", dp_last_error_message());
        return 1;
    }
    DpNoiseModel *nm = NULL;
    dp_noise_sample_appe(3, 0.05, 7, &nm);

    DpEstimateOptions opts = dp_estimate_options_default();
    DpMethod methods[] = {DP_METHOD_RAW, DP_METHOD_DSP, DP_METHOD_TP};
    const char *names[] = {"raw", "dsp", "tp"};
    for (int i = 0; i < 3; i++) {
        DpEstimate e;
        DpStatus st = dp_estimate(c, "ZZ", nm, methods[i], &opts, &e);
        if (st != DP_STATUS_OK) {
            fprintf(stderr, "%s\n", dp_last_error_message());
            return (int)st;
        }
        printf("%s %.6f\n", names[i], e.value);
    }
    dp_noise_free(nm);
    dp_circuit_free(c);
    return 0;
}

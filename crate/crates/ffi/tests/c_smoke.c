#include <math.h>
#include <stdio.h>
#include <string.h>

#include "qriccati.h"

static const char *TANH =
    "{\"T\": 1, \"a\": {\"c0\": {\"const\": 1}}, \"d\": {\"c0\": {\"const\": -1}}}";

int main(void) {
    QrSystem *sys = NULL;
    if (qr_system_from_json(TANH, &sys) != QR_OK) {
        fprintf(stderr, "parse: %s\n", qr_last_error());
        return 1;
    }
    QrFindOptions opts = qr_find_options_default();
    QrQuaternion q0;
    uint32_t m0 = 0;
    double residual = 1.0;
    char *json = NULL;
    QrStatus s = qr_find_periodic(sys, &opts, &q0, &m0, &residual, &json);
    if (s != QR_OK) {
        fprintf(stderr, "find: %d %s\n", (int)s, qr_last_error());
        return 2;
    }
    if (fabs(q0.w - 1.0) > 1e-6 || residual >= 1e-8 || json == NULL || strstr(json, "\"route\"") == NULL) {
        return 3;
    }
    qr_string_free(json);
    if (qr_system_from_json("{}", &sys) != QR_INVALID_INPUT || qr_last_error() == NULL) {
        return 4;
    }
    qr_system_free(sys);
    printf("ok %s\n", qr_version());
    return 0;
}

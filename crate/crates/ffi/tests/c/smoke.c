#include <stdio.h>
#include <string.h>

#include "approxk.h"

static const char *SCENARIO =
    "{\"schema\": 1, \"name\": \"diag\", \"ambient\": {\"kind\": \"matrix\", \"dim\": 2},"
    " \"algebras\": {\"c\": {\"kind\": \"full\"}, \"d\": {\"kind\": \"full\"}},"
    " \"elements\": {\"p\": {\"op\": \"unit\", \"n\": 2, \"i\": 0, \"j\": 0},"
    "                \"q\": {\"op\": \"unit\", \"n\": 2, \"i\": 1, \"j\": 1}},"
    " \"checks\": [{\"name\": \"same_rank\", \"kind\": \"iota_lift\", \"p\": \"p\", \"q\": \"q\", \"expect\": {}}]}";

#define EXPECT(cond)                                                   \
    do {                                                               \
        if (!(cond)) {                                                 \
            fprintf(stderr, "line %d: %s (%s)\n", __LINE__, #cond,     \
                    approxk_last_error());                             \
            return 1;                                                  \
        }                                                              \
    } while (0)

int main(void) {
    ApproxkOptions opts = approxk_options_default();
    opts.jobs = 2;
    ApproxkReport *report = NULL;
    EXPECT(approxk_run_scenario(SCENARIO, &opts, &report) == APPROXK_STATUS_OK);
    EXPECT(report != NULL);
    EXPECT(approxk_report_passed(report));
    EXPECT(approxk_report_check_count(report) == 1);
    EXPECT(approxk_report_failed_count(report) == 0);
    EXPECT(strstr(approxk_report_json(report), "\"same_rank\"") != NULL);
    EXPECT(strncmp(approxk_report_csv(report), "name,kind,passed,error", 22) == 0);
    approxk_report_free(report);

    ApproxkReport *bad = NULL;
    EXPECT(approxk_run_scenario("{\"schema\": 2}", NULL, &bad) == APPROXK_STATUS_INVALID_INPUT);
    EXPECT(bad == NULL);
    EXPECT(strlen(approxk_last_error()) > 0);

    double re[4] = {1.0, 1e-3, 0.0, 0.0};
    double im[4] = {0.0, 0.0, 0.0, 1e-4};
    double out_re[4], out_im[4];
    ApproxkRieszCert cert;
    EXPECT(approxk_riesz_round(re, im, 2, out_re, out_im, &cert) == APPROXK_STATUS_OK);
    EXPECT(cert.passed && cert.distance <= cert.bound);

    double half[4] = {0.5, 0.0, 0.0, 0.5};
    int code = approxk_riesz_round(half, im, 2, NULL, NULL, NULL);
    EXPECT(code == APPROXK_STATUS_DEFECT_TOO_LARGE);
    EXPECT(strcmp(approxk_status_name(code), "DefectTooLarge") == 0);
    printf("ok %s\n", approxk_version());
    return 0;
}

#include <stdio.h>
#include <string.h>

#include "rcfm.h"

#define CHECK(cond)                                              \
    do {                                                         \
        if (!(cond)) {                                           \
            fprintf(stderr, "line %d: %s\n", __LINE__, #cond);   \
            return 1;                                            \
        }                                                        \
    } while (0)

int main(void) {
    RcfmMatrix *x = NULL, *y = NULL, *yx = NULL;
    CHECK(rcfm_matrix_parse("S(-1)", &x) == RCFM_STATUS_OK);
    CHECK(rcfm_matrix_parse("S(1)", &y) == RCFM_STATUS_OK);
    CHECK(rcfm_matrix_mul(y, x, &yx) == RCFM_STATUS_OK);

    char *e = NULL;
    CHECK(rcfm_matrix_entry(yx, 1, 1, &e) == RCFM_STATUS_OK);
    CHECK(strcmp(e, "0") == 0);
    rcfm_string_free(e);

    RcfmIndex idx;
    CHECK(rcfm_index(x, 0, 0, &idx) == RCFM_STATUS_OK);
    CHECK(idx.index == 1 && idx.kernel_dim == 1 && idx.certified);

    RcfmVerdict v;
    CHECK(rcfm_classify(x, y, 0, &v) == RCFM_STATUS_OK);
    CHECK(!v.trivial && v.index == 1);

    RcfmMatrix *bad = NULL;
    RcfmStatus st = rcfm_matrix_parse("S(", &bad);
    CHECK(st == RCFM_STATUS_PARSE && bad == NULL);
    CHECK(strcmp(rcfm_status_name(st), "parse") == 0);
    CHECK(rcfm_last_error_message() != NULL);

    const char *argv[] = {"--json", "index", "T(1)"};
    int32_t code = -1;
    char *report = NULL;
    CHECK(rcfm_run(argv, 3, &code, &report) == RCFM_STATUS_OK);
    CHECK(code == 0 && strstr(report, "\"index\": -1") != NULL);
    rcfm_string_free(report);

    rcfm_matrix_free(x);
    rcfm_matrix_free(y);
    rcfm_matrix_free(yx);
    puts("ok");
    return 0;
}

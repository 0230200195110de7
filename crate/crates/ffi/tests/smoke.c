#include <stdio.h>
#include <string.h>
#include "btp_ffi.h"

static const char *N3 =
    "{\"name\":\"N3\",\"n\":3,\"terms\":["
    "{\"k\":3,\"type\":\"pm\",\"i\":1,\"j\":1,\"re\":1,\"im\":0},"
    "{\"k\":3,\"type\":\"pm\",\"i\":2,\"j\":2,\"re\":-1,\"im\":0}]}";

int main(void) {
    BtpStructure *s = NULL;
    if (btp_structure_parse((const uint8_t *)N3, strlen(N3), &s) != BTP_STATUS_OK) return 1;
    if (btp_structure_dimension(s) != 3) return 2;

    BtpReport *r = NULL;
    if (btp_classify(s, 1e-9, &r) != BTP_STATUS_OK) return 3;
    bool btp = false, balanced = false;
    if (btp_report_flag(r, "btp_direct", &btp) != BTP_STATUS_OK || !btp) return 4;
    if (btp_report_flag(r, "balanced", &balanced) != BTP_STATUS_OK || !balanced) return 5;
    if (btp_report_flag(r, "no_such_flag", &btp) != BTP_STATUS_UNKNOWN_NAME) return 6;

    char *json = btp_report_json(r);
    if (json == NULL || strstr(json, "\"btp_direct\":true") == NULL) return 7;
    btp_string_free(json);
    btp_report_free(r);
    btp_structure_free(s);

    if (btp_structure_parse((const uint8_t *)"{", 1, &s) != BTP_STATUS_PARSE) return 8;
    if (strlen(btp_last_error()) == 0) return 9;
    printf("ok\n");
    return 0;
}

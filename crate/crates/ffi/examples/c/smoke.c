#include <stdio.h>
#include "ddos_ffi.h"

int main(void) {
    DdosDataset *ds = NULL;
    if (ddos_dataset_synth("benign=20,ddos=10,features=4", &ds) != DDOS_STATUS_OK) {
        fprintf(stderr, "synth: %s\n", ddos_last_error_message());
        return 1;
    }
    size_t rows = 0, cols = 0, benign = 0, ddos = 0;
    ddos_dataset_rows(ds, &rows);
    ddos_dataset_cols(ds, &cols);
    ddos_dataset_label_counts(ds, &benign, &ddos);
    ddos_dataset_free(ds);

    const uint8_t y[] = {1, 0, 1, 0};
    const double s[] = {0.9, 0.1, 0.4, 0.3};
    double auc = 0.0;
    if (ddos_metrics_roc_auc(y, s, 4, &auc) != DDOS_STATUS_OK) {
        return 1;
    }
    if (ddos_dataset_rows(NULL, &rows) != DDOS_STATUS_NULL_POINTER) {
        return 1;
    }
    printf("rows=%zu cols=%zu benign=%zu ddos=%zu auc=%.3f\n", rows, cols, benign, ddos, auc);
    return 0;
}

#include <math.h>
#include <stdio.h>
#include "uwbdetect.h"

int main(void) {
    double x[3] = {2.0, 4.0, 6.0};
    double z[3];
    if (uwb_standardize(x, 3, z) != UWB_STATUS_OK) return 1;
    if (fabs(z[0] + 1.2247449) > 1e-6 || fabs(z[1]) > 1e-12) return 2;

    double flat[3] = {1.0, 1.0, 1.0};
    if (uwb_standardize(flat, 3, z) != UWB_STATUS_DEGENERATE_SCAN) return 3;
    if (uwb_last_error() == NULL) return 4;

    UwbDataset *raw = NULL, *mf = NULL, *std = NULL;
    size_t dropped = 0, n = 0, bins = 0;
    if (uwb_dataset_generate(UWB_ENVIRONMENT_OUTDOOR, UWB_SCHEME_SIMPLE4, 4, 9, &raw) != UWB_STATUS_OK) return 5;
    if (uwb_dataset_derive(raw, UWB_DATA_TYPE_MOTION_FILTERED, &mf, &dropped) != UWB_STATUS_OK) return 6;
    if (uwb_dataset_standardize(mf, &std, &dropped) != UWB_STATUS_OK) return 7;
    if (uwb_dataset_shape(std, &n, &bins) != UWB_STATUS_OK || n != 16) return 8;

    UwbModel *m = NULL;
    if (uwb_model_fit(UWB_ESTIMATOR_K_NEAREST_NEIGHBORS, "{\"n_neighbors\": 1}", 0, std, &m) != UWB_STATUS_OK) return 9;
    uwb_model_free(m);
    uwb_dataset_free(std);
    uwb_dataset_free(mf);
    uwb_dataset_free(raw);
    printf("ok\n");
    return 0;
}

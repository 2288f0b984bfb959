#include <math.h>
#include <stdio.h>
#include <string.h>

#include "ebnc.h"

static const char *NET =
    "variables\n"
    "Y: no,yes\n"
    "A: f,t\n"
    "B: f,t\n"
    "\n"
    "edges\n"
    "Y -> A\n"
    "Y -> B\n"
    "\n"
    "cpt Y\n0.4 0.6\n"
    "cpt A\n0.8 0.2\n0.3 0.7\n"
    "cpt B\n0.75 0.25\n0.35 0.65\n";

int main(void) {
    EbncNetwork *net = NULL;
    EbncClassifier *cls = NULL;
    if (ebnc_network_parse(NET, &net) != EBNC_STATUS_OK) return 1;
    if (ebnc_classifier_new(net, "Y", &cls) != EBNC_STATUS_OK) return 2;
    ebnc_network_free(net);

    size_t x[2] = {1, 1};
    double p[2];
    if (ebnc_classifier_posterior(cls, x, 2, p, 2) != EBNC_STATUS_OK) return 3;
    double joint_yes = 0.6 * 0.7 * 0.65, joint_no = 0.4 * 0.2 * 0.25;
    if (fabs(p[1] - joint_yes / (joint_yes + joint_no)) > 1e-12) return 4;

    size_t d = 0;
    if (ebnc_dimension(cls, EBNC_METHOD_BLOCKWISE, 0, &d) != EBNC_STATUS_OK || d != 3) return 5;

    size_t bad[1] = {0};
    if (ebnc_classifier_posterior(cls, bad, 1, p, 2) == EBNC_STATUS_OK) return 6;
    if (ebnc_last_error() == NULL) return 7;

    ebnc_classifier_free(cls);
    printf("ok\n");
    return 0;
}

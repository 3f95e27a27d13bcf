"""Wandering intervals: path sums for a model decay and the verdict on H_2."""

from metanil import catalog, dkn_verdict, glue, make_params, path_sum_search
from metanil.regularity import DeclaredDecay


def length(v):
    return (1 + sum(abs(c) for c in v)) ** -2.2


for beta in (1.0, 0.6, 0.4):
    print(path_sum_search(length, 2, beta, 2000, decay=DeclaredDecay(1, 2.2)))

p = catalog("heisenberg:2")
a = glue(p, make_params(0.45, p.k, p.d)).copies[0]
for beta in (0.75, 0.45):
    print(dkn_verdict(a, "C", ((0, 0), 0), ["X1", "X2"], beta))

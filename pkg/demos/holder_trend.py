"""Hölder quotients of X1 in the H_2 realization built for exponent 0.45.

Below 1/2 the sup stays flat as more blocks are sampled; above 1/2 it grows.
Takes about half a minute.
"""

from metanil import catalog, glue, holder_report, make_params

p = catalog("heisenberg:2")
g = glue(p, make_params(0.45, p.k, p.d))
print(g.certificate)

a = g.copies[0]
for exponent in (0.45, 0.75):
    print(holder_report(a, "X1", exponent, levels=(0, 12, 24)))

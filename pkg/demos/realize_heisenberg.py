"""Heisenberg group H_1 acting on [0, 1]: evaluate generators and check [f, Y] = C."""

from metanil import build, catalog, make_params, verify_relations
from metanil.group import parse_word

p = catalog("heisenberg:1")
params = make_params(0.45, p.k, p.d)
print(params.describe())

a = build(p, 1, params)
for name in ("f", "Y", "C"):
    for x in (0.25, 0.5, 0.75):
        y, dy = a.evaluate(parse_word(name), x)
        print(f"{name}({x}) = {float(y):.12f}   D{name} = {float(dy):.12f}")

rep = verify_relations(a, [(parse_word("[f,Y]"), parse_word("C"))], n_samples=300)
print(rep)

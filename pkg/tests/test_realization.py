import csv
import random

import mpmath
import pytest

from metanil.catalog import catalog
from metanil.coset import BoxIndex
from metanil.group import parse_word
from metanil.intervals import make_params
from metanil.realization import LocalPoint, build, glue, verify_relations
from oracles import random_word

H1 = catalog("heisenberg:1")
H2 = catalog("heisenberg:2")


@pytest.fixture(scope="module")
def h1():
    return build(H1, 1, make_params(0.45, 1, 2))


@pytest.fixture(scope="module")
def h2():
    return build(H2, 1, make_params(0.45, 2, 3))


def test_commutator_relation(h1):
    rep = verify_relations(h1, [(parse_word("[f,Y]"), parse_word("C"))], n_samples=300)
    assert rep.samples == 300
    assert rep.max_error <= 1e-6


def test_heisenberg_two_relation(h2):
    rep = verify_relations(h2, [(parse_word("[X1,Y2]"), [])], n_samples=500)
    assert rep.max_error <= 1e-6


def test_grid_relation():
    p = catalog("grid:2,1,[[2]]")
    a = build(p, 1, make_params(0.45, 1, 2))
    rel = (parse_word("f g1,2 f^-1 g1,2^-1"), parse_word("g1,1^2"))
    assert verify_relations(a, [rel], n_samples=200).max_error <= 1e-6


def test_trivial_relation_is_exact(h1):
    w = parse_word("f Y^2 C^-1")
    rep = verify_relations(h1, [(w, w)], n_samples=100)
    assert rep.max_error == 0


def test_empty_word(h1):
    pts, _ = h1.sample_points(50, seed=3)
    for pt in pts:
        img, d = h1.evaluate_local([], pt)
        assert img == pt and d == 1
    y, d = h1.evaluate([], 0.3)
    assert abs(y - 0.3) <= 2 * h1.params.eps_pos and d == 1


def test_fixes_endpoints(h1):
    for x in (0, 1):
        assert h1.evaluate(parse_word("f Y"), x) == (x, 1)


@pytest.mark.parametrize("i", [-(10**4), -(10**6), 10**4, 10**6])
def test_tangent_to_identity_at_ends(h1, i):
    for j in (0, 40):
        for u in (0.1, 0.5, 0.9):
            _, d = h1.evaluate_local([("f", 1)], LocalPoint(BoxIndex((i,), j), mpmath.mpf(u)))
            assert abs(d - 1) <= 1e-3


def test_box_images(h1):
    sy = h1.system
    eps = h1.params.eps_pos
    rng = random.Random(0)
    for _ in range(100):
        w = BoxIndex((rng.randint(-20, 20),), rng.randint(-200, 200))
        for kind, idx in h1.action.generators():
            v, left, right = h1.image_of_box(kind, idx, w)
            assert v == h1.action.act_generator(kind, idx, w, 1)
            for got, want in ((left, sy.position(v)), (right, sy.position((v.i, v.j + 1)))):
                assert abs(got.mid - want.mid) <= 2 * eps
            # the chart map sends the left end of I_w to the left end of its image
            img, _ = h1.step(kind, idx, 1, LocalPoint(w, mpmath.mpf(0)))
            assert img == LocalPoint(v, 0)


def test_monotone_and_positive(h1):
    pts, _ = h1.sample_points(200, seed=1)
    xs = sorted(pts, key=lambda pt: (pt.box.i, pt.box.j, pt.u))
    for word in (parse_word("f"), parse_word("Y^-2 f"), parse_word("[f,Y]")):
        imgs = [h1.evaluate_local(word, pt) for pt in xs]
        assert all(d > 0 for _, d in imgs)
        keys = [(q.box.i, q.box.j, q.u) for q, _ in imgs]
        assert keys == sorted(keys)


def test_homomorphism(h2):
    rng = random.Random(4)
    pts, _ = h2.sample_points(100, seed=2)
    names = H2.generator_names()
    for pt in pts:
        u, v = random_word(rng, names, 4, 2), random_word(rng, names, 4, 2)
        whole, d_whole = h2.evaluate_local(u + v, pt)
        inner, d_inner = h2.evaluate_local(v, pt)
        outer, d_outer = h2.evaluate_local(u, inner)
        assert whole.box == outer.box
        assert abs(whole.u - outer.u) <= 1e-15
        assert abs(d_whole / (d_inner * d_outer) - 1) <= 1e-12


def test_parameter_mismatch():
    with pytest.raises(ValueError):
        build(H2, 1, make_params(0.45, 1, 2))


def test_glue_certificate():
    for gid in ("heisenberg:1", "heisenberg:2"):
        p = catalog(gid)
        g = glue(p, make_params(0.45, p.k, p.d))
        assert g.certificate.ok
        z, pivot, shift = g.certificate.witnesses[0]
        assert z == p.letter("C") and pivot == 1 and shift == 1
        assert "passes" in str(g.certificate)


def test_glue_abelian():
    p = catalog("abelian:3")
    g = glue(p, make_params(0.45, 0, 3))
    assert g.certificate.ok
    for s in range(1, 4):
        gs = p.g(s)
        moved = [c.pivot for c in g.copies if c.action.act(gs, BoxIndex((), 0)) != BoxIndex((), 0)]
        assert moved == [s]


def test_glued_action_is_faithful_on_random_elements():
    p = H2
    g = glue(p, make_params(0.45, 2, 3))
    rng = random.Random(8)
    for _ in range(1000):
        e = p.normal_form(random_word(rng, p.generator_names(), 8, 3))
        if e != p.identity:
            assert g.nontrivial_witness(e) is not None
    assert g.nontrivial_witness(p.identity) is None


def test_glue_wrong_count():
    with pytest.raises(ValueError):
        glue(H1, [make_params(0.45, 1, 2)])


def test_glued_carriers(h1):
    g = glue(H1, make_params(0.45, 1, 2))
    assert [float(a) for a, _ in g.carriers] == [0.0, 0.5]
    # the junction is the left end of the second carrier, fixed by every generator
    assert g.evaluate(parse_word("f"), 0.5) == (0.5, 1)
    assert g.evaluate(parse_word("f"), 0) == (0, 1)


def test_export(h1, tmp_path):
    path = tmp_path / "r.csv"
    h1.export_csv(path, n=10)
    rows = list(csv.reader(open(path)))
    assert rows[0] == ["generator", "x", "gx", "dgx"]
    assert len(rows) == 1 + 10 * 3
    assert all(float(r[3]) > 0 for r in rows[1:])

"""Acceptance criteria 1-11, one PASS/FAIL line each at the stated tolerance."""

import random
import time

import mpmath
import pytest

from metanil import lattice as lt
from metanil.catalog import catalog
from metanil.charts import verify_chart_properties
from metanil.coset import BoxIndex, CosetAction, Order, check_pivot_shifts, lex_compare
from metanil.group import parse_word
from metanil.intervals import AmbiguousLocation, make_params, system
from metanil.realization import build, glue, verify_relations
from metanil.regularity import DeclaredDecay, dkn_verdict, holder_report, path_sum_search, replay
from metanil.structure import structure, triangularize
from oracles import heisenberg_element_matrix, heisenberg_word_matrix, random_word
from test_structure import is_unitriangular, random_unimodular

CATALOG = [
    "heisenberg:1",
    "heisenberg:2",
    "heisenberg:3",
    "chain:3",
    "chain:4",
    "grid:2,1,[[2]]",
    "grid:3,2,[[1,1],[1,2]]",
    "grid:2,2,[[1,2],[3,1]]",
    "product:heisenberg:1;chain:3",
    "abelian:2",
]


@pytest.fixture
def verdict(capsys):
    def emit(n, checks, seconds, limit):
        checks = dict(checks)
        checks[f"runtime {seconds:.1f}s < {limit}s"] = seconds < limit
        ok = all(checks.values())
        failed = [name for name, good in checks.items() if not good]
        line = f"criterion {n}: {'PASS' if ok else 'FAIL'}"
        detail = "; ".join(failed if failed else checks)
        with capsys.disabled():
            print(f"\n{line} ({detail})")
        assert ok, f"criterion {n} failed: {'; '.join(failed)}"

    return emit


def test_criterion_1_oracle_equivalence(verdict):
    t0 = time.perf_counter()
    bad = 0
    for n in (1, 2, 3):
        p = catalog(f"heisenberg:{n}")
        names = [f"X{t}" for t in range(1, n + 1)] + ["C"] + [f"Y{t}" for t in range(1, n + 1)]
        rng = random.Random(100 + n)
        for _ in range(10**4):
            w = random_word(rng, names, max_len=12)
            if not (heisenberg_element_matrix(n, p.normal_form(w)) == heisenberg_word_matrix(n, w)).all():
                bad += 1
    verdict(1, {f"{bad} mismatches in 3x10^4 words": bad == 0}, time.perf_counter() - t0, 10)


def test_criterion_2_structure(verdict):
    t0 = time.perf_counter()
    checks = {}
    for n in (1, 2, 3):
        rep = structure(catalog(f"heisenberg:{n}"))
        checks[f"heisenberg:{n} degree {rep.degree}, center rank {rep.center_rank}"] = (
            rep.degree == 2 and rep.center_rank == 1
        )
    for d, k, M in ((2, 1, "[[1]]"), (3, 2, "[[1,1],[1,2]]"), (4, 2, "[[1,1],[1,2]]")):
        deg = structure(catalog(f"grid:{d},{k},{M}")).degree
        checks[f"grid:{d},{k} degree {deg}"] = deg == d + 1
    tau = structure(catalog("heisenberg:1")).growth_degree
    checks[f"heisenberg:1 growth degree {tau}"] = tau == 4
    verdict(2, checks, time.perf_counter() - t0, 10)


def test_criterion_3_triangularization(verdict):
    t0 = time.perf_counter()
    bad = 0
    for gid in ("heisenberg:2", "grid:3,2,[[1,1],[1,2]]"):
        p = catalog(gid)
        rng = random.Random(3)
        for _ in range(50):
            P0 = random_unimodular(rng, p.d)
            P0inv = lt.inverse(P0)
            raw = [lt.mat_mul(P0, lt.mat_mul([list(r) for r in A], P0inv)) for A in p.conj]
            P, new = triangularize(raw)
            Pinv = lt.inverse(P)
            ok = (
                abs(lt.det(P)) == 1
                and all(is_unitriangular(A) for A in new)
                and all(lt.mat_mul(P, lt.mat_mul(A, Pinv)) == B for A, B in zip(raw, new))
            )
            bad += not ok
    verdict(3, {f"{bad} of 100 scrambles wrong": bad == 0}, time.perf_counter() - t0, 30)


def test_criterion_4_coset_action(verdict):
    t0 = time.perf_counter()
    checks = {}
    shift_bad, law_bad, worst_excess = [], 0, -1e9
    for gid in CATALOG:
        p = catalog(gid)
        for s in range(1, p.d + 1):
            if check_pivot_shifts(CosetAction(p, s), 10) is not None:
                shift_bad.append(f"{gid} s={s}")
        rng = random.Random(4)
        names = p.generator_names()
        for _ in range(1000):
            a = CosetAction(p, rng.randint(1, p.d))
            g = p.normal_form(random_word(rng, names, 6, 3))
            h = p.normal_form(random_word(rng, names, 6, 3))
            w, v = (BoxIndex(tuple(rng.randint(-8, 8) for _ in range(p.k)), rng.randint(-20, 20)) for _ in "wv")
            if a.act(p.multiply(g, h), w) != a.act(g, a.act(h, w)):
                law_bad += 1
            if lex_compare(w, v) is Order.GT:
                w, v = v, w
            if w != v and lex_compare(a.act(g, w), a.act(g, v)) is not Order.LT:
                law_bad += 1
        if p.k:
            _, slope = CosetAction(p, 1).fit_bound(10)
            worst_excess = max(worst_excess, slope - p.d)
    checks[f"pivot shifts exact ({len(shift_bad)} failures)"] = not shift_bad
    checks[f"{law_bad} order/homomorphism failures"] = law_bad == 0
    checks[f"max slope - d = {worst_excess:.3f} <= 0.1"] = worst_excess <= 0.1
    verdict(4, checks, time.perf_counter() - t0, 120)


def test_criterion_5_parameters(verdict):
    t0 = time.perf_counter()
    prm = make_params(0.45, 2, 3)
    try:
        make_params(0.5, 2, 3)
        rejected = False
    except ValueError:
        rejected = True
    checks = {
        f"p={tuple(map(str, prm.p))}, r={prm.r}": prm.p == (20, 20) and str(prm.r) == "9/8",
        f"failed conditions {prm.failed_conditions()}": not prm.failed_conditions(),
        "alpha = 1/k rejected": rejected,
    }
    verdict(5, checks, time.perf_counter() - t0, 1)


def test_criterion_6_measure(verdict):
    t0 = time.perf_counter()
    a = system(make_params(0.45, 1, 2, trunc=1000)).total_mass()
    b = system(make_params(0.45, 1, 2, trunc=10000)).total_mass()
    prm = make_params(0.45, 1, 2)
    sy = system(prm)
    rng = random.Random(6)
    worst_gap, hits, wrong, n = 0, 0, 0, 1000
    for _ in range(n):
        w = ((rng.randint(-40, 40),), rng.randint(-500, 500))
        gap = sy.position((w[0], w[1] + 1)) - sy.position(w) - sy.normalized_length(w)
        worst_gap = max(worst_gap, float(max(abs(gap.lo), abs(gap.hi))))
        x = sy.position(w).mid + sy.normalized_length(w).mid / 2
        try:
            got = sy.locate(x)
        except AmbiguousLocation:
            continue
        hits += 1
        wrong += got != w
    checks = {
        f"total mass {mpmath.nstr(a.mid, 15)} and {mpmath.nstr(b.mid, 15)} overlap": a.overlaps(b),
        f"max gap {worst_gap:.2e} <= 2 eps_pos": worst_gap <= 2 * prm.eps_pos,
        f"locate roundtrip {hits - wrong}/{hits} resolvable": wrong == 0 and hits > 0.8 * n,
    }
    verdict(6, checks, time.perf_counter() - t0, 120)


def test_criterion_7_charts(verdict):
    t0 = time.perf_counter()
    rep = verify_chart_properties(1000, (1e-3, 1e3), seed=0, prec=64)
    checks = {
        f"cocycle error {rep.cocycle_error:.2e} <= 1e-12": rep.cocycle_error <= 1e-12,
        f"endpoint error {rep.endpoint_error:.2e} <= 2^-52": rep.endpoint_error <= 2.0**-52,
        f"property-3 constant {rep.property3_constant:.4g} vs {rep.property3_enlarged:.4g} on 10x": rep.property3_stable,
    }
    verdict(7, checks, time.perf_counter() - t0, 60)


def test_criterion_8_realization(verdict):
    t0 = time.perf_counter()
    prm = make_params(0.45, 1, 2)
    a = build(catalog("heisenberg:1"), 1, prm)
    rep = verify_relations(a, [(parse_word("[f,Y]"), parse_word("C"))], n_samples=1000)
    sy = a.system
    rng = random.Random(8)
    worst = 0
    for _ in range(100):
        w = BoxIndex((rng.randint(-30, 30),), rng.randint(-300, 300))
        for kind, idx in a.action.generators():
            v, left, right = a.image_of_box(kind, idx, w)
            for got, want in ((left, sy.position(v)), (right, sy.position((v.i, v.j + 1)))):
                worst = max(worst, float(abs(got.mid - want.mid)))
    checks = {
        f"[f,Y] = C max error {rep.max_error:.2e} <= 1e-6 on {rep.samples} points": (
            rep.max_error <= 1e-6 and rep.samples == 1000
        ),
        f"image consistency {worst:.2e} <= 2 eps_pos": worst <= 2 * prm.eps_pos,
    }
    verdict(8, checks, time.perf_counter() - t0, 300)


def test_criterion_9_holder_trend(verdict):
    t0 = time.perf_counter()
    a = glue(catalog("heisenberg:2"), make_params(0.45, 2, 3)).copies[0]
    low = holder_report(a, "X1", 0.45, levels=(0, 12, 24))
    high = holder_report(a, "X1", 0.75, levels=(0, 12, 24))
    fmt = lambda r: "/".join(f"{s:.3g}" for s in r.sups())  # noqa: E731
    checks = {
        f"exponent 0.45 {low.trend} ({fmt(low)})": low.sups()[-1] <= 2 * low.sups()[0],
        f"exponent 0.75 {high.trend} ({fmt(high)})": high.sups()[-1] >= 10 * high.sups()[0],
    }
    verdict(9, checks, time.perf_counter() - t0, 600)


def test_criterion_10_obstruction(verdict):
    t0 = time.perf_counter()

    def length(v):
        return (1 + sum(abs(c) for c in v)) ** -2.2

    conv = path_sum_search(length, 2, 0.6, 2000, decay=DeclaredDecay(1, 2.2))
    div = path_sum_search(length, 2, 0.4, 2000, decay=DeclaredDecay(1, 2.2))
    a = glue(catalog("heisenberg:2"), make_params(0.45, 2, 3)).copies[0]
    v = dkn_verdict(a, "C", ((0, 0), 0), ["X1", "X2"], 0.75)
    replayable = False
    if v.witness:
        sy = a.system
        total = sy.total_mass().lo
        sums = replay(lambda n: float(sy.block_mass(n).hi / total), v.witness, 0.75, start=(0, 0))
        replayable = sums == v.report.partial_sums
    checks = {
        f"beta 0.6 {conv.status}, tail {conv.tail_bound:.3g} < 1e-3": (
            conv.status == "convergent" and conv.tail_bound < 1e-3
        ),
        f"beta 0.4 {div.status}": div.status == "divergence-evidence",
        f"dkn at 0.75: {v.verdict}, replayable {replayable}": v.verdict.startswith("obstructs") and replayable,
    }
    verdict(10, checks, time.perf_counter() - t0, 300)


def test_criterion_11_faithfulness(verdict):
    t0 = time.perf_counter()
    checks = {}
    for n in (1, 2, 3):
        p = catalog(f"heisenberg:{n}")
        g = glue(p, make_params(0.45 if n < 3 else 0.3, p.k, p.d))
        rng = random.Random(11)
        trivial = 0
        for _ in range(1000):
            e = p.normal_form(random_word(rng, p.generator_names(), 8, 3))
            while e == p.identity:
                e = p.normal_form(random_word(rng, p.generator_names(), 8, 3))
            trivial += g.nontrivial_witness(e) is None
        checks[f"heisenberg:{n} certificate ok, {trivial} of 1000 trivial"] = g.certificate.ok and trivial == 0
    verdict(11, checks, time.perf_counter() - t0, 60)

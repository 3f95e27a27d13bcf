import csv
import math
import random
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from metanil import intervals as iv
from metanil.intervals import (
    AmbiguousLocation,
    OutOfRange,
    ParameterError,
    make_params,
    psi,
    psi_comparability,
    system,
    theta,
)

H1 = make_params(0.45, 1, 2)  # heisenberg:1
H2 = make_params(0.45, 2, 3)  # heisenberg:2


def test_heisenberg_two_params():
    assert H2.p == (Fraction(20), Fraction(20))
    assert H2.r == Fraction(9, 8)
    assert not H2.failed_conditions()
    assert sum(1 / x for x in H2.p) + 1 / H2.r < 1


def test_param_errors():
    with pytest.raises(ParameterError, match="1/k"):
        make_params(0.6, 2, 3)
    with pytest.raises(ParameterError, match="condition I "):
        make_params(0.45, 2, 3, {"r": 2.0})
    with pytest.raises(ParameterError):
        make_params(1.2, 1, 2)
    with pytest.raises(ParameterError, match="unknown"):
        make_params(0.45, 2, 3, {"q": 1})


@pytest.mark.parametrize("alpha", [0.1, 0.45, 0.7, 0.9])
def test_k_one_search_is_feasible(alpha):
    prm = make_params(alpha, 1, 2)
    assert not prm.failed_conditions()
    assert prm.r > 1


def test_k_one_values():
    assert (H1.p, H1.r) == ((Fraction(8),), Fraction(5, 4))


def test_raw_length():
    sy = system(H2)
    assert sy.raw_length(((0, 0), 0)) == 1
    assert sy.raw_length(((1, 0), 0)) == mpmath.mpf(1) / 2
    assert abs(sy.raw_length(((0, 0), 2)) - mpmath.mpf("0.3143650230245258")) < 1e-16


def block_sum_oracle(S, r):
    """Sum over all j of 1/(S + |j|^r), independent of the package.

    Explicit float64 head up to N with N^r >= 100 S, then Euler-Maclaurin:
    the tail integral by its convergent power series in S / x^r plus the
    h(N)/2 and h'(N)/12 corrections.
    """
    rf = float(r)
    N = max(20000, math.ceil((100 * S) ** (1 / rf)))
    parts = []
    for lo in range(1, N, 10**6):
        j = np.arange(lo, min(N, lo + 10**6), dtype=np.float64)
        parts.append(float(np.sum(1.0 / (S + j**rf))))
    head = math.fsum(parts)
    with mpmath.workdps(30):
        r = mpmath.mpf(r)
        tail, q = mpmath.mpf(0), 0
        while True:
            term = (-S) ** q * mpmath.mpf(N) ** (1 - r * (q + 1)) / (r * (q + 1) - 1)
            tail += term
            q += 1
            if abs(term) < 1e-30:
                break

        def h(x):
            return 1 / (S + x**r)

        tail += h(N) / 2 - mpmath.diff(h, N) / 12
        return 1 / mpmath.mpf(S) + 2 * (head + tail)


@pytest.mark.parametrize("S", [1, 2, 7.5, 1e3, 1e6])
def test_block_mass_matches_oracle(S):
    sy = system(H2)
    enc = sy.mass_of_S(sy.ctx.mpf(S))
    truth = block_sum_oracle(S, mpmath.mpf(9) / 8)
    assert abs(truth - enc.mid) <= enc.width + 1e-14 * truth
    assert enc.width < 1e-12 * enc.mid


def test_block_mass_asymptotic_branch():
    # for huge S the sum differs from the integral over R by at most max h = 1/S
    sy = system(H2)
    S = mpmath.mpf(10) ** 40
    enc = sy.mass_of_S(sy.ctx.mpf(S))
    with mpmath.workdps(40):
        r = mpmath.mpf(9) / 8
        integral = 2 * S ** (1 / r - 1) * mpmath.gamma(1 / r) * mpmath.gamma(1 - 1 / r) / r
    assert enc.lo - 1 / S <= integral <= enc.hi + 1 / S


@settings(max_examples=40, deadline=None)
@given(st.floats(1, 1e8), st.integers(1, 3000), st.integers(1, 200))
def test_jtail_additive(S, J, n):
    sy = system(H1)
    S = sy.ctx.mpf(S)
    head = sy.ctx.fsum(sy.h(S, j) for j in range(J, J + n))
    diff = sy.jtail(S, J) - sy.jtail(S, J + n)
    tol = 1e-25 * float(sy.jtail(S, J).mid)
    assert diff.lo - tol <= head <= diff.hi + tol


def test_jtail_rejects_small_J():
    with pytest.raises(ValueError):
        system(H1).jtail(system(H1).ctx.mpf(5), 0)


def test_total_mass_refinement_overlaps():
    a = system(make_params(0.45, 1, 1, {"p": 7, "r": "6/5"}, trunc=1000)).total_mass()
    b = system(make_params(0.45, 1, 1, {"p": 7, "r": "6/5"}, trunc=10000)).total_mass()
    assert a.overlaps(b)
    assert a.width < 1e-10 and b.width < 1e-10


def sample_boxes(rng, n, radius=30, jr=400):
    return [((rng.randint(-radius, radius),), rng.randint(-jr, jr)) for _ in range(n)]


def test_gap_identity():
    sy = system(H1)
    eps = H1.eps_pos
    rng = random.Random(0)
    for w in sample_boxes(rng, 300):
        (i,), j = w
        gap = sy.position(((i,), j + 1)) - sy.position(w) - sy.normalized_length(w)
        assert max(abs(gap.lo), abs(gap.hi)) <= 2 * eps
    # the example of the op: block 0, j = 0
    gap = sy.position(((0,), 1)) - sy.position(((0,), 0)) - sy.normalized_length(((0,), 0))
    assert max(abs(gap.lo), abs(gap.hi)) <= 2 * eps


def test_positions_monotone():
    sy = system(H1)
    rng = random.Random(1)
    boxes = sorted(set(sample_boxes(rng, 600)), key=lambda w: (w[0], w[1]))
    pos = [sy.position(w) for w in boxes]
    for a, b in zip(pos, pos[1:]):
        assert a.lo <= b.hi
        if not a.overlaps(b):
            assert a.hi <= b.lo


def test_positions_monotone_k2():
    sy = system(H2)
    rng = random.Random(2)
    boxes = sorted({((rng.randint(-3, 3), rng.randint(-3, 3)), rng.randint(-50, 50)) for _ in range(200)})
    pos = [sy.position(w) for w in boxes]
    for a, b in zip(pos, pos[1:]):
        if not a.overlaps(b):
            assert a.hi <= b.lo


def test_locate_roundtrip():
    sy = system(H1)
    rng = random.Random(3)
    hits = 0
    for w in sample_boxes(rng, 300):
        x = sy.position(w).mid + sy.normalized_length(w).mid / 2
        try:
            got = sy.locate(x)
        except AmbiguousLocation:
            continue
        hits += 1
        assert got == w
    assert hits > 250
    assert sy.locate(sy.position(((0,), 0)).mid + sy.normalized_length(((0,), 0)).mid / 2) == ((0,), 0)


def test_locate_errors():
    sy = system(H1)
    with pytest.raises(OutOfRange):
        sy.locate(1.5)
    with pytest.raises(AmbiguousLocation):
        sy.locate(sy.position(((2,), 3)).lo)


def test_theta_and_psi():
    r = H2.r
    assert theta(0, r) == 0
    for xi in (1, -1, 1.5, 40.25, -7):
        assert theta(xi, r) == pytest.approx(abs(xi) ** float(r), rel=1e-15)
    assert psi(H2, (3, 1), 0) == 1 + 3**20 + 1
    # C^2: second differences stay bounded across the blend and at 1
    h = 1e-4
    for x0 in (0.25, 0.5, 0.75, 1.0):
        d2 = [(theta(x + h, r) - 2 * theta(x, r) + theta(x - h, r)) / h**2 for x in (x0 - 3 * h, x0, x0 + 3 * h)]
        assert max(d2) - min(d2) < 0.05


def test_psi_comparability():
    rep = psi_comparability(H2, (3, 1), 40, xi=40)
    assert rep.ratio_at_xi == 1
    assert rep.stable and rep.bounded
    with pytest.raises(ValueError):
        psi_comparability(H2, (0, 0), 0, xi=10**9)


def test_cache_roundtrip(tmp_path):
    sy = system(make_params(0.45, 2, 3, prec=96))
    for ivec in [(0, 0), (1, 2), (-3, 1)]:
        sy.block_mass(ivec)
    path = tmp_path / "cache.txt"
    iv.save_cache(sy, path)
    fresh = iv.IntervalSystem(sy.params)
    assert iv.load_cache(fresh, path) == 3
    for key, e in sy._mass_cache.items():
        assert fresh._mass_cache[key].lo <= e.lo and e.hi <= fresh._mass_cache[key].hi
    other = iv.IntervalSystem(make_params(0.4, 2, 3, prec=96))
    with pytest.raises(ValueError, match="different parameters"):
        iv.load_cache(other, path)
    path.write_text("# old-version\n")
    with pytest.raises(ValueError, match="not a block-mass cache"):
        iv.load_cache(fresh, path)


def test_export_csv(tmp_path):
    path = tmp_path / "x.csv"
    iv.export_csv(H1, path, [((0,), 0), ((1,), -2)])
    rows = list(csv.reader(open(path)))
    assert rows[0] == ["index", "length", "position_lo", "position_hi"]
    assert rows[1][0] == "0 0" and len(rows) == 3

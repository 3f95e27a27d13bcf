import math
import random

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from metanil.charts import (
    IntervalPair,
    chart,
    chart_inverse,
    cocycle_error,
    dlog_dphi,
    dphi,
    endpoint_error,
    phi,
    property3_constant,
    random_pair,
    unit_chart,
    unit_chart_inverse,
    unit_dlog_dphi,
    verify_chart_properties,
)


def test_symmetric_midpoint_is_zero():
    q = IntervalPair(2, 5, 3)
    assert chart(q, 3.5) == 0


@pytest.mark.parametrize("prec", [64, 128])
def test_roundtrip(prec):
    q = IntervalPair(0, 1, 0.5)
    rng = random.Random(prec)
    worst = 0
    with mpmath.workprec(prec):
        for _ in range(1000):
            x = mpmath.mpf(rng.random())
            if not 0 < x < 1:
                continue
            back = chart_inverse(q, chart(q, x, prec), prec)
            worst = max(worst, abs(back - x) / x)
        assert worst <= mpmath.mpf(2) ** (-prec + 8)


def test_diverges_at_left_end():
    q = IntervalPair(0, 1, 0.5)
    vals = [chart(q, 10.0**-t) for t in range(1, 12)]
    assert all(b < a for a, b in zip(vals, vals[1:]))
    assert vals[-1] < -1e10


def test_chart_errors():
    q = IntervalPair(0, 1, 1)
    for x in (0, 1, -0.5, 2):
        with pytest.raises(ValueError):
            chart(q, x)
    with pytest.raises(ValueError):
        chart_inverse(q, mpmath.inf)
    with pytest.raises(ValueError):
        phi(q, q, 1.5)
    with pytest.raises(ValueError):
        IntervalPair(1, 0, 1)
    with pytest.raises(ValueError):
        IntervalPair(0, 1, 0)


def test_identity_map():
    q = IntervalPair(-0.3, 0.4, 0.01)
    for x in np.linspace(-0.3, 0.4, 9):
        assert phi(q, q, x) == pytest.approx(x, abs=1e-16)
        assert dphi(q, q, x) == 1


def test_endpoint_derivatives():
    I = IntervalPair(0, 2, 1)
    J = IntervalPair(10, 14, 3)
    assert dphi(I, J, 0) == 3
    assert dphi(I, J, 2) == 2
    assert phi(I, J, 0) == 10 and phi(I, J, 2) == 14
    # the interior values approach the limits
    assert float(dphi(I, J, 1e-9)) == pytest.approx(3, rel=1e-6)
    assert float(dphi(I, J, 2 - 1e-9)) == pytest.approx(2, rel=1e-6)


def test_proportional_pairs_are_affine():
    rng = random.Random(0)
    with mpmath.workprec(64):
        tol = mpmath.mpf(2) ** (-64 + 8)
        for _ in range(50):
            # dyadic scalings keep both neighbour ratios bit-identical
            L, rho = math.exp(rng.uniform(-3, 3)), math.exp(rng.uniform(-7, 7))
            lam = 2.0 ** rng.randint(-10, 10)
            I = IntervalPair(0.0, L, rho * L)
            J = IntervalPair(0.0, lam * L, lam * rho * L)
            for t in range(1, 16):
                x = L * t / 16
                assert abs(phi(I, J, x) - lam * x) <= tol * J.length
                assert abs(dphi(I, J, x) / lam - 1) <= tol
        # without the equal-ratio shortcut the solver reproduces u
        for rho in (1e-3, 0.7, 40.0):
            for u in (1e-6, 0.3, 0.999):
                u = mpmath.mpf(u)
                assert abs(unit_chart_inverse(rho, unit_chart(rho, u)) / u - 1) <= tol


def test_dlog_closed_form_matches_differences():
    rng = random.Random(5)
    for _ in range(30):
        I, J = random_pair(rng, 1e-2, 1e2), random_pair(rng, 1e-2, 1e2)
        for u in (0.1, 0.5, 0.9):
            x = I.x_minus + u * I.length
            fd = float(dlog_dphi(I, J, x, prec=128))
            v = float(unit_chart(I.rho, u))
            closed = float(unit_dlog_dphi(I.rho, J.rho, np.array([v]))[0]) / I.length
            assert fd == pytest.approx(closed, rel=1e-7, abs=1e-9 * (1 + abs(closed)))


@settings(max_examples=100, deadline=None)
@given(
    st.floats(-1, 1),
    st.floats(1e-3, 10),
    st.floats(1e-3, 1e3),
    st.floats(1e-3, 10),
    st.floats(1e-3, 1e3),
    st.floats(0.001, 0.999),
    st.floats(0.001, 0.999),
)
def test_phi_monotone_and_invertible(a, L1, r1, L2, r2, s, t):
    I = IntervalPair(a, a + L1, r1 * L1)
    J = IntervalPair(-a, -a + L2, r2 * L2)
    x, y = sorted((a + s * L1, a + t * L1))
    px, py = phi(I, J, x), phi(J, I, phi(I, J, y))
    if x < y:
        assert px < phi(I, J, y)
    assert dphi(I, J, x) > 0
    assert abs(py - y) <= 1e-12 * L1


def test_small_samples():
    assert cocycle_error(50, seed=1)[0] <= 1e-12
    assert endpoint_error(50, seed=1) <= 1e-15
    const, witness = property3_constant(50, seed=1)
    assert 0 < const < math.inf and witness is not None


def test_report_is_deterministic():
    a = verify_chart_properties(30, seed=4)
    b = verify_chart_properties(30, seed=4)
    assert (a.cocycle_error, a.property3_constant, a.property4_ratio) == (
        b.cocycle_error,
        b.property3_constant,
        b.property4_ratio,
    )
    assert a.monotone and a.affine_dlog < 1e-10
    assert "cocycle error" in str(a)

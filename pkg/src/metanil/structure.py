"""Structure theory: validation, central series, center, triangularization,
simple commutators and the grid-family commutator identities."""

import itertools
import random
from dataclasses import dataclass, field
from fractions import Fraction

from . import lattice as lt
from .group import GroupPresentation


class InconsistentPresentation(ValueError):
    pass


@dataclass
class ConsistencyReport:
    checks: dict = field(default_factory=dict)
    witnesses: dict = field(default_factory=dict)

    @property
    def ok(self):
        return all(self.checks.values())

    def failed(self):
        return [name for name, passed in self.checks.items() if not passed]

    def __str__(self):
        lines = []
        for name, passed in self.checks.items():
            line = f"{name}: {'ok' if passed else 'FAILED'}"
            if not passed and name in self.witnesses:
                line += f" (witness {self.witnesses[name]})"
            lines.append(line)
        return "\n".join(lines)


def _log_unipotent(A):
    """log A = sum_{j>=1} (-1)^{j+1} (A - I)^j / j, exact over Q."""
    d = len(A)
    X = [[Fraction(a) for a in row] for row in lt.mat_sub(A, lt.identity(d))]
    out = [[Fraction(0)] * d for _ in range(d)]
    term = X
    for j in range(1, d + 1):
        if all(a == 0 for row in term for a in row):
            break
        sign = 1 if j % 2 else -1
        out = [[o + sign * a / j for o, a in zip(ro, ra)] for ro, ra in zip(out, term)]
        term = lt.mat_mul(term, X)
    return out


def torsion_free_kernel_of_action(p):
    """Integer basis of {n : prod_t A_t^{n_t} = I} (needs unipotent A_t)."""
    if p.k == 0:
        return []
    logs = [_log_unipotent([list(r) for r in A]) for A in p.conj]
    # columns are vectorized logs
    M = [[logs[t][i][j] for t in range(p.k)] for i in range(p.d) for j in range(p.d)]
    return lt.rational_kernel(M, p.k)


def _is_unipotent(A):
    d = len(A)
    X = lt.mat_sub([list(r) for r in A], lt.identity(d))
    P = lt.identity(d)
    for _ in range(d):
        P = lt.mat_mul(P, X)
    return lt.is_zero(P)


def check_consistency(p, n_random=1000, seed=0, exp_range=3):
    """Validate that collection defines a group with A maximal abelian."""
    rep = ConsistencyReport()
    bad = next((t for t, A in enumerate(p.conj) if not _tri_ok(A)), None)
    rep.checks["unitriangular"] = bad is None
    if bad is not None:
        rep.witnesses["unitriangular"] = f"A_{bad + 1}"
    pair = None
    for s, t in itertools.combinations(range(p.k), 2):
        A, B = [list(r) for r in p.conj[s]], [list(r) for r in p.conj[t]]
        if lt.mat_mul(A, B) != lt.mat_mul(B, A):
            pair = (s + 1, t + 1)
            break
    rep.checks["commuting"] = pair is None
    if pair:
        rep.witnesses["commuting"] = f"A_{pair[0]}, A_{pair[1]}"
    if not rep.ok:
        rep.checks["associative"] = False
        rep.witnesses["associative"] = "skipped: matrices invalid"
        rep.checks["maximal"] = False
        rep.witnesses["maximal"] = "skipped: matrices invalid"
        return rep
    gens = [p.f(t + 1, e) for t in range(p.k) for e in (1, -1)]
    gens += [p.g(l + 1, e) for l in range(p.d) for e in (1, -1)]
    rng = random.Random(seed)

    def rnd():
        return p.element(
            [rng.randint(-exp_range, exp_range) for _ in range(p.k)],
            [rng.randint(-exp_range, exp_range) for _ in range(p.d)],
        )

    triples = itertools.chain(
        itertools.product(gens, repeat=3), ((rnd(), rnd(), rnd()) for _ in range(n_random))
    )
    witness = None
    for a, b, c in triples:
        if p.multiply(p.multiply(a, b), c) != p.multiply(a, p.multiply(b, c)):
            witness = (a, b, c)
            break
    rep.checks["associative"] = witness is None
    if witness:
        rep.witnesses["associative"] = tuple(str(x) for x in witness)
    ker = torsion_free_kernel_of_action(p)
    rep.checks["maximal"] = not ker
    if ker:
        rep.witnesses["maximal"] = ker[0]
    return rep


def _tri_ok(A):
    return all(A[i][i] == 1 and all(A[i][j] == 0 for j in range(i)) for i in range(len(A)))


def require_consistent(p, **kw):
    rep = check_consistency(p, **kw)
    bad = [c for c in rep.failed() if c != "maximal"]
    if bad:
        raise InconsistentPresentation(f"presentation fails {', '.join(bad)}:\n{rep}")
    return rep


# --- central series and center ---------------------------------------------


@dataclass
class StructureReport:
    degree: int
    series_ranks: list
    growth_degree: int
    center: list
    series: list = field(default_factory=list, repr=False)

    @property
    def center_rank(self):
        return len(self.center)


def lower_central_series(p):
    """Saturated bases of gamma_2, gamma_3, ... (all inside A), ending with []."""
    _, X, _, _ = p._mats()
    gens = [list(c) for _, c in p.fcomm]
    for Xt in X:
        gens += lt.transpose(Xt)  # columns (A_t - I) e_l
    L = lt.saturate(gens, p.d)
    series = [L]
    while L:
        nxt = [lt.mat_vec(Xt, v) for Xt in X for v in L]
        L = lt.saturate(nxt, p.d)
        series.append(L)
    return series


def center(p):
    """Basis of Z(G): kernel of x -> ([f_t, x])_t on the centralizer of A."""
    N0 = torsion_free_kernel_of_action(p)
    gens = [p.element(b) for b in N0] + [p.g(l + 1) for l in range(p.d)]
    images = []
    for x in gens:
        col = []
        for t in range(p.k):
            c = p.commutator(p.f(t + 1), x)
            if any(c.n):
                raise InconsistentPresentation("commutator left A")
            col.extend(c.m)
        images.append(col)
    if p.k == 0:
        combos = [[int(i == j) for i in range(len(gens))] for j in range(len(gens))]
    else:
        combos = lt.kernel(lt.transpose(images), len(gens))
    basis = []
    for v in combos:
        z = p.identity
        for coef, x in zip(v, gens):
            if coef:
                z = p.multiply(z, p.power(x, coef))
        basis.append(z)
    for z in basis:
        for t in range(p.k):
            if p.commutator(p.f(t + 1), z) != p.identity:
                raise InconsistentPresentation(
                    "centralizer of A is not abelian enough to linearize the center; "
                    "is A maximal?"
                )
    return _reduce_center(p, basis)


def _reduce_center(p, basis):
    # echelonize the m-parts for a canonical basis when the center lies in A
    if basis and all(not any(z.n) for z in basis):
        B = lt.lattice_basis([list(z.m) for z in basis], p.d)
        B = _echelon_rows(B)
        return [p.element(None, v) for v in B]
    return basis


def _echelon_rows(vectors):
    """Row-style HNF of a basis, leading entries positive."""
    if not vectors:
        return []
    d = len(vectors[0])
    out = []
    M = [list(v) for v in vectors]
    pivcol = 0
    for i in range(len(M)):
        while pivcol < d:
            cand = [j for j in range(i, len(M)) if M[j][pivcol]]
            if cand:
                break
            pivcol += 1
        if pivcol >= d:
            break
        # gcd-combine rows i.. on pivcol
        for j in range(i + 1, len(M)):
            b = M[j][pivcol]
            if not b:
                continue
            a = M[i][pivcol]
            g, x, y = lt.xgcd(a, b)
            ri, rj = M[i], M[j]
            M[i] = [x * u + y * v for u, v in zip(ri, rj)]
            M[j] = [(-b // g) * u + (a // g) * v for u, v in zip(ri, rj)]
        if M[i][pivcol] < 0:
            M[i] = [-u for u in M[i]]
        out.append(M[i])
        pivcol += 1
    return [row for row in out if any(row)]


def structure(p):
    require_consistent(p, n_random=50)
    series = lower_central_series(p)
    ranks = [p.k + p.d - len(series[0])]
    for a, b in zip(series, series[1:]):
        ranks.append(len(a) - len(b))
    while ranks and ranks[-1] == 0 and len(ranks) > 1:
        ranks.pop()
    # number of nontrivial terms gamma_1 ... gamma_c
    degree = 0
    for i, r in enumerate(ranks):
        if r:
            degree = i + 1
    tau = sum((i + 1) * r for i, r in enumerate(ranks))
    return StructureReport(degree, ranks, tau, center(p), series)


# --- triangularization -------------------------------------------------------


def triangularize(raw_conj):
    """Find unimodular P with P A_t P^{-1} upper unitriangular for every t.

    Builds the filtration W_i = {v : (A_t - I) v in W_{i-1} for all t}
    block by block through integer kernels.  Returns ``(P, new_conj)``.
    """
    mats = [[list(map(int, r)) for r in A] for A in raw_conj]
    if not mats:
        raise ValueError("need at least one matrix")
    d = len(mats[0])
    for t, A in enumerate(mats):
        if len(A) != d or any(len(r) != d for r in A):
            raise ValueError(f"matrix {t + 1} is not {d}x{d}")
        if not _is_unipotent(A):
            raise ValueError(f"matrix {t + 1} is not unipotent: (A - I)^{d} != 0")
    for s, t in itertools.combinations(range(len(mats)), 2):
        if lt.mat_mul(mats[s], mats[t]) != lt.mat_mul(mats[t], mats[s]):
            raise ValueError(f"matrices {s + 1} and {t + 1} do not commute")
    U = lt.identity(d)
    r = 0
    while r < d:
        Uinv = lt.inverse(U)
        rows = []
        for A in mats:
            B = lt.mat_mul(Uinv, lt.mat_mul(A, U))
            Q = [row[r:] for row in B[r:]]
            rows.extend(lt.mat_sub(Q, lt.identity(d - r)))
        K = lt.kernel(rows, d - r)
        if not K:
            raise ValueError("matrices are not simultaneously unipotent")
        V = lt.complete_basis(K, d - r)
        big = lt.identity(d)
        for i in range(d - r):
            for j in range(d - r):
                big[r + i][r + j] = V[i][j]
        U = lt.mat_mul(U, big)
        r += len(K)
    U = _fix_signs(U, mats)
    P = lt.inverse(U)
    new = [lt.mat_mul(P, lt.mat_mul(A, U)) for A in mats]
    return P, new


def _fix_signs(U, mats):
    # flip basis vectors so the first nonzero entry above the diagonal in each
    # column of the conjugated matrices is positive
    d = len(U)
    P = lt.inverse(U)
    conj = [lt.mat_mul(P, lt.mat_mul(A, U)) for A in mats]
    signs = [1] * d
    for j in range(1, d):
        for B in conj:
            entry = next((B[i][j] * signs[i] for i in range(j) if B[i][j]), 0)
            if entry:
                signs[j] = 1 if entry > 0 else -1
                break
    return [[u * s for u, s in zip(row, signs)] for row in U]


def retriangularize(p):
    """Change the abelian basis of ``p`` so that its matrices are unitriangular."""
    if p.k == 0:
        return lt.identity(p.d), p
    P, new = triangularize(p.conj)
    fcomm = [((s, t), tuple(lt.mat_vec(P, list(c)))) for (s, t), c in p.fcomm]
    q = GroupPresentation(p.k, p.d, new, fcomm, None, meta={"basis_change": P})
    return P, q


# --- simple commutators ------------------------------------------------------


def simple_commutators(p, max_weight, pivot=1):
    """Simple commutators [s_1, ..., s_w] of generators and their inverses.

    Weights run from 2 to min(max_weight, d + 1); returns ``(set, lambda)`` where
    lambda is the largest |g_pivot exponent| in the set.
    """
    if max_weight < 2:
        raise ValueError("max_weight must be >= 2")
    gens = [p.f(t + 1, e) for t in range(p.k) for e in (1, -1)]
    gens += [p.g(l + 1, e) for l in range(p.d) for e in (1, -1)]
    top = min(max_weight, p.d + 1)
    layer = {p.commutator(a, b) for a in gens for b in gens}
    found = set(layer)
    for _ in range(3, top + 1):
        layer = {p.commutator(a, c) for a in gens for c in layer}
        found |= layer
    lam = max((abs(z.m[pivot - 1]) for z in found), default=0)
    return found, lam


# --- grid family -------------------------------------------------------------


def verify_grid_identities(p, n, i, j):
    """Check [f^n, g_{i,j}] against g_{i,j-1}^{lambda_i} modulo lower g_{i,*}, g_0."""
    meta = p.meta or {}
    if meta.get("family") != "grid":
        raise ValueError("presentation is not from the grid family")
    d, k, M, idx = meta["d"], meta["k"], meta["matrix"], meta["index"]
    if not (1 <= i <= k and 1 <= j <= d):
        raise ValueError(f"need 1 <= i <= {k} and 1 <= j <= {d}")
    if len(n) != k:
        raise ValueError(f"n must have length {k}")
    lam = sum(n[s] * M[i - 1][s] for s in range(k))
    fn = p.element(n)
    c = p.commutator(fn, p.g(idx(i, j) + 1))
    if any(c.n):
        return False
    target = idx(i, j - 1)
    if c.m[target] != lam:
        return False
    allowed = {0} | {idx(i, jj) for jj in range(1, j - 1)} | {target}
    return all(v == 0 for pos, v in enumerate(c.m) if pos not in allowed)


def grid_lambda(p, n, i):
    M = p.meta["matrix"]
    return sum(n[s] * M[i - 1][s] for s in range(len(n)))

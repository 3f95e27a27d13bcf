"""Exact integer linear algebra on lists of Python ints.

Everything here is exact: column Hermite-style reduction with a tracked
unimodular transform, integer kernels, lattice saturation, completion of a
primitive set to a unimodular basis, and rational rank/kernel via Fractions.
Matrices are lists of rows.
"""

from fractions import Fraction
from math import comb


def identity(n):
    return [[int(i == j) for j in range(n)] for i in range(n)]


def zeros(r, c):
    return [[0] * c for _ in range(r)]


def mat_mul(A, B):
    if not A:
        return []
    inner = len(B)
    cols = len(B[0]) if B else 0
    out = []
    for row in A:
        new = [0] * cols
        for idx in range(inner):
            a = row[idx]
            if a:
                brow = B[idx]
                for j in range(cols):
                    new[j] += a * brow[j]
        out.append(new)
    return out


def mat_vec(A, v):
    return [sum(a * x for a, x in zip(row, v)) for row in A]


def mat_add(A, B):
    return [[a + b for a, b in zip(ra, rb)] for ra, rb in zip(A, B)]


def mat_sub(A, B):
    return [[a - b for a, b in zip(ra, rb)] for ra, rb in zip(A, B)]


def mat_scale(c, A):
    return [[c * a for a in row] for row in A]


def transpose(A, ncols=None):
    if not A:
        return [[] for _ in range(ncols or 0)]
    return [list(col) for col in zip(*A)]


def is_zero(A):
    return all(not a for row in A for a in row)


def xgcd(a, b):
    """Return (g, x, y) with g = gcd(a, b) >= 0 and a*x + b*y = g."""
    x0, y0, x1, y1 = 1, 0, 0, 1
    while b:
        q, r = divmod(a, b)
        a, b = b, r
        x0, x1 = x1, x0 - q * x1
        y0, y1 = y1, y0 - q * y1
    if a < 0:
        a, x0, y0 = -a, -x0, -y0
    return a, x0, y0


def unipotent_power(X, N):
    """(I + X)**N for nilpotent X and N >= 0, via the binomial series."""
    n = len(X)
    out = identity(n)
    term = identity(n)
    j = 1
    while j <= N:
        term = mat_mul(term, X)
        if is_zero(term):
            break
        out = mat_add(out, mat_scale(comb(N, j), term))
        j += 1
    return out


def unipotent_geom(X, N):
    """Sum_{i=0}^{N-1} (I + X)**i = Sum_j C(N, j+1) X**j for nilpotent X, N >= 0."""
    n = len(X)
    if N == 0:
        return zeros(n, n)
    out = mat_scale(N, identity(n))
    term = identity(n)
    j = 1
    while j < N:
        term = mat_mul(term, X)
        if is_zero(term):
            break
        out = mat_add(out, mat_scale(comb(N, j + 1), term))
        j += 1
    return out


def column_reduce(M, ncols=None):
    """Column-reduce ``M`` (m x n) with unimodular column operations.

    Returns ``(H, T, Tinv, rank)`` with ``M @ T == H``, ``T @ Tinv == I``;
    the first ``rank`` columns of ``H`` are in echelon form and the rest
    vanish, so ``T[:, rank:]`` is a basis of the integer kernel of ``M``.
    """
    m = len(M)
    n = len(M[0]) if M else (ncols or 0)
    H = [row[:] for row in M]
    T = identity(n)
    Tinv = identity(n)
    c = 0
    for i in range(m):
        if c >= n:
            break
        for j in range(c + 1, n):
            b = H[i][j]
            if b == 0:
                continue
            a = H[i][c]
            g, x, y = xgcd(a, b)
            p, q = a // g, b // g
            for row in H:
                rc, rj = row[c], row[j]
                row[c], row[j] = x * rc + y * rj, -q * rc + p * rj
            for row in T:
                rc, rj = row[c], row[j]
                row[c], row[j] = x * rc + y * rj, -q * rc + p * rj
            rc, rj = Tinv[c], Tinv[j]
            Tinv[c] = [p * u + q * v for u, v in zip(rc, rj)]
            Tinv[j] = [-y * u + x * v for u, v in zip(rc, rj)]
        if H[i][c] != 0:
            c += 1
    return H, T, Tinv, c


def kernel(M, ncols=None):
    """Basis (list of column vectors) of the integer kernel of ``M``.

    The basis spans a saturated lattice since it is part of a unimodular basis.
    """
    n = len(M[0]) if M else ncols
    if n is None:
        raise ValueError("ncols required for an empty matrix")
    if not M:
        return [[int(i == j) for i in range(n)] for j in range(n)]
    _, T, _, r = column_reduce(M)
    return [[T[i][j] for i in range(n)] for j in range(r, n)]


def saturate(vectors, dim):
    """Basis of the isolator {x in Z^dim : c*x in span(vectors) for some c != 0}."""
    vectors = [list(v) for v in vectors if any(v)]
    if not vectors:
        return []
    perp = kernel(vectors, dim)
    if not perp:
        return [[int(i == j) for i in range(dim)] for j in range(dim)]
    return kernel(perp, dim)


def lattice_basis(vectors, dim):
    """Z-basis of the lattice spanned by ``vectors`` (not saturated)."""
    vectors = [list(v) for v in vectors if any(v)]
    if not vectors:
        return []
    cols = transpose(vectors)
    H, _, _, r = column_reduce(cols)
    return [[H[i][j] for i in range(dim)] for j in range(r)]


def complete_basis(K, dim):
    """Unimodular ``dim x dim`` matrix whose first columns are the vectors of ``K``.

    ``K`` must span a saturated sublattice; raises ValueError otherwise.
    """
    q = len(K)
    if q == 0:
        return identity(dim)
    _, T, Tinv, r = column_reduce([list(v) for v in K])
    if r != q:
        raise ValueError("vectors are linearly dependent")
    # K^T T = [H 0]  =>  K = W[:, :q] H^T with W = Tinv^T
    W = transpose(Tinv)
    H = mat_mul([list(v) for v in K], T)
    Hq = [row[:q] for row in H]
    if abs(det(Hq)) != 1:
        raise ValueError("vectors do not span a saturated lattice")
    V = [[0] * dim for _ in range(dim)]
    for i in range(dim):
        for j in range(q):
            V[i][j] = K[j][i]
        for j in range(q, dim):
            V[i][j] = W[i][j]
    return V


def rref(M):
    """Reduced row echelon form over Q; returns (R, pivot_columns)."""
    R = [[Fraction(a) for a in row] for row in M]
    if not R:
        return R, []
    rows, cols = len(R), len(R[0])
    pivots = []
    r = 0
    for c in range(cols):
        piv = next((i for i in range(r, rows) if R[i][c] != 0), None)
        if piv is None:
            continue
        R[r], R[piv] = R[piv], R[r]
        lead = R[r][c]
        R[r] = [a / lead for a in R[r]]
        for i in range(rows):
            if i != r and R[i][c] != 0:
                f = R[i][c]
                R[i] = [a - f * b for a, b in zip(R[i], R[r])]
        pivots.append(c)
        r += 1
        if r == rows:
            break
    return R, pivots


def rank(M):
    return len(rref(M)[1]) if M else 0


def rational_kernel(M, ncols):
    """Primitive integer vectors spanning the rational kernel of ``M``."""
    if not M:
        return [[int(i == j) for i in range(ncols)] for j in range(ncols)]
    R, pivots = rref(M)
    free = [c for c in range(ncols) if c not in pivots]
    out = []
    for f in free:
        v = [Fraction(0)] * ncols
        v[f] = Fraction(1)
        for row, pc in zip(R, pivots):
            v[pc] = -row[f]
        out.append(primitive(v))
    return out


def primitive(v):
    """Scale a rational vector to a primitive integer vector."""
    from math import gcd, lcm

    den = 1
    for a in v:
        den = lcm(den, Fraction(a).denominator)
    ints = [int(Fraction(a) * den) for a in v]
    g = 0
    for a in ints:
        g = gcd(g, a)
    return [a // g for a in ints] if g else ints


def det(M):
    n = len(M)
    if n == 0:
        return 1
    R = [[Fraction(a) for a in row] for row in M]
    sign = 1
    out = Fraction(1)
    for c in range(n):
        piv = next((i for i in range(c, n) if R[i][c] != 0), None)
        if piv is None:
            return 0
        if piv != c:
            R[c], R[piv] = R[piv], R[c]
            sign = -sign
        out *= R[c][c]
        for i in range(c + 1, n):
            f = R[i][c] / R[c][c]
            if f:
                R[i] = [a - f * b for a, b in zip(R[i], R[c])]
    out *= sign
    assert out.denominator == 1
    return int(out)


def inverse(M):
    """Exact inverse over Q; returns ints when the inverse is integral."""
    n = len(M)
    aug = [list(row) + [int(i == j) for j in range(n)] for i, row in enumerate(M)]
    R, pivots = rref(aug)
    if pivots[:n] != list(range(n)):
        raise ValueError("matrix is singular")
    inv = [row[n:] for row in R[:n]]
    if all(a.denominator == 1 for row in inv for a in row):
        return [[int(a) for a in row] for row in inv]
    return inv

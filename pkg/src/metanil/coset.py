"""Left-multiplication action of G on G/H_s, identified with Z^{k+1}.

H_s is generated by every g_l except the pivot g_s, so the coset of
``f^i g^m`` is recorded as ``(i, m_s)``.  Blocks are ordered
lexicographically and each generator acts inside a block by a translation
of ``j``:  f_t shifts ``j`` by ``ell(t, i)`` while moving to block ``i + e_t``,
and g_m shifts it by ``rr(m, i)``.
"""

import csv
import enum
import itertools
import math
from typing import NamedTuple

import numpy as np


class Order(enum.IntEnum):
    LT = -1
    EQ = 0
    GT = 1


class BoxIndex(NamedTuple):
    i: tuple
    j: int

    @classmethod
    def of(cls, i, j):
        return cls(tuple(int(a) for a in i), int(j))

    def flat(self):
        return (*self.i, self.j)

    def __str__(self):
        return "(" + ", ".join(str(a) for a in self.flat()) + ")"


def lex_compare(w, v):
    """Compare two boxes; the first differing coordinate decides."""
    a = w.flat() if isinstance(w, BoxIndex) else tuple(w)
    b = v.flat() if isinstance(v, BoxIndex) else tuple(v)
    if len(a) != len(b):
        raise ValueError("boxes have different lengths")
    for x, y in zip(a, b):
        if x != y:
            return Order.LT if x < y else Order.GT
    return Order.EQ


def l1(ivec):
    return sum(abs(a) for a in ivec)


class CosetAction:
    """Action of ``p`` on boxes with pivot ``s`` (1-based)."""

    def __init__(self, p, pivot=1):
        if not 1 <= pivot <= p.d:
            raise ValueError(f"pivot must be in 1..{p.d}")
        self.p = p
        self.pivot = pivot
        self._s = pivot - 1
        # dict writes of immutable values are atomic; a race only recomputes
        self._ell = {}
        self._rr = {}

    # --- shifts ------------------------------------------------------------

    def ell(self, t, ivec):
        """j-shift of f_t on block ``ivec`` (1-based t)."""
        key = (t, tuple(ivec))
        val = self._ell.get(key)
        if val is None:
            prod = self.p.multiply(self.p.f(t), self.p.element(ivec))
            val = prod.m[self._s]
            self._ell[key] = val
        return val

    def rr(self, m, ivec):
        """j-shift of g_m on block ``ivec`` (1-based m)."""
        key = (m, tuple(ivec))
        val = self._rr.get(key)
        if val is None:
            # g_m f^i = f^i (A(i)^{-1} g_m)
            Ainv = self.p.conj_matrix([-a for a in ivec])
            val = Ainv[self._s][m - 1]
            self._rr[key] = val
        return val

    def shift(self, kind, index, ivec):
        return self.ell(index, ivec) if kind == "f" else self.rr(index, ivec)

    # --- action ------------------------------------------------------------

    def act(self, g, w):
        """Image of box ``w`` under the group element ``g``."""
        rep = self.p.element(w.i, self._pivot_vec(w.j))
        out = self.p.multiply(g, rep)
        return BoxIndex(out.n, out.m[self._s])

    def act_generator(self, kind, index, w, e=1):
        """Image of ``w`` under a generator power, using the memoized shifts."""
        i, j = list(w.i), w.j
        step = 1 if e > 0 else -1
        for _ in range(abs(e)):
            if kind == "g":
                if step > 0:
                    j += self.rr(index, i)
                else:
                    j -= self.rr(index, i)
            elif step > 0:
                j += self.ell(index, i)
                i[index - 1] += 1
            else:
                i[index - 1] -= 1
                j -= self.ell(index, i)
        return BoxIndex(tuple(i), j)

    def _pivot_vec(self, j):
        v = [0] * self.p.d
        v[self._s] = j
        return v

    def generators(self):
        """(kind, 1-based index) for every generator."""
        return [("f", t) for t in range(1, self.p.k + 1)] + [("g", m) for m in range(1, self.p.d + 1)]

    # --- growth bound ------------------------------------------------------

    def sphere(self, radius):
        """All ``ivec`` with ``|ivec|_1 == radius``."""
        k = self.p.k
        if k == 0:
            return [()] if radius == 0 else []
        out = []
        for parts in _compositions(radius, k):
            nz = [t for t, a in enumerate(parts) if a]
            for signs in itertools.product((1, -1), repeat=len(nz)):
                v = list(parts)
                for t, sgn in zip(nz, signs):
                    v[t] *= sgn
                out.append(tuple(v))
        return out

    def sphere_max(self, radius):
        """Largest |ell_t| or |r_m| (m != pivot) over the l1-sphere."""
        best = 0
        gens = [g for g in self.generators() if g != ("g", self.pivot)]
        for iv in self.sphere(radius):
            for kind, idx in gens:
                best = max(best, abs(self.shift(kind, idx, iv)))
        return best

    def fit_bound(self, N):
        """Fitted constant M with |shift| <= M |i|_1^d, and the log-log growth slope.

        The pivot shift r_s == 1 is excluded; it is checked separately.
        """
        if N < 2:
            raise ValueError("radius must be >= 2")
        d = self.p.d
        M = 0.0
        logs = []
        for rho in range(1, N + 1):
            mx = self.sphere_max(rho)
            if mx:
                M = max(M, mx / rho**d)
                if rho >= 2:
                    logs.append((math.log(rho), math.log(mx)))
        if len(logs) < 2:
            slope = 0.0
        else:
            x, y = np.array(logs).T
            slope = float(np.polyfit(x, y, 1)[0])
        self.fitted_constant = M
        return M, slope

    def check_bound(self, M, lo, hi, factor=1.0001):
        """First (generator, ivec, value) violating the bound on radii lo..hi, or None."""
        d = self.p.d
        gens = [g for g in self.generators() if g != ("g", self.pivot)]
        for rho in range(max(lo, 1), hi + 1):
            cap = M * factor * rho**d
            for iv in self.sphere(rho):
                for kind, idx in gens:
                    v = self.shift(kind, idx, iv)
                    if abs(v) > cap:
                        return (kind, idx), iv, v
        return None

    # --- export ------------------------------------------------------------

    def table(self, N):
        """Rows (ivec, generator label, shift) for every block with |i|_1 <= N."""
        rows = []
        for rho in range(0, N + 1):
            for iv in sorted(self.sphere(rho)):
                for kind, idx in self.generators():
                    rows.append((iv, self.p.label(kind, idx - 1), self.shift(kind, idx, iv)))
        return rows

    def export_csv(self, path, N):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow([f"i_{t}" for t in range(1, self.p.k + 1)] + ["generator", "value"])
            for iv, name, val in self.table(N):
                w.writerow([*iv, name, val])


def _compositions(n, k):
    """Nonnegative integer k-tuples summing to n."""
    if k == 1:
        yield (n,)
        return
    for a in range(n + 1):
        for rest in _compositions(n - a, k - 1):
            yield (a, *rest)


def check_pivot_shifts(action, radius):
    """Witness box where r_s != 1 or r_m != 0 (m < s), else None."""
    s = action.pivot
    rng = range(-radius, radius + 1)
    for iv in itertools.product(rng, repeat=action.p.k):
        if action.rr(s, iv) != 1:
            return ("g", s), iv
        for m in range(1, s):
            if action.rr(m, iv) != 0:
                return ("g", m), iv
    return None


__all__ = ["Order", "BoxIndex", "lex_compare", "CosetAction", "check_pivot_shifts", "l1"]

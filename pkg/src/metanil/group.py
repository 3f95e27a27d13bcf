"""Metabelian nilpotent groups presented as extensions of Z^k by Z^d.

An element is stored in normal form ``f_1^{n_1} ... f_k^{n_k} g_1^{m_1} ... g_d^{m_d}``.
Conjugation by ``f_t`` acts on the abelian part through an integer matrix
``A_t`` (``f_t a f_t^{-1} = A_t a`` with ``a`` a column of g-exponents) and
``[f_s, f_t] = c_st`` for ``s < t``.  Collection moves f-letters leftwards;
all sums of unipotent matrix powers are done in closed form with binomials,
so exponents of any size cost the same.

Public indices for generators are 1-based (``f1``, ``g2``); internal ones are
0-based.
"""

import re
from dataclasses import dataclass, field
from typing import NamedTuple

from . import lattice as lt


class GroupElement(NamedTuple):
    """Exponent vectors of the normal form."""

    n: tuple
    m: tuple

    def __str__(self):
        return f"(n={list(self.n)}, m={list(self.m)})"


@dataclass(frozen=True)
class GroupPresentation:
    k: int
    d: int
    conj: tuple
    fcomm: tuple = ()
    labels: tuple = None
    meta: dict = field(default=None, compare=False, hash=False, repr=False)

    def __post_init__(self):
        if self.k < 0 or self.d < 1:
            raise ValueError("need k >= 0 and d >= 1")
        conj = tuple(tuple(tuple(int(a) for a in row) for row in A) for A in self.conj)
        if len(conj) != self.k:
            raise ValueError(f"expected {self.k} conjugacy matrices, got {len(conj)}")
        for t, A in enumerate(conj):
            if len(A) != self.d or any(len(row) != self.d for row in A):
                raise ValueError(f"conjugacy matrix {t + 1} is not {self.d}x{self.d}")
        comm = {}
        for entry in self.fcomm:
            (s, t), c = entry
            if not 0 <= s < t < self.k:
                raise ValueError(f"fcomm pair ({s + 1},{t + 1}) needs 1 <= s < t <= k")
            if len(c) != self.d:
                raise ValueError(f"fcomm vector for ({s + 1},{t + 1}) must have length {self.d}")
            if any(c):
                comm[(s, t)] = tuple(int(a) for a in c)
        object.__setattr__(self, "conj", conj)
        object.__setattr__(self, "fcomm", tuple(sorted(comm.items())))
        object.__setattr__(self, "_comm", comm)
        if self.labels is not None:
            labels = tuple(self.labels)
            if len(labels) != self.k + self.d:
                raise ValueError("labels must name all k + d generators")
            object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "_cache", {})

    # --- matrix data -------------------------------------------------------

    def _mats(self):
        c = self._cache
        if "X" not in c:
            I = lt.identity(self.d)
            A = [[list(r) for r in M] for M in self.conj]
            c["A"] = A
            c["X"] = [lt.mat_sub(M, I) for M in A]
            inv = [lt.inverse(M) for M in A]
            if any(not isinstance(M[0][0], int) for M in inv if M):
                raise ValueError("conjugacy matrices must lie in GL_d(Z)")
            c["Ainv"] = inv
            c["Xinv"] = [lt.mat_sub(M, I) for M in inv]
        return c["A"], c["X"], c["Ainv"], c["Xinv"]

    def is_unitriangular(self):
        return all(
            A[i][i] == 1 and all(A[i][j] == 0 for j in range(i))
            for A in self.conj
            for i in range(self.d)
        )

    def comm_vector(self, s, t):
        """g-coordinates of [f_s, f_t] (0-based s < t)."""
        return self._comm.get((s, t), (0,) * self.d)

    def _power(self, t, N):
        """A_t**N (requires unipotent A_t)."""
        _, X, _, Xinv = self._mats()
        return lt.unipotent_power(X[t], N) if N >= 0 else lt.unipotent_power(Xinv[t], -N)

    def conj_matrix(self, n):
        """Conjugacy matrix of f_1^{n_1}...f_k^{n_k}: prod_t A_t^{n_t}."""
        out = lt.identity(self.d)
        for t, N in enumerate(n):
            if N:
                out = lt.mat_mul(out, self._power(t, N))
        return out

    # --- collection --------------------------------------------------------

    def _geom_apply(self, t, N, v, inverse):
        # sum_{i<N} B^i v with B = A_t^{-1} (inverse) or A_t
        _, X, _, Xinv = self._mats()
        return lt.mat_vec(lt.unipotent_geom(Xinv[t] if inverse else X[t], N), v)

    def _conj_shift(self, t, u, N):
        """delta with f_t^{-N} f_u f_t^{N} = f_u g^delta, for u > t."""
        c = self.comm_vector(t, u)
        if not any(c) or N == 0:
            return [0] * self.d
        _, _, Ainv, _ = self._mats()
        if N > 0:
            d1 = [-a for a in lt.mat_vec(Ainv[u], lt.mat_vec(Ainv[t], c))]
            return self._geom_apply(t, N, d1, inverse=True)
        d1 = lt.mat_vec(Ainv[u], c)
        return self._geom_apply(t, -N, d1, inverse=False)

    def _twisted_power(self, u, N, delta):
        """w with (f_u g^delta)^N = f_u^N g^w."""
        if N >= 0:
            return self._geom_apply(u, N, delta, inverse=True)
        A, _, _, _ = self._mats()
        dprime = [-a for a in lt.mat_vec(A[u], delta)]
        return self._geom_apply(u, -N, dprime, inverse=False)

    def _times_f(self, n, m, t, N):
        """(f^n g^m) * f_t^N in normal form."""
        if N == 0:
            return list(n), list(m)
        m = lt.mat_vec(self._power(t, -N), m)
        v = [0] * self.d
        for u in range(t + 1, self.k):
            nu = n[u]
            if nu == 0:
                continue
            w = self._twisted_power(u, nu, self._conj_shift(t, u, N))
            if any(v):
                v = lt.mat_vec(self._power(u, -nu), v)
            v = [a + b for a, b in zip(v, w)]
        n = list(n)
        n[t] += N
        return n, [a + b for a, b in zip(v, m)]

    # --- group operations --------------------------------------------------

    @property
    def identity(self):
        return GroupElement((0,) * self.k, (0,) * self.d)

    def element(self, n=None, m=None):
        n = tuple(int(a) for a in (n if n is not None else (0,) * self.k))
        m = tuple(int(a) for a in (m if m is not None else (0,) * self.d))
        if len(n) != self.k or len(m) != self.d:
            raise ValueError("exponent vectors have the wrong length")
        return GroupElement(n, m)

    def f(self, t, e=1):
        """f_t^e (1-based t)."""
        n = [0] * self.k
        n[t - 1] = e
        return self.element(n)

    def g(self, l, e=1):
        """g_l^e (1-based l)."""
        m = [0] * self.d
        m[l - 1] = e
        return self.element(None, m)

    def multiply(self, a, b):
        n, m = list(a.n), list(a.m)
        for t, N in enumerate(b.n):
            if N:
                n, m = self._times_f(n, m, t, N)
        return GroupElement(tuple(n), tuple(x + y for x, y in zip(m, b.m)))

    def inverse(self, a):
        n, m = [0] * self.k, [0] * self.d
        for t in reversed(range(self.k)):
            if a.n[t]:
                n, m = self._times_f(n, m, t, -a.n[t])
        finv = GroupElement(tuple(n), tuple(m))
        return self.multiply(GroupElement((0,) * self.k, tuple(-x for x in a.m)), finv)

    def commutator(self, a, b):
        """[a, b] = a b a^-1 b^-1."""
        return self.product(a, b, self.inverse(a), self.inverse(b))

    def product(self, *elements):
        out = self.identity
        for e in elements:
            out = self.multiply(out, e)
        return out

    def power(self, a, N):
        if N < 0:
            a, N = self.inverse(a), -N
        out, base = self.identity, a
        while N:
            if N & 1:
                out = self.multiply(out, base)
            base = self.multiply(base, base)
            N >>= 1
        return out

    # --- words -------------------------------------------------------------

    def generator_names(self):
        names = [f"f{t + 1}" for t in range(self.k)] + [f"g{l + 1}" for l in range(self.d)]
        return names

    def resolve(self, name):
        """Map a generator name to ('f' | 'g', 0-based index)."""
        aliases = self._cache.get("aliases")
        if aliases is None:
            aliases = {}
            for i, nm in enumerate(self.generator_names()):
                aliases[nm] = i
            if self.labels:
                for i, nm in enumerate(self.labels):
                    aliases.setdefault(nm, i)
            if self.k == 1:
                aliases.setdefault("f", 0)
            for alias, target in (self.meta or {}).get("aliases", {}).items():
                aliases.setdefault(alias, aliases[target])
            self._cache["aliases"] = aliases
        try:
            i = aliases[name]
        except KeyError:
            raise ValueError(f"unknown generator {name!r}") from None
        return ("f", i) if i < self.k else ("g", i - self.k)

    def letter(self, name, e=1):
        kind, i = self.resolve(name)
        return self.f(i + 1, e) if kind == "f" else self.g(i + 1, e)

    def normal_form(self, word):
        """Collect a word, a sequence of (generator name, exponent) pairs."""
        n, m = [0] * self.k, [0] * self.d
        for name, e in word:
            if e == 0:
                raise ValueError("word exponents must be nonzero")
            kind, i = self.resolve(name)
            if kind == "f":
                n, m = self._times_f(n, m, i, e)
            else:
                m[i] += e
        return GroupElement(tuple(n), tuple(m))

    def label(self, kind, i):
        if self.labels:
            return self.labels[i if kind == "f" else self.k + i]
        return f"{kind}{i + 1}"

    def format(self, a):
        parts = []
        for t, e in enumerate(a.n):
            if e:
                parts.append(self.label("f", t) + ("" if e == 1 else f"^{e}"))
        for l, e in enumerate(a.m):
            if e:
                parts.append(self.label("g", l) + ("" if e == 1 else f"^{e}"))
        return "*".join(parts) or "e"


_TOKEN = re.compile(r"^([A-Za-z_][A-Za-z_0-9,.]*)(?:\^\(?(-?\d+)\)?)?$")


def parse_word(text):
    """Parse ``"f Y f^-1 Y^-1"`` (spaces or ``*`` separated) into a word.

    A trailing ``'`` is shorthand for exponent -1 and ``[a,b]`` expands to a
    commutator of single letters.
    """
    text = text.strip()
    if text in ("", "e", "1"):
        return []
    m = re.fullmatch(r"\[\s*([^,\]]+)\s*,\s*([^\]]+)\s*\]", text)
    if m:
        a, b = parse_word(m.group(1)), parse_word(m.group(2))
        return a + b + invert_word(a) + invert_word(b)
    word = []
    for tok in re.split(r"[\s*]+", text):
        if not tok:
            continue
        exp = 1
        while tok.endswith("'"):
            tok, exp = tok[:-1], -exp
        mt = _TOKEN.match(tok)
        if not mt:
            raise ValueError(f"malformed word token {tok!r}")
        e = int(mt.group(2)) if mt.group(2) is not None else 1
        if e == 0:
            raise ValueError(f"zero exponent in {tok!r}")
        word.append((mt.group(1), e * exp))
    return word


def invert_word(word):
    return [(name, -e) for name, e in reversed(word)]


def element_word(p, a):
    """A word whose normal form is ``a``."""
    word = [(f"f{t + 1}", e) for t, e in enumerate(a.n) if e]
    word += [(f"g{l + 1}", e) for l, e in enumerate(a.m) if e]
    return word


# module-level aliases mirroring the operation names


def normal_form(p, word):
    return p.normal_form(word)


def multiply(p, a, b):
    return p.multiply(a, b)


def inverse(p, a):
    return p.inverse(a)


def commutator(p, a, b):
    return p.commutator(a, b)


def conj_matrix(p, n):
    return p.conj_matrix(n)

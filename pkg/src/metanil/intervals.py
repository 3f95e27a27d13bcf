"""The interval family I_w, w = (i_1, ..., i_k, j) in Z^{k+1}.

Raw lengths are ``1 / (1 + |i_1|^{p_1} + ... + |i_k|^{p_k} + |j|^r)`` and the
intervals are laid out in lexicographic order.  Every infinite sum is
returned as an :class:`Enclosure`.  Within one block ``i`` the j-sums are
tight (alternating Hurwitz-zeta series far out, concave/convex integral
brackets in the bulk, plain float sums in between).  For k = 1 the sum over
blocks has an alternating-series tail and is just as tight.  For k >= 2 the
block tail only has a crude upper bound, so global positions are wide there.
"""

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from mpmath.ctx_mp import MPContext


class ParameterError(ValueError):
    pass


class AmbiguousLocation(ValueError):
    pass


class OutOfRange(ValueError):
    pass


class TruncationTooSmall(ValueError):
    pass


def _frac(x):
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    return Fraction(repr(float(x)))


# --- parameters ---------------------------------------------------------------

CONDITIONS = ("I", "II", "III", "IV", "V", "VI")

_CONDITION_TEXT = {
    "I": "alpha + r <= 2",
    "II": "d(r - 1) <= 1 - alpha",
    "III": "2dr <= p_n",
    "IV": "2d <= p_n(1 - alpha)",
    "V": "1/p_1 + ... + 1/p_k + 1/r < 1",
    "VI": "alpha <= 1/p_n + 1/r and alpha <= r/(p_n(r - 1))",
}


@dataclass(frozen=True)
class SystemParams:
    alpha: Fraction
    k: int
    d: int
    p: tuple
    r: Fraction
    pivot: int = 1
    eps_pos: float = 1e-12
    trunc: int = 1000
    prec: int = 128

    def conditions(self):
        """Each condition evaluated exactly over the rationals."""
        a, d, r, p = self.alpha, self.d, self.r, self.p
        return {
            "I": a + r <= 2,
            "II": d * (r - 1) <= 1 - a,
            "III": all(2 * d * r <= pn for pn in p),
            "IV": all(2 * d <= pn * (1 - a) for pn in p),
            "V": sum((1 / pn for pn in p), Fraction(0)) + 1 / r < 1,
            "VI": all(a <= 1 / pn + 1 / r and a <= r / (pn * (r - 1)) for pn in p),
        }

    def failed_conditions(self):
        return [name for name, ok in self.conditions().items() if not ok]

    @property
    def beta(self):
        """Decay exponent of a block mass: F(S) ~ K S^{-beta}."""
        return 1 - 1 / self.r

    def describe(self):
        p = ", ".join(str(x) for x in self.p)
        return f"alpha={self.alpha} k={self.k} d={self.d} p=({p}) r={self.r} pivot={self.pivot}"


def _candidate_rs(cap):
    """Descending rationals in (1, cap] on successively finer grids."""
    seen = set()
    for denom in (20, 100, 1000, 10000):
        top = math.floor(cap * denom)
        for num in range(top, denom, -1):
            r = Fraction(num, denom)
            if r not in seen:
                seen.add(r)
                yield r


def _smallest_p(alpha, d, r):
    if r <= 1:
        return None
    lo = max(2 * d * r, 2 * d / (1 - alpha))
    p = Fraction(math.ceil(lo))
    strict = r / (r - 1)
    if p <= strict:
        p = Fraction(math.floor(strict) + 1)
    return p


def make_params(alpha, k, d, overrides=None, *, pivot=1, eps_pos=1e-12, trunc=None, prec=128):
    """Exponents (p, r) for the interval family, validated against I-VI.

    For k >= 2 the defaults are p_n = 3d/alpha and r = 3d/(3d - 1).  For
    k <= 1 the largest r on a rational grid is taken, with the smallest
    integer p that satisfies every condition.
    """
    a = _frac(alpha)
    overrides = dict(overrides or {})
    if not 0 < a < 1:
        raise ParameterError("alpha must lie in (0, 1)")
    if k >= 2 and a >= Fraction(1, k):
        raise ParameterError(f"alpha >= 1/k (alpha={alpha}, k={k})")
    if d < 1 or k < 0:
        raise ParameterError("need k >= 0 and d >= 1")
    if not 1 <= pivot <= d:
        raise ParameterError(f"pivot must be in 1..{d}")
    p_over = overrides.pop("p", None)
    r_over = overrides.pop("r", None)
    if overrides:
        raise ParameterError(f"unknown overrides: {', '.join(overrides)}")
    if p_over is not None:
        p_list = [p_over] * k if not isinstance(p_over, (list, tuple)) else list(p_over)
        if len(p_list) != k:
            raise ParameterError(f"p must have {k} entries")
        p_over = tuple(_frac(x) for x in p_list)
        if any(x <= 0 for x in p_over):
            raise ParameterError("p entries must be positive")
    if r_over is not None:
        r_over = _frac(r_over)
        if r_over <= 1:
            raise ParameterError("r must exceed 1")
    if trunc is None:
        trunc = 1000 if k <= 1 else 60
    common = dict(pivot=pivot, eps_pos=eps_pos, trunc=trunc, prec=prec)

    def build(p, r):
        return SystemParams(a, k, d, p, r, **common)

    if k >= 2 or (p_over is not None and r_over is not None):
        p = p_over if p_over is not None else (Fraction(3 * d) / a,) * k
        r = r_over if r_over is not None else Fraction(3 * d, 3 * d - 1)
        params = build(p, r)
    else:
        params = None
        rs = [r_over] if r_over is not None else _candidate_rs(min(2 - a, 1 + (1 - a) / d))
        for r in rs:
            p = p_over if p_over is not None else (_smallest_p(a, d, r),) * k
            if k and p[0] is None:
                continue
            cand = build(tuple(p), r)
            if not cand.failed_conditions():
                params = cand
                break
        if params is None:
            # report against the most natural candidate
            r = r_over if r_over is not None else Fraction(3 * d, 3 * d - 1)
            p = p_over if p_over is not None else (Fraction(3 * d) / a,) * k
            params = build(tuple(p), r)
    bad = params.failed_conditions()
    if bad:
        text = "; ".join(f"condition {c} fails ({_CONDITION_TEXT[c]})" for c in bad)
        raise ParameterError(f"{text} for {params.describe()}")
    return params


def condition_report(params):
    """Lines 'I: alpha + r <= 2 ... ok' for every condition."""
    return [
        f"{name}: {_CONDITION_TEXT[name]}: {'ok' if ok else 'FAILS'}"
        for name, ok in params.conditions().items()
    ]


# --- enclosures ----------------------------------------------------------------


@dataclass(frozen=True)
class Enclosure:
    """Closed interval [lo, hi] known to contain an exact real value."""

    lo: object
    hi: object

    def __post_init__(self):
        if self.lo > self.hi:
            raise ValueError(f"empty enclosure [{self.lo}, {self.hi}]")

    @staticmethod
    def point(x):
        return Enclosure(x, x)

    def __add__(self, other):
        if not isinstance(other, Enclosure):
            return Enclosure(self.lo + other, self.hi + other)
        return Enclosure(self.lo + other.lo, self.hi + other.hi)

    __radd__ = __add__

    def __sub__(self, other):
        if not isinstance(other, Enclosure):
            return Enclosure(self.lo - other, self.hi - other)
        return Enclosure(self.lo - other.hi, self.hi - other.lo)

    def __rsub__(self, other):
        return Enclosure(other - self.hi, other - self.lo)

    def __mul__(self, c):
        if isinstance(c, Enclosure):
            prods = [self.lo * c.lo, self.lo * c.hi, self.hi * c.lo, self.hi * c.hi]
            return Enclosure(min(prods), max(prods))
        return Enclosure(self.lo * c, self.hi * c) if c >= 0 else Enclosure(self.hi * c, self.lo * c)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, Enclosure):
            other = Enclosure(other, other)
        if other.lo <= 0 <= other.hi:
            raise ZeroDivisionError("enclosure of divisor contains 0")
        q = [self.lo / other.lo, self.lo / other.hi, self.hi / other.lo, self.hi / other.hi]
        return Enclosure(min(q), max(q))

    @property
    def width(self):
        return self.hi - self.lo

    @property
    def mid(self):
        return (self.lo + self.hi) / 2

    def pad(self, amount):
        return Enclosure(self.lo - amount, self.hi + amount)

    def contains(self, x):
        return self.lo <= x <= self.hi

    def overlaps(self, other):
        return self.lo <= other.hi and other.lo <= self.hi

    def __float__(self):
        return float(self.mid)

    def __str__(self):
        return f"[{float(self.lo):.17g}, {float(self.hi):.17g}]"


# --- the interval system ----------------------------------------------------------

# longest run of j-terms summed directly in float64
DIRECT_LIMIT = 4_000_000
_U = 2.0**-53


class IntervalSystem:
    """Lengths, block masses, positions and the locator for one parameter set."""

    def __init__(self, params):
        self.params = params
        ctx = MPContext()
        ctx.prec = params.prec
        self.ctx = ctx
        self.k = params.k
        self.r = ctx.mpf(params.r.numerator) / params.r.denominator
        self.p = tuple(ctx.mpf(x.numerator) / x.denominator for x in params.p)
        self.beta = 1 - 1 / self.r
        self.K = 2 * (ctx.pi / self.r) / ctx.sin(ctx.pi / self.r)
        self._a = 1 / self.r
        self._b = 1 - 1 / self.r
        self._rel = ctx.mpf(2) ** (-params.prec + 10)
        # per-block error budget that keeps summed widths far below eps_pos
        self._abs_tol = ctx.mpf(params.eps_pos) / (10 * (2 * params.trunc + 1) ** max(params.k, 1))
        self._int_p = all(x.denominator == 1 for x in params.p)
        self._int_r = params.r.denominator == 1
        self._mass_cache = {}
        self._slab_cache = {}
        self._total = None

    # --- elementary pieces ----------------------------------------------------

    def S(self, ivec):
        """1 + sum |i_n|^{p_n}."""
        ctx = self.ctx
        if self._int_p:
            return ctx.mpf(1 + sum(abs(i) ** int(p) for i, p in zip(ivec, self.p)))
        return 1 + ctx.fsum(ctx.mpf(abs(i)) ** p for i, p in zip(ivec, self.p) if i)

    def h(self, S, x):
        return 1 / (S + self.ctx.mpf(x) ** self.r)

    def raw_length(self, w):
        i, j = _split(w)
        return self.h(self.S(i), abs(j))

    def _padrel(self, e):
        return e.pad(self._rel * max(abs(e.lo), abs(e.hi)))

    # --- sums over j ------------------------------------------------------------------

    def _integral(self, S, x0, x1=None):
        """Exact value of the integral of h over [x0, x1] (x1=None: infinity)."""
        ctx = self.ctx
        C = S ** (self._a - 1) / self.r
        x0r = ctx.mpf(x0) ** self.r
        t0 = x0r / (S + x0r)
        if x1 is None:
            return C * ctx.betainc(self._b, self._a, 0, S / (S + x0r))
        x1r = ctx.mpf(x1) ** self.r
        t1 = x1r / (S + x1r)
        if t1 <= 0.5:
            return C * ctx.betainc(self._a, self._b, t0, t1)
        return C * ctx.betainc(self._b, self._a, S / (S + x1r), S / (S + x0r))

    def _bernoulli_coef(self, k):
        """B_{2k} / (2k)!"""
        cache = self._slab_cache.setdefault("bern", [None])
        while len(cache) <= k:
            n = 2 * len(cache)
            cache.append(self.ctx.bernoulli(n) / self.ctx.factorial(n))
        return cache[k]

    def _hurwitz(self, s, J, Js):
        """Enclosure of zeta(s, J) = sum_{n>=J} n^-s by Euler-Maclaurin (Js = J^-s).

        For the completely monotone n^-s the series envelopes the sum: the
        remainder is bounded by the first omitted term.
        """
        Jm = self.ctx.mpf(J)
        val = Js * Jm / (s - 1) + Js / 2
        tol = self._rel * val * 2.0**-12
        poch = s
        powJ = Js / Jm
        invJ2 = 1 / (Jm * Jm)
        last = None
        k = 1
        while True:
            term = self._bernoulli_coef(k) * poch * powJ
            if abs(term) <= tol or (last is not None and abs(term) >= abs(last)):
                return Enclosure(val - abs(term), val + abs(term))
            val += term
            last = term
            poch *= (s + 2 * k - 1) * (s + 2 * k)
            powJ *= invJ2
            k += 1

    def _zeta_tail(self, S, J):
        """sum_{j>=J} h(j) for J^r >= 16 S via sum_q (-S)^q zeta(r(q+1), J)."""
        ctx = self.ctx
        J0 = max(J, 64)
        head = ctx.fsum(self.h(S, j) for j in range(J, J0))
        v = ctx.mpf(J0) ** (-self.r)
        lo = hi = head
        Sq = ctx.mpf(1)
        vq = v
        q = 0
        while True:
            z = self._hurwitz(self.r * (q + 1), J0, vq) * Sq
            tol = max(self._rel * abs(lo), self._abs_tol * 2.0**-20)
            if q and z.hi <= tol:
                # alternating with decreasing terms: the rest is below z
                return self._padrel(Enclosure(lo - z.hi, hi + z.hi))
            if q % 2 == 0:
                lo, hi = lo + z.lo, hi + z.hi
            else:
                lo, hi = lo - z.hi, hi - z.lo
            Sq *= S
            vq *= v
            q += 1

    def _direct(self, S, a, b):
        """sum_{j=a}^{b-1} h(j) in float64 with a rounding-error pad."""
        if b <= a:
            return Enclosure.point(self.ctx.mpf(0))
        Sf = float(S)
        rf = float(self.r)
        total = 0.0
        for lo in range(a, b, DIRECT_LIMIT):
            j = np.arange(lo, min(b, lo + DIRECT_LIMIT), dtype=np.float64)
            total += float(np.sum(1.0 / (Sf + j**rf)))
        n = b - a
        err = total * (10 + 2 * math.log(b) + math.log2(n + 1)) * _U
        s = self.ctx.mpf(total)
        return Enclosure(s - err, s + err)

    def _concave(self, S, J, m):
        """sum_{j=J}^{m} h(j) where h is concave on [J - 1/2, m + 1/2]."""
        ctx = self.ctx
        half = ctx.mpf(1) / 2
        lo = self._integral(S, J - half, m + half)
        hi = self._integral(S, J, m) + (self.h(S, J) + self.h(S, m)) / 2
        # once the bracket is narrower than the working precision rounding
        # may swap the ends; the relative pad covers that
        return self._padrel(Enclosure(min(lo, hi), max(lo, hi)))

    def _convex(self, S, m):
        """sum_{j>=m} h(j) where h is convex on [m - 1/2, inf)."""
        half = self.ctx.mpf(1) / 2
        lo = self._integral(S, m) + self.h(S, m) / 2
        hi = self._integral(S, m - half)
        return self._padrel(Enclosure(min(lo, hi), max(lo, hi)))

    def jtail(self, S, J):
        """Enclosure of sum_{j>=J} 1/(S + j^r) for an integer J >= 1."""
        ctx = self.ctx
        J = int(J)
        if J < 1:
            raise ValueError("J must be >= 1")
        xc = int(ctx.ceil((16 * S) ** (1 / self.r)))
        if J >= xc:
            return self._zeta_tail(S, J)
        if xc - J <= DIRECT_LIMIT:
            return self._direct(S, J, xc) + self._zeta_tail(S, xc)
        xstar = ((self.r - 1) * S / (self.r + 1)) ** (1 / self.r)
        out = Enclosure.point(ctx.mpf(0))
        pos = J
        m = int(ctx.floor(xstar - ctx.mpf(1) / 2))
        if m >= J:
            out = out + self._concave(S, J, m)
            pos = m + 1
        mprime = max(pos, int(ctx.ceil(xstar + ctx.mpf(1) / 2)))
        out = out + self._direct(S, pos, mprime)
        if xc - mprime <= DIRECT_LIMIT:
            return out + self._direct(S, mprime, xc) + self._zeta_tail(S, xc)
        return out + self._convex(S, mprime)

    def block_mass(self, ivec):
        """F(S) = sum_j 1/(S + |j|^r) over the whole block ``ivec``."""
        key = tuple(ivec)
        val = self._mass_cache.get(key)
        if val is None:
            val = self.mass_of_S(self.S(key))
            self._mass_cache[key] = val
        return val

    def mass_of_S(self, S):
        # the asymptotic K S^-beta +- 1/S is used once 1/S is negligible
        c = self.K * S ** (-self.beta)
        if 1 / S <= max(self._rel * c, self._abs_tol):
            return self._padrel(Enclosure(c - 1 / S, c + 1 / S))
        return 1 / S + 2 * self.jtail(S, 1)

    def in_block_prefix(self, ivec, j):
        """Mass of the boxes (ivec, j') with j' < j."""
        S = self.S(ivec)
        if j <= 0:
            return self.jtail(S, 1 - j)
        return self.block_mass(ivec) - self.jtail(S, j)

    # --- sums over blocks -------------------------------------------------------

    def slab(self, prefix):
        """Mass of all blocks whose index starts with ``prefix``."""
        prefix = tuple(abs(x) for x in prefix)
        if len(prefix) == self.k:
            return self.block_mass(prefix)
        key = ("slab", prefix)
        val = self._slab_cache.get(key)
        if val is None:
            val = self.coord_sum(prefix, None, None)
            self._slab_cache[key] = val
        return val

    def _cumulative(self, prefix):
        """Running sums of slab(prefix + (x,)) for x = 0..trunc."""
        key = ("cum", prefix)
        val = self._slab_cache.get(key)
        if val is None:
            val = [self.slab(prefix + (0,))]
            for x in range(1, self.params.trunc + 1):
                val.append(val[-1] + self.slab(prefix + (x,)))
            self._slab_cache[key] = val
        return val

    def _range_sum(self, prefix, a, b):
        """sum of slab(prefix + (x,)) over a <= x <= b, with |a|, |b| <= trunc."""
        if b < a:
            return Enclosure.point(self.ctx.mpf(0))
        cum = self._cumulative(prefix)
        if a >= 0:
            return cum[b] - cum[a - 1] if a > 0 else cum[b]
        if b < 0:
            return self._range_sum(prefix, -b, -a)
        return cum[-a] + cum[b] - cum[0]

    def tail(self, prefix, T):
        """Enclosure of sum_{x >= T} slab(prefix + (x,)) for T > trunc."""
        key = ("tail", tuple(prefix), T)
        val = self._slab_cache.get(key)
        if val is None:
            val = self._tail(tuple(prefix), T)
            self._slab_cache[key] = val
        return val

    def _zeta(self, s, J):
        """Upper end of an enclosure of the Hurwitz zeta(s, J)."""
        if J >= 64:
            return self._hurwitz(s, J, self.ctx.mpf(J) ** (-s)).hi
        return self.ctx.zeta(s, J) * (1 + self._rel)

    def _tail(self, prefix, T):
        ctx = self.ctx
        u = len(prefix)
        S0 = self.S(prefix) if prefix else ctx.mpf(1)
        pu = self.p[u]
        Tm = ctx.mpf(T)
        if u == self.k - 1 and 16 * S0 <= Tm**pu:
            # K sum (S0 + x^p)^-beta, expanded in S0 / x^p; error <= zeta(p, T)
            prev = total = ctx.mpf(0)
            q = 0
            coef = ctx.mpf(1)
            while True:
                term = coef * S0**q * self._zeta(pu * (self.beta + q), T)
                prev, total = total, total + term
                if q and abs(term) <= self._rel * abs(total) * 2.0**-12:
                    break
                q += 1
                coef *= -(self.beta + q - 1) / q
                if q > 4 * self.params.prec:
                    break
            main = Enclosure(min(prev, total), max(prev, total)) * self.K
            err = self._zeta(pu, T)
            lo = max(main.lo - err, ctx.mpf(0))
            return self._padrel(Enclosure(lo, main.hi + err))
        if u == self.k - 1:
            hi = self.K * self._zeta(pu * self.beta, T) + self._zeta(pu, T)
            return Enclosure(ctx.mpf(0), hi * (1 + self._rel))
        # weighted AM-GM: S >= prod_n (S0/|R| + |x_n|^p_n)^{w_n}, w_n ~ 1/p_n
        rest = self.p[u:]
        gamma = self.beta / ctx.fsum(1 / q for q in rest)
        c = S0 / len(rest)
        hi = (self.K + 1) * self._zeta(gamma, T)
        for q in rest[1:]:
            hi *= c ** (-gamma / q) + 2 * self._zeta(gamma, 1)
        return Enclosure(ctx.mpf(0), hi * (1 + self._rel))

    def coord_sum(self, prefix, a, b):
        """sum of slab(prefix + (x,)) over a <= x <= b; None means unbounded."""
        prefix = tuple(abs(x) for x in prefix)
        N = self.params.trunc
        if a is None and b is None:
            return self._range_sum(prefix, -N, N) + 2 * self.tail(prefix, N + 1)
        if a is None:
            # x <= b  <=>  -x >= -b
            return self.coord_sum(prefix, -b, None)
        if b is None:
            if a > N:
                return self.tail(prefix, a)
            if a < -N:
                return self.coord_sum(prefix, None, None) - self.tail(prefix, -a + 1)
            return self._range_sum(prefix, a, N) + self.tail(prefix, N + 1)
        if b < a:
            return Enclosure.point(self.ctx.mpf(0))
        if -N <= a and b <= N:
            return self._range_sum(prefix, a, b)
        if a > N:
            return self.tail(prefix, a) - self.tail(prefix, b + 1)
        if b < -N:
            return self.coord_sum(prefix, -b, -a)
        return self.coord_sum(prefix, a, None) - self.coord_sum(prefix, b + 1, None)

    def total_mass(self):
        if self._total is None:
            self._total = self.coord_sum((), None, None) if self.k else self.block_mass(())
        return self._total

    def raw_position(self, w):
        """Mass of every box lexicographically before ``w``."""
        i, j = _split(w)
        out = self.in_block_prefix(i, j)
        for u in range(self.k):
            out = out + self.coord_sum(i[:u], None, i[u] - 1)
        return out

    # --- normalized quantities -------------------------------------------------------

    def normalized_length(self, w):
        L = self.raw_length(w)
        return self._padrel(Enclosure.point(L) / self.total_mass())

    def position(self, w, strict=False):
        """Enclosure of the left endpoint of I_w in [0, 1]."""
        pos = self._padrel(self.raw_position(w) / self.total_mass())
        zero, one = self.ctx.mpf(0), self.ctx.mpf(1)
        pos = Enclosure(max(pos.lo, zero), min(pos.hi, one))
        if strict and pos.width > self.params.eps_pos:
            raise TruncationTooSmall(
                f"position width {float(pos.width):.3g} exceeds eps_pos; "
                f"need a truncation radius of about {self.required_radius(pos.width)}"
            )
        return pos

    def required_radius(self, width):
        """Rough radius at which the block tails shrink below eps_pos."""
        if self.k == 0:
            return self.params.trunc
        rest = self.p
        gamma = float(self.beta / self.ctx.fsum(1 / q for q in rest))
        if self.k == 1:
            gamma = float(self.p[0] * self.beta)
        ratio = max(float(width) / self.params.eps_pos, 1.0)
        return int(math.ceil(self.params.trunc * ratio ** (1 / max(gamma - 1, 1e-9))))

    # --- locating points ---------------------------------------------------------------

    def _search(self, x, offset, mass_before, name, guess=0, limit_bits=400):
        """Largest c with offset + mass_before(c) <= x (all normalized).

        Brackets outward from ``guess`` with doubling steps, then bisects.
        """
        total = self.total_mass()

        def side(c):
            edge = self._padrel((offset + mass_before(c)) / total)
            if x < edge.lo:
                return -1
            if x > edge.hi:
                return 1
            raise AmbiguousLocation(
                f"x is within the enclosure {edge} of the {name}-boundary at {c}"
            )

        def too_far(c):
            if abs(c).bit_length() > limit_bits:
                raise AmbiguousLocation(f"x is beyond resolution in coordinate {name}")

        guess = int(guess)
        step = 1
        if side(guess) > 0:
            lo, hi = guess, guess + 1
            while side(hi) > 0:
                lo, hi = hi, hi + step
                step *= 2
                too_far(hi)
        else:
            lo, hi = guess - 1, guess
            while side(lo) < 0:
                lo, hi = lo - step, lo
                step *= 2
                too_far(lo)
        # invariant: side(lo) > 0 and side(hi) < 0
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if side(mid) > 0:
                lo = mid
            else:
                hi = mid
        return lo

    def _guess_j(self, ivec, mass):
        """Approximate j whose in-block prefix mass is ``mass`` (midpoint rule)."""
        from scipy.special import beta as beta_fn
        from scipy.special import betaincinv

        S = float(self.S(ivec))
        F = float(self.block_mass(ivec).mid)
        r = float(self.r)
        a, b = 1 / r, 1 - 1 / r
        scale = S ** (a - 1) / r * beta_fn(b, a)
        if not math.isfinite(S) or scale == 0:
            return 0

        def inverse_tail(m):
            # x with integral_x^inf 1/(S + t^r) dt = m
            y = min(max(m / scale, 1e-300), 1.0)
            u = betaincinv(b, a, y)
            if u <= 0:
                return 1e300
            return (S * (1 - u) / u) ** (1 / r)

        if mass <= F / 2:
            x = inverse_tail(mass)
            j = 0.5 - x
        else:
            x = inverse_tail(F - mass)
            j = x + 0.5
        if not math.isfinite(j) or abs(j) > 1e300:
            return 0
        return math.floor(j)

    def locate(self, x):
        """Box index w with x in I_w."""
        ctx = self.ctx
        x = ctx.mpf(x)
        if not 0 <= x <= 1:
            raise OutOfRange(f"x = {x} is outside [0, 1]")
        offset = Enclosure.point(ctx.mpf(0))
        prefix = []
        for u in range(self.k):
            pre = tuple(prefix)
            c = self._search(x, offset, lambda c, pre=pre: self.coord_sum(pre, None, c - 1), f"i_{u + 1}")
            offset = offset + self.coord_sum(pre, None, c - 1)
            prefix.append(c)
        ivec = tuple(prefix)
        target = float(x * self.total_mass().mid - offset.mid)
        guess = self._guess_j(ivec, target)
        j = self._search(x, offset, lambda c: self.in_block_prefix(ivec, c), "j", guess=guess)
        return ivec, j


def _split(w):
    if hasattr(w, "i"):
        return tuple(w.i), int(w.j)
    w = tuple(w)
    if len(w) == 2 and isinstance(w[0], (tuple, list)):
        return tuple(w[0]), int(w[1])
    return w[:-1], int(w[-1])


# --- module-level API -------------------------------------------------------------

_SYSTEMS = {}


def system(params):
    """Shared IntervalSystem for ``params`` (caches block masses)."""
    sy = _SYSTEMS.get(params)
    if sy is None:
        sy = _SYSTEMS.setdefault(params, IntervalSystem(params))
    return sy


def raw_length(params, w):
    return system(params).raw_length(w)


def normalized_length(params, w):
    return system(params).normalized_length(w)


def total_mass(params):
    return system(params).total_mass()


def position(params, w, strict=False):
    return system(params).position(w, strict=strict)


def locate(params, x):
    return system(params).locate(x)


# --- the auxiliary functions theta, psi, Psi ------------------------------------------


def _bump(t):
    return math.exp(-1.0 / t) if t > 0 else 0.0


def cutoff(x):
    """C-infinity step: 0 on [0, 1/4], 1 on [3/4, inf)."""
    a = _bump(2 * (x - 0.25))
    b = _bump(2 * (0.75 - x))
    return a / (a + b) if a + b else (1.0 if x >= 0.75 else 0.0)


def theta(xi, r):
    """C^2 even function equal to |xi|^r for |xi| >= 3/4 and xi^2 near 0."""
    x = abs(float(xi))
    r = float(r)
    if x >= 1:
        return x**r
    w = cutoff(x)
    return w * x**r + (1 - w) * x * x


def psi(params, ivec, xi):
    S = 1.0 + sum(abs(i) ** float(p) for i, p in zip(ivec, params.p))
    return S + theta(xi, params.r)


def Psi(params, ivec, xi):
    return math.log(psi(params, ivec, xi))


@dataclass
class ComparabilityReport:
    window: float
    samples: int
    max_ratio: float
    max_ratio_doubled: float
    bound: float
    ratio_at_xi: float = None

    @property
    def stable(self):
        return abs(self.max_ratio_doubled - self.max_ratio) <= 0.05 * self.max_ratio

    @property
    def bounded(self):
        return self.max_ratio_doubled <= self.bound


def psi_comparability(params, ivec, j, xi=None, C=1.0, samples=200):
    """Largest of psi(xi)/psi(j) and psi(j)/psi(xi) with |xi - j| <= R.

    R = C (S^{1/r} + |ivec|_1^d).  The a-priori bound
    2^{r-1} + (2^{r-1}(1 + R^r) + 1)/S holds for every such xi.
    """
    r = float(params.r)
    S = 1.0 + sum(abs(i) ** float(p) for i, p in zip(ivec, params.p))
    R = C * (S ** (1 / r) + sum(abs(i) for i in ivec) ** params.d)
    if xi is not None and abs(xi - j) > R:
        raise ValueError(f"|xi - j| = {abs(xi - j)} exceeds the window {R}")
    base = psi(params, ivec, j)

    def worst(n):
        out = 1.0
        for t in np.linspace(-R, R, n):
            v = psi(params, ivec, j + t)
            out = max(out, v / base, base / v)
        return out

    at = None
    if xi is not None:
        v = psi(params, ivec, xi)
        at = max(v / base, base / v)
    bound = 2 ** (r - 1) + (2 ** (r - 1) * (1 + R**r) + 1) / S
    return ComparabilityReport(R, samples, worst(samples), worst(2 * samples), bound, at)


# --- export and cache files ---------------------------------------------------------

CACHE_VERSION = "metanil-block-mass-cache 1"


def export_csv(params, path, indices):
    """Rows (index, length, position.lo, position.hi) for the given boxes."""
    import csv

    sy = system(params)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        out = csv.writer(fh)
        out.writerow(["index", "length", "position_lo", "position_hi"])
        for w in indices:
            i, j = _split(w)
            pos = sy.position((i, j))
            out.writerow([" ".join(map(str, (*i, j))), sy.ctx.nstr(sy.normalized_length((i, j)).mid, 20),
                          sy.ctx.nstr(pos.lo, 20), sy.ctx.nstr(pos.hi, 20)])


def save_cache(sy, path):
    """Write block-mass enclosures: one 'i_1 ... i_k <tab> lo <tab> hi' line each."""
    ctx = sy.ctx
    digits = int(sy.params.prec * 0.302) + 3
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# {CACHE_VERSION}\n# {sy.params.describe()} prec={sy.params.prec}\n")
        for key in sorted(sy._mass_cache):
            e = sy._mass_cache[key]
            lo = ctx.nstr(e.lo, digits, min_fixed=1, max_fixed=0)
            hi = ctx.nstr(e.hi, digits, min_fixed=1, max_fixed=0)
            fh.write(f"{' '.join(map(str, key))}\t{lo}\t{hi}\n")


def load_cache(sy, path):
    """Merge a cache file written for the same parameters; returns the record count."""
    ctx = sy.ctx
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if len(lines) < 2 or lines[0] != f"# {CACHE_VERSION}":
        raise ValueError(f"{path}: not a block-mass cache file")
    if lines[1] != f"# {sy.params.describe()} prec={sy.params.prec}":
        raise ValueError(f"{path}: cache was written for different parameters")
    n = 0
    for ln, line in enumerate(lines[2:], start=3):
        try:
            key, lo, hi = line.split("\t")
            ivec = tuple(int(x) for x in key.split()) if key.strip() else ()
            # decimal rounding of the stored ends is covered by a relative pad
            e = sy._padrel(Enclosure(ctx.mpf(lo), ctx.mpf(hi)))
        except ValueError as exc:
            raise ValueError(f"{path}: line {ln}: {exc}") from None
        sy._mass_cache[ivec] = e
        n += 1
    return n

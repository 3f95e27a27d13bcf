"""Hölder quotients of realized generators and the wandering-interval obstruction."""

import csv
import itertools
import math
import random
from dataclasses import dataclass, field

import mpmath

from .coset import BoxIndex
from .realization import LocalPoint, _letters

STABLE_FACTOR = 2.0
GROWING_FACTOR = 10.0


# --- Hölder quotients -------------------------------------------------------------


@dataclass
class HolderLevel:
    level: int
    radius: int
    sup: float
    witness: tuple
    pairs: int


@dataclass
class HolderReport:
    generator: str
    exponent: float
    levels: list
    trend: str
    skipped: int = 0
    flagged: bool = False

    def sups(self):
        return [lv.sup for lv in self.levels]

    def __str__(self):
        lines = [f"generator {self.generator}, exponent {self.exponent}: {self.trend}"]
        for lv in self.levels:
            lines.append(f"  level {lv.level} (radius {lv.radius}, {lv.pairs} pairs): sup {lv.sup:.6g}")
        if self.skipped:
            lines.append(f"  skipped {self.skipped} points" + (" (more than 10%)" if self.flagged else ""))
        return "\n".join(lines)

    def write_csv(self, path):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            out = csv.writer(fh)
            out.writerow(["level", "radius", "sup_quotient"])
            for lv in self.levels:
                out.writerow([lv.level, lv.radius, f"{lv.sup:.12g}"])


def classify(sups, stable=STABLE_FACTOR, growing=GROWING_FACTOR):
    first, last = sups[0], sups[-1]
    if last <= stable * first:
        return "stable"
    if last >= growing * first:
        return "growing"
    return "intermediate"


def _block_corners(k, radius):
    """Blocks with every coordinate in {-radius, 0, radius}, origin excluded."""
    if k == 0:
        return [()]
    return [v for v in itertools.product((-radius, 0, radius), repeat=k) if any(v)]


class _Block:
    """Sample points of one block with exact in-block offsets."""

    def __init__(self, a, ivec, u_points, j_exps):
        sy = a.system
        self.sy = sy
        self.S = sy.S(ivec)
        scale = float(self.S) ** (1 / float(sy.r))
        js = {0, 1, -1}
        for t in j_exps:
            m = int(round(scale * 2.0**t))
            js.update((m, -m))
        self.js = sorted(js)
        self.ivec = ivec
        self.us = [(1 - math.cos(math.pi * (t + 0.5) / u_points)) / 2 for t in range(u_points)]
        self._h = {j: sy.h(self.S, abs(j)) for j in self.js}

    def between(self, j1, j2):
        """Raw mass of boxes j1 <= t < j2."""
        sy, S = self.sy, self.S
        if j1 >= j2:
            return 0
        if j1 >= 1:
            return (sy.jtail(S, j1) - sy.jtail(S, j2)).mid
        if j2 <= 0:
            return (sy.jtail(S, 1 - j2) - sy.jtail(S, 1 - j1)).mid
        left = sy.h(S, 0) + (sy.jtail(S, 1) - sy.jtail(S, 1 - j1)).mid
        return left + (sy.jtail(S, 1) - sy.jtail(S, j2)).mid

    def offsets(self):
        """Raw offset of every sample point from the first one, in order."""
        out = []
        prev_j = None
        acc = 0
        for j in self.js:
            if prev_j is not None:
                acc += self.between(prev_j, j)
            prev_j = j
            for u in self.us:
                out.append((j, u, acc + self.sy.ctx.mpf(u) * self._h[j]))
        return out


def holder_report(a, gen, exponent, levels=(0, 12, 24), base=2, u_points=3, j_exps=range(-4, 4)):
    """Sup of |log Dg(x) - log Dg(y)| / |x - y|^exponent over pairs in sampled blocks.

    Level L samples the blocks whose coordinates are 0 or +-base*2^l for
    l <= L, so every level contains the previous one.  Pairs are taken
    inside single intervals and across intervals of one block.  Distances
    use the midpoint of the total-mass enclosure; its uncertainty is one
    common factor that leaves the trend unchanged.
    """
    if not 0 < exponent < 1:
        raise ValueError("exponent must lie in (0, 1)")
    levels = sorted(set(levels))
    if len(levels) < 2:
        raise ValueError("need at least two levels")
    word = gen
    _letters(a.p, word)  # validate early
    total = a.system.total_mass().mid
    beta = exponent
    out = []
    best, best_w, pairs = 0.0, None, 0
    done = set()
    top = levels[-1]
    for L in range(top + 1):
        R = base * 2**L
        for ivec in _block_corners(a.p.k, R):
            if ivec in done:
                continue
            done.add(ivec)
            blk = _Block(a, ivec, u_points, j_exps)
            pts = []
            for j, u, off in blk.offsets():
                _, d = a.evaluate_local(word, LocalPoint(BoxIndex(ivec, j), mpmath.mpf(u)))
                pts.append((j, u, off / total, float(mpmath.log(d))))
            for (j1, u1, x1, l1), (j2, u2, x2, l2) in itertools.combinations(pts, 2):
                dist = float(x2 - x1)
                if dist <= 0:
                    continue
                q = abs(l1 - l2) / dist**beta
                pairs += 1
                if q > best:
                    best, best_w = q, (ivec, (j1, u1), (j2, u2))
        if L in levels:
            out.append(HolderLevel(L, R, best, best_w, pairs))
    name = gen if isinstance(gen, str) else " ".join(f"{n}^{e}" for n, e in gen)
    return HolderReport(name, exponent, out, classify([lv.sup for lv in out]))


# --- symbolic fixed points -------------------------------------------------------------


def fixed_point_scan(a, gen, resolution):
    """Runs of boxes (|i|, |j| <= resolution, lex order) that ``gen`` moves or fixes.

    Returns a list of (first box, last box, "moving" | "fixed").
    """
    letters = _letters(a.p, gen)
    rng = range(-resolution, resolution + 1)
    runs = []
    for ivec in itertools.product(rng, repeat=a.p.k):
        for j in rng:
            w = BoxIndex(ivec, j)
            v = w
            for kind, index, e in reversed(letters):
                v = a.action.act_generator(kind, index, v, e)
            status = "moving" if v != w else "fixed"
            if runs and runs[-1][2] == status:
                runs[-1][1] = w
            else:
                runs.append([w, w, status])
    return [tuple(r) for r in runs]


# --- path sums ---------------------------------------------------------------------


@dataclass
class PathSumReport:
    beta: float
    path: list
    partial_sums: list = field(repr=False)
    tail_bound: float
    status: str  # convergent | divergence-evidence | inconclusive
    walks: list = field(default_factory=list)  # (name, final partial sum, tail bound)

    @property
    def total_bound(self):
        return (self.partial_sums[-1] if self.partial_sums else 0.0) + self.tail_bound

    def __str__(self):
        lines = [
            f"beta {self.beta}: {self.status}",
            f"  best path: {len(self.path)} steps, partial sum "
            f"{self.partial_sums[-1] if self.partial_sums else 0:.6g}, tail bound {self.tail_bound:.3g}",
        ]
        for name, s, t in self.walks:
            lines.append(f"  {name}: partial sum {s:.6g}, tail bound {t:.3g}")
        return "\n".join(lines)


class DeclaredDecay:
    """length(v) <= C (1 + |v|_1)^-gamma on the cone reached by monotone walks."""

    def __init__(self, C, gamma):
        self.C = float(C)
        self.gamma = float(gamma)

    def tail(self, beta, m):
        """Bound on sum over |v|_1 = m+1, m+2, ... of length^beta along any monotone walk."""
        g = self.gamma * beta
        if g <= 1:
            return math.inf
        return self.C**beta * (1 + m) ** (1 - g) / (g - 1)


def replay(length_fn, path, beta, start=None):
    """Partial sums of length^beta along ``path`` (1-based generator indices)."""
    k = max(path) if path else 1
    v = list(start) if start is not None else [0] * k
    acc, sums = 0.0, []
    for t in path:
        v[t - 1] += 1
        acc += length_fn(tuple(v)) ** beta
        sums.append(acc)
    return sums


def _walk(length_fn, k, beta, budget, choose, start):
    v = list(start)
    path, sums, acc = [], [], 0.0
    for _ in range(budget):
        t = choose(v)
        v[t] += 1
        acc += length_fn(tuple(v)) ** beta
        path.append(t + 1)
        sums.append(acc)
    return path, sums, v


def path_sum_search(length_fn, k, beta, budget, decay=None, seed=0, n_random=4,
                    threshold=1e3, start=None):
    """Search monotone walks f_{i_n} ... f_{i_1} for a summable sequence of lengths.

    Runs a greedy walk (smallest next length, ties to the lowest index) and
    ``n_random`` seeded random walks, ``budget`` steps each.  ``decay`` is the
    declared summability used for the tail bound after the last step.
    """
    if not 0 < beta <= 1:
        raise ValueError("beta must lie in (0, 1]")
    if k < 1 or budget < 1:
        raise ValueError("need k >= 1 and budget >= 1")
    start = tuple(start) if start is not None else (0,) * k
    rng = random.Random(seed)

    def greedy(v):
        best, arg = math.inf, 0
        for t in range(k):
            v[t] += 1
            val = length_fn(tuple(v))
            v[t] -= 1
            if val < best:
                best, arg = val, t
        return arg

    walks = [("greedy", greedy)]
    for n in range(n_random):
        sub = random.Random(rng.random())
        walks.append((f"random {n + 1}", lambda v, sub=sub: sub.randrange(k)))
    results = []
    for name, choose in walks:
        path, sums, v = _walk(length_fn, k, beta, budget, choose, start)
        m = sum(abs(c) for c in v)
        tail = decay.tail(beta, m) if decay is not None else math.inf
        results.append((name, path, sums, tail))
    finite = [r for r in results if math.isfinite(r[3])]
    if finite:
        name, path, sums, tail = min(finite, key=lambda r: r[2][-1] + r[3])
        status = "convergent"
    elif all(r[2][-1] > threshold for r in results):
        name, path, sums, tail = results[0]
        status = "divergence-evidence"
    else:
        name, path, sums, tail = results[0]
        status = "inconclusive"
    summary = [(r[0], r[2][-1], r[3]) for r in results]
    return PathSumReport(beta, path, sums, tail, status, summary)


# --- the obstruction verdict ---------------------------------------------------------


class PreconditionError(ValueError):
    pass


@dataclass
class Verdict:
    verdict: str
    beta: float
    box: BoxIndex
    report: PathSumReport
    witness: list = None  # generator indices of the composition sequence
    notes: list = field(default_factory=list)

    def __str__(self):
        lines = [f"verdict: {self.verdict} (beta {self.beta}, interval of box {self.box})"]
        lines += [f"  {n}" for n in self.notes]
        lines.append(str(self.report))
        return "\n".join(lines)


def _resolve_gens(a, gen_subset):
    out = []
    for name in gen_subset:
        kind, i = a.p.resolve(name)
        if kind != "f":
            raise PreconditionError(f"{name} is not one of f_1..f_k")
        out.append(i + 1)
    return out


def dkn_verdict(a, g_word, box, gen_subset, beta, budget=2000, wander_radius=6, seed=0):
    """Look for a summable composition sequence for the interval that ``g`` fixes.

    The interval is the block of ``box``: ``g`` must commute with every
    generator in ``gen_subset``, move ``box`` inside its block and fix the
    block, and the images of the block under the monotone semigroup must be
    pairwise disjoint (distinct blocks, checked for |n|_1 <= wander_radius).
    Lengths are rigorous upper bounds of normalized block masses.
    """
    p = a.p
    box = BoxIndex.of(*box)
    g = p.normal_form(_letters_to_word(a, g_word))
    gens = _resolve_gens(a, gen_subset)
    for t in gens:
        if p.commutator(g, p.f(t)) != p.identity:
            raise PreconditionError(f"g does not commute with f{t}")
    moved = a.action.act(g, box)
    if moved == box:
        raise PreconditionError(f"g acts trivially on the interval of box {box}")
    if moved.i != box.i:
        raise PreconditionError("g does not fix the block of the box")
    k = len(gens)
    seen = {}
    for n in itertools.product(range(wander_radius + 1), repeat=k):
        if sum(n) > wander_radius:
            continue
        w = box
        for t, e in zip(gens, n):
            w = a.action.act_generator("f", t, w, e)
        if w.i in seen:
            raise PreconditionError(f"orbit is not wandering: {seen[w.i]} and {n} meet")
        seen[w.i] = n
    sy = a.system
    total_lo = sy.total_mass().lo
    base = list(box.i)

    def block_of(v):
        ivec = list(base)
        for t, c in zip(gens, v):
            ivec[t - 1] += c
        return tuple(ivec)

    def length(v):
        return float(sy.block_mass(block_of(v)).hi / total_lo)

    # F(S) <= (K + 1) S^-beta_r and S >= 2^(1-p) (1 + |i|_1 / k)^p on the orbit
    pmin = float(min(sy.p))
    br = float(sy.beta)
    shift = sum(abs(c) for c in box.i)
    kk = p.k
    C = (float(sy.K) + 1) * (2 * kk) ** (pmin * br) * (1 + shift) ** (pmin * br) / float(total_lo)
    decay = DeclaredDecay(C, pmin * br)
    rep = path_sum_search(length, k, beta, budget, decay=decay, seed=seed)
    notes = [
        f"interval: block {box.i} (fixed by g, which moves box {box} to {moved})",
        f"declared decay: length <= {C:.4g} (1 + |n|_1)^-{pmin * br:.4g}",
    ]
    if rep.status == "convergent":
        path = [gens[t - 1] for t in rep.path]
        return Verdict(f"obstructs C^(1+{beta}) for this family", beta, box, rep, path, notes)
    return Verdict("inconclusive", beta, box, rep, None, notes)


def _letters_to_word(a, g_word):
    from .group import parse_word

    return parse_word(g_word) if isinstance(g_word, str) else list(g_word)


__all__ = [
    "HolderReport",
    "HolderLevel",
    "holder_report",
    "classify",
    "fixed_point_scan",
    "PathSumReport",
    "DeclaredDecay",
    "path_sum_search",
    "replay",
    "dkn_verdict",
    "Verdict",
    "PreconditionError",
]

"""Generators of G as increasing maps of [0, 1].

A point is handled in local coordinates: the box ``w`` containing it and
its relative place ``u`` in ``I_w``.  A generator sends ``I_w`` onto
``I_{act(g, w)}`` through the chart map built from the left neighbours
``I_{(i, j-1)}``, so only ratios of raw lengths are needed and the unknown
total mass cancels.  Global coordinates come from the interval system and
carry its enclosure widths.
"""

import csv
import dataclasses
import itertools
import random
from dataclasses import dataclass, field

import mpmath

from . import charts
from . import intervals as iv
from .coset import BoxIndex, CosetAction
from .group import parse_word
from .structure import center, require_consistent


@dataclass(frozen=True)
class LocalPoint:
    box: BoxIndex
    u: object  # place in I_box, 0 <= u < 1

    def __str__(self):
        return f"{self.box} + {mpmath.nstr(self.u, 12)}"


def _letters(p, word):
    if isinstance(word, str):
        word = parse_word(word)
    out = []
    for name, e in word:
        kind, i = p.resolve(name)
        out.append((kind, i + 1, int(e)))
    return out


class RealizedAction:
    """Action of ``p`` on [0, 1] for pivot ``s`` and one parameter set."""

    def __init__(self, p, pivot, params):
        if params.pivot != pivot:
            params = dataclasses.replace(params, pivot=pivot)
        if params.k != p.k:
            raise ValueError(f"parameters are for k = {params.k}, group has k = {p.k}")
        self.p = p
        self.pivot = pivot
        self.params = params
        self.action = CosetAction(p, pivot)
        self.system = iv.system(params)
        self.prec = params.prec
        self.identity_outside = True
        self._rho = {}

    # --- local data ---------------------------------------------------------------

    def rho(self, w):
        """|I_(i, j-1)| / |I_(i, j)|."""
        w = BoxIndex.of(*w)
        val = self._rho.get(w)
        if val is None:
            sy = self.system
            S = sy.S(w.i)
            r = sy.r
            val = mpmath.mpf((S + sy.ctx.mpf(abs(w.j)) ** r) / (S + sy.ctx.mpf(abs(w.j - 1)) ** r))
            self._rho[w] = val
        return val

    def length_ratio(self, w, v):
        """|I_v| / |I_w| from raw lengths (the normalization cancels)."""
        sy = self.system
        return mpmath.mpf(sy.raw_length(tuple(v)) / sy.raw_length(tuple(w)))

    def step(self, kind, index, e, point):
        """Image of a local point under one letter, and the derivative there."""
        with mpmath.workprec(self.prec):
            w = point.box
            v = self.action.act_generator(kind, index, w, e)
            rs, rd = self.rho(w), self.rho(v)
            u = mpmath.mpf(point.u)
            image = charts.unit_phi(rs, rd, u)
            slope = charts.unit_dphi(rs, rd, u, image) * self.length_ratio(w, v)
            if image >= 1:  # rounding pushed the point onto the right end
                return self._normalize(LocalPoint(v, image)), slope
            return LocalPoint(v, image), slope

    def _normalize(self, point):
        if point.u >= 1:
            return LocalPoint(BoxIndex(point.box.i, point.box.j + 1), point.u - 1)
        return point

    def evaluate_local(self, word, point):
        """Apply ``word`` right to left; returns the image and the derivative."""
        deriv = mpmath.mpf(1)
        for kind, index, e in reversed(_letters(self.p, word)):
            point, slope = self.step(kind, index, e, point)
            deriv *= slope
        return point, deriv

    # --- global coordinates -------------------------------------------------------

    def to_global(self, point):
        """Enclosure of the global coordinate of a local point."""
        sy = self.system
        pos = sy.position(point.box)
        length = sy.normalized_length(point.box)
        u = sy.ctx.mpf(point.u)
        return sy._padrel(pos + length * u)

    def to_local(self, x):
        """Local point for a global ``x`` (AmbiguousLocation when unresolvable)."""
        sy = self.system
        i, j = sy.locate(x)
        w = BoxIndex.of(i, j)
        pos = sy.position(w)
        length = sy.normalized_length(w)
        u = (sy.ctx.mpf(x) - pos.mid) / length.mid
        # the box boundary enclosures are narrower than eps_pos, clamp rounding
        u = min(max(u, sy.ctx.mpf(0)), 1 - sy.ctx.mpf(2) ** (-self.prec))
        return LocalPoint(w, mpmath.mpf(u))

    def evaluate(self, word, x):
        """Image of a global ``x`` in [0, 1]; returns (value, derivative)."""
        x = mpmath.mpf(x)
        if x <= 0 or x >= 1:
            return x, mpmath.mpf(1)
        point, deriv = self.evaluate_local(word, self.to_local(x))
        return self.to_global(point).mid, deriv

    def derivative(self, word, x):
        return self.evaluate(word, x)[1]

    def image_of_box(self, kind, index, w, e=1):
        """Enclosures of the end points of the image of I_w."""
        v = self.action.act_generator(kind, index, BoxIndex.of(*w), e)
        left = self.to_global(LocalPoint(v, 0))
        right = self.to_global(LocalPoint(BoxIndex(v.i, v.j + 1), 0))
        return v, left, right

    # --- sampling ---------------------------------------------------------------

    def sample_points(self, n, seed=0, radius=5, max_tries=None):
        """Seeded local sample points and the number of skipped draws.

        With k <= 1 the points come from uniform global draws that locate can
        resolve; with k >= 2 global positions are too wide for that, so boxes
        with |i| <= radius and |j| <= radius^d are drawn directly.
        """
        rng = random.Random(seed)
        pts, skipped = [], 0
        if self.p.k <= 1:
            tries = max_tries or 20 * n
            while len(pts) < n and tries:
                tries -= 1
                x = rng.random()
                try:
                    pts.append(self.to_local(x))
                except (iv.AmbiguousLocation, iv.OutOfRange):
                    skipped += 1
            return pts, skipped
        jr = radius ** self.p.d
        for _ in range(n):
            ivec = tuple(rng.randint(-radius, radius) for _ in range(self.p.k))
            w = BoxIndex(ivec, rng.randint(-jr, jr))
            pts.append(LocalPoint(w, mpmath.mpf(rng.random())))
        return pts, skipped

    def export_csv(self, path, n=200, seed=0):
        """Rows (generator, x, g(x), Dg(x)) on sampled points, sorted by x."""
        pts, _ = self.sample_points(n, seed)
        rows = []
        for kind, index in self.action.generators():
            name = self.p.label(kind, index - 1)
            for pt in pts:
                img, d = self.evaluate_local([(name, 1)], pt)
                x = self.to_global(pt).mid
                y = self.to_global(img).mid
                rows.append((name, x, y, d))
        rows.sort(key=lambda r: (r[0], r[1]))
        with open(path, "w", newline="", encoding="utf-8") as fh:
            out = csv.writer(fh)
            out.writerow(["generator", "x", "gx", "dgx"])
            for name, x, y, d in rows:
                out.writerow([name, mpmath.nstr(x, 17), mpmath.nstr(y, 17), mpmath.nstr(d, 17)])


def build(p, pivot, params):
    require_consistent(p, n_random=50)
    return RealizedAction(p, pivot, params)


# --- relations ------------------------------------------------------------------------


@dataclass
class RelationReport:
    max_error: float
    witness: tuple
    samples: int
    skipped: int
    per_relation: list = field(default_factory=list)

    def __str__(self):
        lines = [f"max error {self.max_error:.3e} over {self.samples} points ({self.skipped} skipped)"]
        for (u, v), err in self.per_relation:
            lines.append(f"  {u} = {v}: {err:.3e}")
        if self.witness:
            lines.append(f"  worst at {self.witness}")
        return "\n".join(lines)


def verify_relations(a, relations, n_samples=1000, seed=0):
    """Max over points of |u(x) - v(x)| for each relation u = v.

    The error is measured in global units: when both sides land in the same
    box it is the difference of local places times the box length.
    """
    pts, skipped = a.sample_points(n_samples, seed)
    worst, witness = 0.0, None
    per = []
    for u_word, v_word in relations:
        rel_worst = 0.0
        for pt in pts:
            pu, _ = a.evaluate_local(u_word, pt)
            pv, _ = a.evaluate_local(v_word, pt)
            if pu.box == pv.box:
                err = float(abs(pu.u - pv.u) * a.system.normalized_length(pu.box).hi)
            else:
                err = float(abs(a.to_global(pu).mid - a.to_global(pv).mid))
            if err > rel_worst:
                rel_worst = err
            if err > worst:
                worst, witness = err, (u_word, v_word, str(pt))
        per.append(((u_word, v_word), rel_worst))
    return RelationReport(worst, witness, len(pts), skipped, per)


# --- gluing ---------------------------------------------------------------------------


@dataclass
class FaithfulnessCertificate:
    center_basis: list
    witnesses: list  # (z, pivot, shift) per basis element, None when missing

    @property
    def ok(self):
        return all(w is not None for w in self.witnesses) and bool(self.witnesses)

    def __str__(self):
        lines = [f"certificate {'passes' if self.ok else 'FAILS'}"]
        for z, w in zip(self.center_basis, self.witnesses):
            if w is None:
                lines.append(f"  {z}: no carrier moves it")
            else:
                lines.append(f"  {z}: shifts j by {w[2]} on carrier {w[1]}")
        return "\n".join(lines)


class GluedAction:
    """d copies, copy s (pivot s) rescaled into the carrier [(s-1)/d, s/d]."""

    def __init__(self, p, copies):
        self.p = p
        self.copies = copies
        self.d = len(copies)
        self.carriers = [(mpmath.mpf(s) / self.d, mpmath.mpf(s + 1) / self.d) for s in range(self.d)]
        self.certificate = self._certify()

    def _certify(self):
        basis = center(self.p)
        wits = []
        for z in basis:
            found = None
            if not any(z.n):
                s = next((t for t, m in enumerate(z.m) if m), None)
                if s is not None:
                    act = self.copies[s].action
                    w = BoxIndex((0,) * self.p.k, 0)
                    moved = act.act(z, w)
                    if moved == BoxIndex(w.i, w.j + z.m[s]) and moved != w:
                        found = (z, s + 1, z.m[s])
            wits.append(found)
        return FaithfulnessCertificate(basis, wits)

    def carrier_of(self, x):
        x = mpmath.mpf(x)
        s = min(int(x * self.d), self.d - 1)
        return s

    def evaluate(self, word, x):
        """Glued map at global x: rescale into the carrier copy and back."""
        x = mpmath.mpf(x)
        if x <= 0 or x >= 1:
            return x, mpmath.mpf(1)
        s = self.carrier_of(x)
        a, b = self.carriers[s]
        local = (x - a) * self.d
        y, dy = self.copies[s].evaluate(word, local)
        return a + y / self.d, dy

    def nontrivial_witness(self, g, radius=2):
        """(pivot, box) where ``g`` moves a box, searching |i|, |j| <= radius."""
        rng = range(-radius, radius + 1)
        for s, copy in enumerate(self.copies):
            for ivec in itertools.product(rng, repeat=self.p.k):
                for j in rng:
                    w = BoxIndex(ivec, j)
                    if copy.action.act(g, w) != w:
                        return s + 1, w
        return None


def glue(p, params_per_pivot):
    """Glue the d pivot copies; ``params_per_pivot`` is a list or a single SystemParams."""
    require_consistent(p, n_random=50)
    if isinstance(params_per_pivot, iv.SystemParams):
        params_per_pivot = [params_per_pivot] * p.d
    if len(params_per_pivot) != p.d:
        raise ValueError(f"need {p.d} parameter sets, got {len(params_per_pivot)}")
    copies = [RealizedAction(p, s + 1, prm) for s, prm in enumerate(params_per_pivot)]
    return GluedAction(p, copies)


__all__ = [
    "LocalPoint",
    "RealizedAction",
    "build",
    "verify_relations",
    "RelationReport",
    "GluedAction",
    "FaithfulnessCertificate",
    "glue",
]

"""Catalog groups and the JSON group-spec file format."""

import json
import re

from . import lattice as lt
from .group import GroupPresentation


def heisenberg(n):
    """Discrete (2n+1)-dimensional Heisenberg group.

    f_t = X_t, abelian part in the basis (C, Y_1, ..., Y_n) with
    X_t Y_t X_t^{-1} = Y_t C, so every conjugacy matrix is I + E_{0,t}.
    """
    if n < 1:
        raise ValueError("heisenberg:n needs n >= 1")
    d = n + 1
    conj = []
    for t in range(1, n + 1):
        A = lt.identity(d)
        A[0][t] = 1
        conj.append(A)
    labels = tuple(f"X{t}" for t in range(1, n + 1)) + ("C",) + tuple(f"Y{t}" for t in range(1, n + 1))
    aliases = {"X": "X1", "Y": "Y1"} if n == 1 else {}
    return GroupPresentation(
        n, d, conj, (), labels, meta={"family": "heisenberg", "n": n, "aliases": aliases}
    )


def chain(d):
    """G_d: f acting on Z^d by [f, g_1] = e and [f, g_i] = g_{i-1}."""
    if d < 1:
        raise ValueError("chain:d needs d >= 1")
    A = lt.identity(d)
    for i in range(1, d):
        A[i - 1][i] = 1
    labels = ("f",) + tuple(f"g{i}" for i in range(1, d + 1))
    return GroupPresentation(1, d, [A], (), labels, meta={"family": "chain", "d": d})


def grid(d, k, matrix):
    """Generators g_0, g_{i,j} (1<=i<=k, 1<=j<=d), f_1..f_k with
    [f_s, g_{i,j}] = g_{i,j-1}^{m_{i,s}} and [f_s, g_{i,1}] = g_0^{m_{i,s}}.

    The abelian basis is ordered g_0, g_{1,1..d}, ..., g_{k,1..d}.
    """
    M = [list(row) for row in matrix]
    if d < 1 or k < 1:
        raise ValueError("grid needs d >= 1 and k >= 1")
    if len(M) != k or any(len(row) != k for row in M):
        raise ValueError(f"grid matrix must be {k}x{k}")
    if any(not isinstance(a, int) or a <= 0 for row in M for a in row):
        raise ValueError("grid matrix entries must be positive integers")
    if lt.det(M) == 0:
        raise ValueError("grid matrix must have nonzero determinant")
    rank_a = 1 + k * d

    def idx(i, j):  # 1-based (i, j); j = 0 is g_0
        return 0 if j == 0 else 1 + (i - 1) * d + (j - 1)

    conj = []
    for s in range(1, k + 1):
        A = lt.identity(rank_a)
        for i in range(1, k + 1):
            for j in range(1, d + 1):
                A[idx(i, j - 1)][idx(i, j)] = M[i - 1][s - 1]
        conj.append(A)
    labels = tuple(f"f{s}" for s in range(1, k + 1)) + ("g0",) + tuple(
        f"g{i},{j}" for i in range(1, k + 1) for j in range(1, d + 1)
    )
    meta = {"family": "grid", "d": d, "k": k, "matrix": M, "index": idx}
    return GroupPresentation(k, rank_a, conj, (), labels, meta=meta)


def product(p, q):
    """Direct product with block-diagonal data (f's of p first, then of q)."""
    k, d = p.k + q.k, p.d + q.d
    conj = []
    for A in p.conj:
        B = lt.identity(d)
        for i in range(p.d):
            for j in range(p.d):
                B[i][j] = A[i][j]
        conj.append(B)
    for A in q.conj:
        B = lt.identity(d)
        for i in range(q.d):
            for j in range(q.d):
                B[p.d + i][p.d + j] = A[i][j]
        conj.append(B)
    fcomm = [((s, t), tuple(c) + (0,) * q.d) for (s, t), c in p.fcomm]
    fcomm += [((p.k + s, p.k + t), (0,) * p.d + tuple(c)) for (s, t), c in q.fcomm]
    lp = p.labels or tuple(p.generator_names())
    lq = q.labels or tuple(q.generator_names())
    labels = (
        tuple(f"{x}.1" for x in lp[: p.k])
        + tuple(f"{x}.2" for x in lq[: q.k])
        + tuple(f"{x}.1" for x in lp[p.k :])
        + tuple(f"{x}.2" for x in lq[q.k :])
    )
    return GroupPresentation(k, d, conj, fcomm, labels, meta={"family": "product", "factors": (p, q)})


def abelian(d):
    """Z^d with k = 0."""
    return GroupPresentation(0, d, [], (), None, meta={"family": "abelian", "d": d})


def catalog(ident):
    """Build a catalog presentation from its id string."""
    ident = ident.strip()
    family, sep, arg = ident.partition(":")
    if not sep:
        raise ValueError(f"unknown group id {ident!r}")
    try:
        if family == "heisenberg":
            return heisenberg(int(arg))
        if family == "chain":
            return chain(int(arg))
        if family == "abelian":
            return abelian(int(arg))
        if family == "grid":
            m = re.fullmatch(r"\s*(\d+)\s*,\s*(\d+)\s*,\s*(\[.*\])\s*", arg)
            if not m:
                raise ValueError("expected grid:<d>,<k>,<matrix>")
            matrix = json.loads(m.group(3))
            if not isinstance(matrix, list) or not all(isinstance(r, list) and r for r in matrix):
                raise ValueError("grid matrix must be a nonempty list of nonempty rows")
            return grid(int(m.group(1)), int(m.group(2)), matrix)
        if family == "product":
            left, sep2, right = arg.partition(";")
            if not sep2:
                raise ValueError("expected product:<id>;<id>")
            return product(catalog(left), catalog(right))
    except (json.JSONDecodeError, TypeError) as exc:
        raise ValueError(f"malformed group id {ident!r}: {exc}") from None
    except ValueError as exc:
        if str(exc).startswith("invalid literal"):
            raise ValueError(f"malformed group id {ident!r}") from None
        raise
    raise ValueError(f"unknown group id {ident!r}")


# --- JSON spec files -------------------------------------------------------


class SpecFileError(ValueError):
    pass


def from_dict(doc):
    def need(key):
        if key not in doc:
            raise SpecFileError(f"missing field {key!r}")
        return doc[key]

    k, d = need("k"), need("d")
    if not isinstance(k, int) or not isinstance(d, int):
        raise SpecFileError("fields 'k' and 'd' must be integers")
    conj = need("conj")
    if not isinstance(conj, list) or len(conj) != k:
        raise SpecFileError(f"field 'conj' must list {k} matrices")
    mats = []
    for t, flat in enumerate(conj):
        if isinstance(flat, list) and flat and isinstance(flat[0], list):
            flat = [a for row in flat for a in row]
        if not isinstance(flat, list) or len(flat) != d * d or not all(isinstance(a, int) for a in flat):
            raise SpecFileError(f"conj[{t}] must be a row-major array of {d * d} integers")
        mats.append([flat[i * d : (i + 1) * d] for i in range(d)])
    fcomm = []
    for idx, entry in enumerate(doc.get("fcomm", [])):
        try:
            s, t, c = entry["s"], entry["t"], entry["c"]
        except (KeyError, TypeError):
            raise SpecFileError(f"fcomm[{idx}] needs fields s, t, c") from None
        if not (isinstance(s, int) and isinstance(t, int) and 1 <= s < t <= k):
            raise SpecFileError(f"fcomm[{idx}]: need 1 <= s < t <= k")
        if not isinstance(c, list) or len(c) != d or not all(isinstance(a, int) for a in c):
            raise SpecFileError(f"fcomm[{idx}].c must be {d} integers")
        fcomm.append(((s - 1, t - 1), tuple(c)))
    labels = doc.get("labels")
    try:
        return GroupPresentation(k, d, mats, fcomm, tuple(labels) if labels else None, meta={})
    except ValueError as exc:
        raise SpecFileError(str(exc)) from None


def to_dict(p):
    doc = {
        "k": p.k,
        "d": p.d,
        "conj": [[a for row in A for a in row] for A in p.conj],
        "fcomm": [{"s": s + 1, "t": t + 1, "c": list(c)} for (s, t), c in p.fcomm],
    }
    if p.labels:
        doc["labels"] = list(p.labels)
    return doc


def load_spec(path):
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecFileError(f"{path}: line {exc.lineno}: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise SpecFileError(f"{path}: top level must be an object")
    try:
        return from_dict(doc)
    except SpecFileError as exc:
        raise SpecFileError(f"{path}: {exc}") from None


def save_spec(p, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(to_dict(p), fh, indent=2)
        fh.write("\n")


def resolve_group(source):
    """Catalog id or path to a spec file."""
    if re.match(r"^(heisenberg|chain|grid|product|abelian):", source):
        return catalog(source)
    if source.endswith(".json"):
        return load_spec(source)
    return catalog(source)

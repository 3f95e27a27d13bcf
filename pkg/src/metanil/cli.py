"""Command line entry point.

Options come from three layers: built-in defaults, an optional JSON config
file (``--config``) and flags, later layers winning.  Exit status is 0 on
success, 1 on invalid input and 2 when a computation cannot be carried out.
"""

import argparse
import csv
import dataclasses
import hashlib
import json
import os
import random
import sys

import mpmath

from .catalog import resolve_group, save_spec, to_dict
from . import intervals as iv
from .coset import BoxIndex, CosetAction
from .group import parse_word
from .realization import RealizedAction, glue
from .regularity import DeclaredDecay, PreconditionError, dkn_verdict, holder_report, path_sum_search
from .structure import check_consistency, retriangularize, structure

DEFAULTS = {
    "group": "heisenberg:1",
    "alpha": 0.45,
    "pivot": 1,
    "prec": 128,
    "trunc": None,
    "eps_pos": 1e-12,
    "seed": 0,
    "out": None,
    "levels": "0,12,24",
    "beta": 0.75,
    "budget": 2000,
    "cache_dir": None,
}

DIGITS = 17


class UsageError(Exception):
    pass


class ComputationError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _common(parser):
    g = parser.add_argument_group("run configuration")
    g.add_argument("--config", help="JSON file with option values (flags override it)")
    g.add_argument("--group", help=f"catalog id or group spec JSON path (default: {DEFAULTS['group']})")
    g.add_argument("--alpha", type=float, help=f"target Hölder exponent (default: {DEFAULTS['alpha']})")
    g.add_argument("--pivot", type=int, help=f"pivot index s (default: {DEFAULTS['pivot']})")
    g.add_argument("--prec", type=int, help=f"working precision in bits (default: {DEFAULTS['prec']})")
    g.add_argument("--trunc", type=int, help="truncation radius (default: 1000 for k <= 1, else 60)")
    g.add_argument("--eps-pos", type=float, help=f"position tolerance (default: {DEFAULTS['eps_pos']})")
    g.add_argument("--seed", type=int, help=f"random seed (default: {DEFAULTS['seed']})")
    g.add_argument("--out", help="output directory for CSV/JSON files (default: none, stdout only)")
    g.add_argument("--cache-dir", help="directory for block-mass caches (default: none)")


def build_parser():
    parser = _Parser(prog="metanil", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    group = sub.add_parser("group", help="inspect a group presentation")
    gsub = group.add_subparsers(dest="action", required=True, parser_class=_Parser)
    for name, text in (("info", "structure summary"), ("check", "consistency checks"),
                       ("triangularize", "unitriangular basis change")):
        p = gsub.add_parser(name, help=text)
        p.add_argument("ident", nargs="?", help="catalog id or spec path (overrides --group)")
        _common(p)

    action = sub.add_parser("action", help="coset action shifts")
    asub = action.add_subparsers(dest="action", required=True, parser_class=_Parser)
    for name, text in (("table", "shift table over |i|_1 <= radius"), ("fit", "fit |shift| <= M |i|_1^d")):
        p = asub.add_parser(name, help=text)
        p.add_argument("--radius", type=int, default=4, help="l1 radius (default: 4)")
        _common(p)

    p = sub.add_parser("params", help="interval-system exponents and conditions I-VI")
    p.add_argument("--p", help="override p (one value or comma list)")
    p.add_argument("--r", help="override r (rational, e.g. 9/8)")
    _common(p)

    realize = sub.add_parser("realize", help="evaluate the realized action")
    rsub = realize.add_subparsers(dest="action", required=True, parser_class=_Parser)
    p = rsub.add_parser("eval", help="g(x) and Dg(x) for a word g")
    p.add_argument("--word", required=True, help="word such as 'f' or 'X1 Y1^-1'")
    p.add_argument("--x", required=True, help="point in [0, 1]")
    _common(p)
    p = rsub.add_parser("export", help="CSV of (generator, x, g(x), Dg(x)) samples")
    p.add_argument("--samples", type=int, default=200, help="number of points (default: 200)")
    _common(p)
    p = rsub.add_parser("glue", help="glue the pivot copies and certify faithfulness")
    p.add_argument("--samples", type=int, default=1000,
                   help="random non-identity elements checked (default: 1000)")
    _common(p)

    p = sub.add_parser("holder", help="Hölder quotient trend for one generator")
    p.add_argument("--gen", default="X1", help="generator or word (default: X1)")
    p.add_argument("--exponent", type=float, help="tested exponent (default: --alpha)")
    p.add_argument("--levels", help=f"comma separated levels (default: {DEFAULTS['levels']})")
    _common(p)

    obstruct = sub.add_parser("obstruct", help="wandering-interval obstruction")
    osub = obstruct.add_subparsers(dest="action", required=True, parser_class=_Parser)
    p = osub.add_parser("paths", help="path sums for lengths (1 + |v|_1)^-decay")
    p.add_argument("--k", type=int, default=2, help="number of generators (default: 2)")
    p.add_argument("--decay", type=float, default=2.2, help="decay exponent (default: 2.2)")
    p.add_argument("--beta", type=float, help=f"exponent beta (default: {DEFAULTS['beta']})")
    p.add_argument("--budget", type=int, help=f"steps per walk (default: {DEFAULTS['budget']})")
    _common(p)
    p = osub.add_parser("verdict", help="DKN verdict on the realized action")
    p.add_argument("--g", dest="g_word", default="C", help="central word g (default: C)")
    p.add_argument("--box", default=None, help="box i_1,...,i_k,j (default: origin)")
    p.add_argument("--gens", default=None, help="comma separated f generators (default: all)")
    p.add_argument("--beta", type=float, help=f"exponent beta (default: {DEFAULTS['beta']})")
    p.add_argument("--budget", type=int, help=f"steps per walk (default: {DEFAULTS['budget']})")
    _common(p)
    return parser


# --- configuration ---------------------------------------------------------------


def resolve_config(ns):
    """Merge defaults, the config file and flags into one dict."""
    cfg = dict(DEFAULTS)
    if getattr(ns, "config", None):
        try:
            with open(ns.config, encoding="utf-8") as fh:
                doc = json.load(fh)
        except OSError as exc:
            raise UsageError(f"cannot read config: {exc}") from None
        except json.JSONDecodeError as exc:
            raise UsageError(f"{ns.config}: line {exc.lineno}: {exc.msg}") from None
        if not isinstance(doc, dict):
            raise UsageError(f"{ns.config}: top level must be an object")
        for key, val in doc.items():
            key = key.replace("-", "_")
            if key not in DEFAULTS:
                raise UsageError(f"{ns.config}: unknown option {key!r}")
            cfg[key] = val
    for key in DEFAULTS:
        val = getattr(ns, key, None)
        if val is not None:
            cfg[key] = val
    if getattr(ns, "ident", None):
        cfg["group"] = ns.ident
    if not 0 < float(cfg["alpha"]) < 1:
        raise UsageError("--alpha must lie in (0, 1)")
    if int(cfg["prec"]) < 53:
        raise UsageError("--prec must be at least 53")
    if float(cfg["eps_pos"]) <= 0:
        raise UsageError("--eps-pos must be positive")
    return cfg


def _group(cfg):
    try:
        return resolve_group(cfg["group"])
    except FileNotFoundError:
        raise UsageError(f"no such group spec file: {cfg['group']}") from None


def _params(cfg, p, overrides=None):
    return iv.make_params(cfg["alpha"], p.k, p.d, overrides, pivot=cfg["pivot"],
                          eps_pos=cfg["eps_pos"], trunc=cfg["trunc"], prec=cfg["prec"])


def _out_path(cfg, name):
    if not cfg["out"]:
        return None
    os.makedirs(cfg["out"], exist_ok=True)
    return os.path.join(cfg["out"], name)


def _cache_file(cfg, p, params):
    if not cfg["cache_dir"]:
        return None
    os.makedirs(cfg["cache_dir"], exist_ok=True)
    gkey = hashlib.sha256(json.dumps(to_dict(p), sort_keys=True).encode()).hexdigest()[:16]
    pkey = hashlib.sha256(f"{params.describe()} prec={params.prec}".encode()).hexdigest()[:16]
    return os.path.join(cfg["cache_dir"], f"{gkey}-{pkey}.txt")


def _with_cache(cfg, p, params, sy):
    path = _cache_file(cfg, p, params)
    if path and os.path.exists(path):
        try:
            iv.load_cache(sy, path)
        except ValueError:
            pass  # stale version or different parameters: rebuilt below
    return path


def _realized(cfg, p):
    params = _params(cfg, p)
    a = RealizedAction(p, cfg["pivot"], params)
    cache = _with_cache(cfg, p, params, a.system)
    return a, cache


def _save_cache(a, cache):
    if cache:
        iv.save_cache(a.system, cache)


def _num(x):
    return mpmath.nstr(x, DIGITS)


def _parse_box(text, k):
    try:
        vals = [int(t) for t in text.replace(" ", "").split(",")]
    except ValueError:
        raise UsageError(f"malformed box {text!r}") from None
    if len(vals) != k + 1:
        raise UsageError(f"box needs {k + 1} coordinates")
    return BoxIndex(tuple(vals[:-1]), vals[-1])


def _parse_levels(text):
    try:
        levels = [int(t) for t in str(text).split(",") if t.strip()]
    except ValueError:
        raise UsageError(f"malformed levels {text!r}") from None
    if len(set(levels)) < 2 or min(levels) < 0:
        raise UsageError("need at least two distinct nonnegative levels")
    return levels


# --- commands --------------------------------------------------------------------


def cmd_group(ns, cfg, out):
    p = _group(cfg)
    if ns.action == "info":
        rep = structure(p)
        print(f"k={p.k}", file=out)
        print(f"d={p.d}", file=out)
        print(f"degree {rep.degree}", file=out)
        print(f"center rank {rep.center_rank}", file=out)
        print(f"growth degree {rep.growth_degree}", file=out)
        print(f"series ranks {' '.join(map(str, rep.series_ranks))}", file=out)
        for z in rep.center:
            print(f"center element {p.format(z)}", file=out)
    elif ns.action == "check":
        rep = check_consistency(p, seed=cfg["seed"])
        print(rep, file=out)
        if not rep.ok:
            raise ComputationError(f"inconsistent presentation: {', '.join(rep.failed())}")
    else:
        P, q = retriangularize(p)
        print("basis change P:", file=out)
        for row in P:
            print("  " + " ".join(f"{a:d}" for a in row), file=out)
        for t, A in enumerate(q.conj, start=1):
            print(f"A_{t}:", file=out)
            for row in A:
                print("  " + " ".join(f"{a:d}" for a in row), file=out)
        path = _out_path(cfg, "triangularized.json")
        if path:
            save_spec(q, path)
    return 0


def cmd_action(ns, cfg, out):
    p = _group(cfg)
    if ns.radius < 0:
        raise UsageError("--radius must be nonnegative")
    a = CosetAction(p, cfg["pivot"])
    if ns.action == "table":
        path = _out_path(cfg, "action_table.csv")
        if path:
            a.export_csv(path, ns.radius)
            print(f"wrote {path}", file=out)
        else:
            w = csv.writer(out, lineterminator="\n")
            w.writerow([f"i_{t}" for t in range(1, p.k + 1)] + ["generator", "value"])
            for ivec, name, val in a.table(ns.radius):
                w.writerow([*ivec, name, val])
    else:
        if ns.radius < 2:
            raise UsageError("--radius must be at least 2 for a fit")
        M, slope = a.fit_bound(ns.radius)
        print(f"fitted M {M:.6g}", file=out)
        print(f"log-log slope {slope:.4f} (d = {p.d})", file=out)
    return 0


def cmd_params(ns, cfg, out):
    p = _group(cfg)
    overrides = {}
    if ns.p:
        vals = ns.p.split(",")
        overrides["p"] = vals[0] if len(vals) == 1 else vals
    if ns.r:
        overrides["r"] = ns.r
    params = _params(cfg, p, overrides)
    print(params.describe(), file=out)
    for line in iv.condition_report(params):
        print(line, file=out)
    path = _out_path(cfg, "params.json")
    if path:
        doc = {"alpha": str(params.alpha), "k": params.k, "d": params.d,
               "p": [str(x) for x in params.p], "r": str(params.r), "pivot": params.pivot,
               "eps_pos": params.eps_pos, "trunc": params.trunc, "prec": params.prec}
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=2)
            fh.write("\n")
    return 0


def cmd_realize(ns, cfg, out):
    p = _group(cfg)
    if ns.action == "eval":
        try:
            x = mpmath.mpf(ns.x)
        except (ValueError, TypeError):
            raise UsageError(f"malformed --x {ns.x!r}") from None
        if not 0 <= x <= 1:
            raise UsageError("--x must lie in [0, 1]")
        word = parse_word(ns.word)
        a, cache = _realized(cfg, p)
        y, dy = _eval_with_retry(a, word, x)
        _save_cache(a, cache)
        print(f"y {_num(y)}", file=out)
        print(f"Dg {_num(dy)}", file=out)
    elif ns.action == "export":
        a, cache = _realized(cfg, p)
        path = _out_path(cfg, "realization.csv") or "realization.csv"
        a.export_csv(path, ns.samples, cfg["seed"])
        _save_cache(a, cache)
        print(f"wrote {path}", file=out)
    else:
        g = glue(p, [iv.make_params(cfg["alpha"], p.k, p.d, pivot=s + 1, eps_pos=cfg["eps_pos"],
                                    trunc=cfg["trunc"], prec=cfg["prec"]) for s in range(p.d)])
        print(g.certificate, file=out)
        rng = random.Random(cfg["seed"])
        trivial = 0
        for _ in range(ns.samples):
            n = [rng.randint(-3, 3) for _ in range(p.k)]
            m = [rng.randint(-3, 3) for _ in range(p.d)]
            if not any(n) and not any(m):
                m[0] = 1
            if g.nontrivial_witness(p.element(n, m)) is None:
                trivial += 1
        print(f"random non-identity elements acting trivially: {trivial} of {ns.samples}", file=out)
        if not g.certificate.ok or trivial:
            raise ComputationError("faithfulness certificate failed")
    return 0


def _eval_with_retry(a, word, x):
    try:
        return a.evaluate(word, x)
    except iv.AmbiguousLocation:
        pass
    wider = RealizedAction(a.p, a.pivot, dataclasses.replace(a.params, prec=2 * a.prec))
    try:
        return wider.evaluate(word, x)
    except iv.AmbiguousLocation as exc:
        raise ComputationError(f"point not resolvable to an interval: {exc}") from None


def cmd_holder(ns, cfg, out):
    p = _group(cfg)
    levels = _parse_levels(cfg["levels"] if ns.levels is None else ns.levels)
    exponent = ns.exponent if ns.exponent is not None else cfg["alpha"]
    if not 0 < exponent < 1:
        raise UsageError("--exponent must lie in (0, 1)")
    a, cache = _realized(cfg, p)
    rep = holder_report(a, ns.gen, exponent, levels=levels)
    _save_cache(a, cache)
    print(rep, file=out)
    path = _out_path(cfg, "holder.csv")
    if path:
        rep.write_csv(path)
    return 0


def cmd_obstruct(ns, cfg, out):
    beta = float(ns.beta if ns.beta is not None else cfg["beta"])
    budget = int(ns.budget if ns.budget is not None else cfg["budget"])
    if ns.action == "paths":
        if ns.k < 1 or ns.decay <= 0:
            raise UsageError("need --k >= 1 and --decay > 0")
        decay = ns.decay

        def length(v):
            return (1 + sum(abs(c) for c in v)) ** -decay

        rep = path_sum_search(length, ns.k, beta, budget, decay=DeclaredDecay(1.0, decay), seed=cfg["seed"])
        print(rep, file=out)
    else:
        p = _group(cfg)
        box = _parse_box(ns.box, p.k) if ns.box else BoxIndex((0,) * p.k, 0)
        gens = ns.gens.split(",") if ns.gens else [p.label("f", t) for t in range(p.k)]
        a, cache = _realized(cfg, p)
        rep = dkn_verdict(a, ns.g_word, box, gens, beta, budget=budget, seed=cfg["seed"])
        _save_cache(a, cache)
        print(rep, file=out)
        rep = rep.report
    path = _out_path(cfg, "paths.csv")
    if path:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["step", "generator", "partial_sum"])
            for n, (t, s) in enumerate(zip(rep.path, rep.partial_sums), start=1):
                w.writerow([n, t, f"{s:.12g}"])
    return 0


COMMANDS = {
    "group": cmd_group,
    "action": cmd_action,
    "params": cmd_params,
    "realize": cmd_realize,
    "holder": cmd_holder,
    "obstruct": cmd_obstruct,
}


def run(argv=None, out=None, err=None):
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
        cfg = resolve_config(ns)
        return COMMANDS[ns.command](ns, cfg, out)
    except UsageError as exc:
        print(f"error: {exc}", file=err)
        return 1
    except (ComputationError, iv.AmbiguousLocation, iv.OutOfRange, iv.TruncationTooSmall,
            ArithmeticError) as exc:
        print(f"computation error: {exc}", file=err)
        return 2
    except (ValueError, PreconditionError) as exc:
        print(f"error: {exc}", file=err)
        return 1


def main(argv=None):
    try:
        return run(argv)
    except SystemExit as exc:  # --help
        return exc.code if isinstance(exc.code, int) else 0


__all__ = ["run", "main", "build_parser", "resolve_config", "DEFAULTS"]

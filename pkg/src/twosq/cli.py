"""Command-line front end.

Each subcommand is a thin adapter over one library call. Reports go to
stdout or, with --output, to a file written atomically. CSV floats use 17
significant digits so every value round-trips.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import random
import sys
import tempfile
from dataclasses import asdict, is_dataclass
from fractions import Fraction

from . import __version__
from .errors import DecompositionMismatch, TwosqError

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


# ---------------------------------------------------------------- parsing helpers

def parse_alpha(text: str):
    """sqrt:N, golden, e, or cf:a0,a1,... ."""
    from .dioph import EULER_E, GOLDEN, IrrationalSpec, sqrt_int

    t = text.strip().lower()
    try:
        if t.startswith("sqrt:"):
            return sqrt_int(int(t[5:]))
        if t in ("golden", "phi"):
            return GOLDEN
        if t in ("e", "euler_e"):
            return EULER_E
        if t.startswith("cf:"):
            return IrrationalSpec("explicit_cf", tuple(int(v) for v in t[3:].split(",")))
    except ValueError as exc:
        raise UsageError(f"bad irrational {text!r}: {exc}") from exc
    raise UsageError(f"bad irrational {text!r}; use sqrt:N, golden, e or cf:a0,a1,...")


ALPHA_KEYS = {"sqrt": {"kind", "n"}, "golden": {"kind"}, "e": {"kind"}, "cf": {"kind", "terms"}}


def alpha_from_json(obj):
    from .dioph import EULER_E, GOLDEN, IrrationalSpec, sqrt_int

    if not isinstance(obj, dict) or obj.get("kind") not in ALPHA_KEYS:
        raise UsageError(f"alpha must be an object with kind in {sorted(ALPHA_KEYS)}")
    kind = obj["kind"]
    extra = set(obj) - ALPHA_KEYS[kind]
    if extra:
        raise UsageError(f"unknown alpha keys: {sorted(extra)}")
    try:
        if kind == "sqrt":
            return sqrt_int(int(obj["n"]))
        if kind == "golden":
            return GOLDEN
        if kind == "e":
            return EULER_E
        return IrrationalSpec("explicit_cf", tuple(int(v) for v in obj["terms"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"bad alpha {obj!r}: {exc}") from exc


CONFIG_SCHEMA = {
    "run-experiment": {"alpha": dict, "a": int, "q": int, "q_min": int, "q_max": int,
                       "beta": float, "epsilon": float, "C1": float, "count": bool},
    "count": {"alpha": dict, "X": float, "C1": float, "gamma": str},
    "scaling": {"alpha": dict, "beta": float, "q_list": list, "count": bool},
}


def load_config(path: str, command: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise UsageError("config must be a JSON object")
    schema = CONFIG_SCHEMA[command]
    unknown = set(data) - set(schema)
    if unknown:
        raise UsageError(f"unknown config keys: {sorted(unknown)}")
    for key, typ in schema.items():
        if key not in data:
            continue
        v = data[key]
        ok = isinstance(v, typ) or (typ is float and isinstance(v, int) and not isinstance(v, bool))
        if typ is int and isinstance(v, bool):
            ok = False
        if typ is str and isinstance(v, (int, float)) and not isinstance(v, bool):
            ok = True
        if not ok:
            raise UsageError(f"config key {key!r} must be {typ.__name__}")
    if "alpha" in data:
        data["alpha"] = alpha_from_json(data["alpha"])
    return data


def parse_fraction(text) -> Fraction:
    try:
        return Fraction(str(text))
    except (ValueError, ZeroDivisionError) as exc:
        raise UsageError(f"bad rational {text!r}") from exc


def parse_int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise UsageError(f"bad integer list {text!r}") from exc


def parse_matrix(text: str):
    try:
        rows = [[int(v) for v in r.split(",")] for r in text.split(";")]
    except ValueError as exc:
        raise UsageError(f"bad matrix {text!r}") from exc
    if len(rows) != 2 or any(len(r) != 2 for r in rows):
        raise UsageError("matrix must be 2x2, written a,b;c,d")
    return tuple(tuple(r) for r in rows)


# ---------------------------------------------------------------- output

def _cell(v):
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, float):
        return format(v, ".17g")
    if isinstance(v, complex):
        return f"{v.real:.17g}{v.imag:+.17g}j"
    return str(v)


def _jsonable(v):
    if isinstance(v, complex):
        return {"re": v.real, "im": v.imag}
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, float) and not math.isfinite(v):
        return str(v)
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    return v


def render(rows: list[dict], fmt: str) -> str:
    if fmt == "json":
        return json.dumps([_jsonable(r) for r in rows], indent=2, sort_keys=False) + "\n"
    buf = io.StringIO()
    if rows:
        writer = csv.writer(buf, lineterminator="\n")
        header = list(rows[0])
        writer.writerow(header)
        for r in rows:
            writer.writerow([_cell(r.get(h, "")) for h in header])
    return buf.getvalue()


def write_atomic(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _as_row(obj) -> dict:
    if hasattr(obj, "row"):
        return obj.row()
    if is_dataclass(obj):
        return asdict(obj)
    return dict(obj)


# ---------------------------------------------------------------- subcommands

def cmd_gauss(args):
    from .expsums import gauss_sum, gauss_sum_kronecker
    from .quadforms import parse_form

    form = parse_form(args.form)
    g = gauss_sum(form, args.k, args.h)
    row = {"form": str(form), "k": args.k, "h": args.h, "re": g.real, "im": g.imag}
    ok = True
    if args.k % 2:
        kr = gauss_sum_kronecker(form, args.k, args.h)
        row["kronecker_re"], row["kronecker_im"] = kr.real, kr.imag
        row["residual"] = abs(g - kr)
        ok = row["residual"] <= 1e-8 * max(1.0, abs(g))
    row["passed"] = ok
    return [row], ok


def cmd_kloosterman(args):
    from .expsums import kloosterman

    s = kloosterman(args.m, args.n, args.k)
    return [{"m": args.m, "n": args.n, "k": args.k, "re": s.real, "im": s.imag}], True


def cmd_ramanujan(args):
    from .arith import ramanujan_sum, ramanujan_sum_direct

    c = ramanujan_sum(args.k, args.n)
    d = ramanujan_sum_direct(args.k, args.n)
    ok = abs(c - d) <= 1e-9 * max(1, args.k)
    return [{"k": args.k, "n": args.n, "closed": c, "direct_re": d.real, "direct_im": d.imag,
             "passed": ok}], ok


def cmd_snf(args):
    from .quadforms import smith_normal_form

    sd = smith_normal_form(parse_matrix(args.matrix))
    return [{"U": sd.U, "V": sd.V, "s1": sd.s1, "s2": sd.s2}], True


def cmd_delta_split(args):
    from .quadforms import delta_split

    return [_as_row(delta_split(args.Delta, args.k))], True


def cmd_voronoi(args):
    from .analysis import SmoothWindow
    from .quadforms import parse_form
    from .voronoi import R_MAX, REL_TOL, verify

    rep = verify(parse_form(args.form), args.k, args.h, SmoothWindow("plateau_w", args.X),
                 R_max=args.R_max or R_MAX, rel_tol=args.rel_tol or REL_TOL)
    return [rep.row()], rep.passed


def cmd_approx(args):
    from .dioph import R_CAP, _find

    b, r, err = _find(parse_alpha(args.alpha), args.d, args.r_min, args.r_cap or R_CAP)
    return [{"b": b, "r": r, "error_bound": str(err), "error_bound_float": float(err),
             "threshold": str(Fraction(6 * args.d**2, r * r))}], True


def cmd_pairs(args):
    from .dioph import theorem_pairs

    return [p.row() for p in theorem_pairs(parse_alpha(args.alpha), args.q_min, args.q_max)], True


def _merge(args, command, names):
    cfg = load_config(args.config, command) if args.config else {}
    out = {}
    for n in names:
        v = getattr(args, n, None)
        out[n] = v if v is not None else cfg.get(n)
    if isinstance(out.get("alpha"), str):
        out["alpha"] = parse_alpha(out["alpha"])
    return out


def cmd_run_experiment(args):
    from .experiments import ExperimentConfig, verify_decomposition

    o = _merge(args, "run-experiment", ["alpha", "a", "q", "q_min", "q_max", "beta", "epsilon", "C1",
                                        "count"])
    if o["alpha"] is None or o["beta"] is None:
        raise UsageError("run-experiment needs alpha and beta")
    kw = {k: o[k] for k in ("epsilon", "C1") if o[k] is not None}
    if o["q"] is not None and o["a"] is not None:
        cfg = ExperimentConfig(o["alpha"], o["a"], o["q"], o["beta"], **kw)
    elif o["q_min"] is not None and o["q_max"] is not None:
        cfg = ExperimentConfig.auto(o["alpha"], o["q_min"], o["q_max"], o["beta"], **kw)
    else:
        raise UsageError("give a and q, or q_min and q_max")
    try:
        rep = verify_decomposition(cfg, args.threads, count=bool(o["count"]))
    except DecompositionMismatch as exc:
        print(f"decomposition mismatch: {exc}", file=sys.stderr)
        for k, info in exc.breakdown.items():
            print(f"  k={k}: {info}", file=sys.stderr)
        return [], False
    return [rep.row()], rep.passed


def cmd_count(args):
    from .experiments import approximant_set

    o = _merge(args, "count", ["alpha", "X", "C1", "gamma"])
    if o["C1"] is None:
        o["C1"] = 1
    if any(o[k] is None for k in ("alpha", "X", "gamma")):
        raise UsageError("count needs alpha, X and gamma")
    ns = approximant_set(o["alpha"], float(o["X"]), parse_fraction(o["C1"]),
                         parse_fraction(o["gamma"]), args.threads)
    return [{"alpha": str(o["alpha"]), "X": float(o["X"]), "C1": str(parse_fraction(o["C1"])),
             "gamma": str(parse_fraction(o["gamma"])), "count": len(ns)}], True


def cmd_scaling(args):
    from .experiments import scaling_study

    o = _merge(args, "scaling", ["alpha", "beta", "q_list", "count"])
    if o["alpha"] is None or o["beta"] is None or o["q_list"] is None:
        raise UsageError("scaling needs alpha, beta and q_list")
    q_list = parse_int_list(o["q_list"]) if isinstance(o["q_list"], str) else list(o["q_list"])
    try:
        rows = scaling_study(o["alpha"], float(o["beta"]), q_list, args.threads,
                             count=o["count"] is not False)
    except DecompositionMismatch as exc:
        print(f"decomposition mismatch: {exc}", file=sys.stderr)
        return [], False
    return [asdict(r) for r in rows], all(r.passed for r in rows)


def cmd_selftest(args):
    from .selftest import run_selftest

    rows = run_selftest(random.Random(args.seed))
    return rows, all(r["passed"] for r in rows)


# ---------------------------------------------------------------- dispatcher

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="twosq", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"twosq {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--output", "-o", help="write the report here (atomically) instead of stdout")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--threads", type=int, default=None, help="worker threads (env TWOSQ_THREADS)")
    common.add_argument("--seed", type=int, default=0)
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, func, help_):
        sp = sub.add_parser(name, parents=[common], help=help_)
        sp.set_defaults(func=func)
        return sp

    sp = add("gauss", cmd_gauss, "quadratic Gauss sum G_Q(k, h)")
    sp.add_argument("--form", default="1,0,1")
    sp.add_argument("--k", type=int, required=True)
    sp.add_argument("--h", type=int, default=1)

    sp = add("kloosterman", cmd_kloosterman, "Kloosterman sum S(m, n; k)")
    sp.add_argument("--m", type=int, required=True)
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--k", type=int, required=True)

    sp = add("ramanujan", cmd_ramanujan, "Ramanujan sum c_k(n), closed form and direct")
    sp.add_argument("--k", type=int, required=True)
    sp.add_argument("--n", type=int, required=True)

    sp = add("snf", cmd_snf, "Smith normal form of a 2x2 integer matrix")
    sp.add_argument("--matrix", required=True, help="a,b;c,d")

    sp = add("delta-split", cmd_delta_split, "split gcd(Delta, k) into delta0 * delta1")
    sp.add_argument("--Delta", type=int, required=True)
    sp.add_argument("--k", type=int, required=True)

    sp = add("voronoi-check", cmd_voronoi, "both sides of the Voronoi formula")
    sp.add_argument("--form", default="1,0,1")
    sp.add_argument("--k", type=int, required=True)
    sp.add_argument("--h", type=int, default=1)
    sp.add_argument("--X", type=float, required=True)
    sp.add_argument("--R-max", dest="R_max", type=float, default=None)
    sp.add_argument("--rel-tol", dest="rel_tol", type=float, default=None)

    sp = add("approx", cmd_approx, "certified coprime approximation b/r")
    sp.add_argument("--alpha", required=True)
    sp.add_argument("--d", type=int, default=1)
    sp.add_argument("--r-min", dest="r_min", type=int, default=1)
    sp.add_argument("--r-cap", dest="r_cap", type=int, default=None)

    sp = add("pairs", cmd_pairs, "admissible (a, q) pairs in a range")
    sp.add_argument("--alpha", required=True)
    sp.add_argument("--q-min", dest="q_min", type=int, required=True)
    sp.add_argument("--q-max", dest="q_max", type=int, required=True)

    sp = add("run-experiment", cmd_run_experiment, "check S = T1 + T2 for one configuration")
    sp.add_argument("--config")
    sp.add_argument("--alpha")
    sp.add_argument("--a", type=int)
    sp.add_argument("--q", type=int)
    sp.add_argument("--q-min", dest="q_min", type=int)
    sp.add_argument("--q-max", dest="q_max", type=int)
    sp.add_argument("--beta", type=float)
    sp.add_argument("--epsilon", type=float)
    sp.add_argument("--C1", type=float)
    sp.add_argument("--count", action="store_true", default=None)

    sp = add("count", cmd_count, "exact size of the approximant set")
    sp.add_argument("--config")
    sp.add_argument("--alpha")
    sp.add_argument("--X", type=float)
    sp.add_argument("--C1")
    sp.add_argument("--gamma")

    sp = add("scaling", cmd_scaling, "S/T1 and counts across several q")
    sp.add_argument("--config")
    sp.add_argument("--alpha")
    sp.add_argument("--beta", type=float)
    sp.add_argument("--q-list", dest="q_list")
    sp.add_argument("--no-count", dest="count", action="store_false", default=None)

    add("selftest", cmd_selftest, "quick invariant suite")
    return p


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    if args.threads is None:
        env = os.environ.get("TWOSQ_THREADS")
        if env is not None:
            try:
                args.threads = int(env)
            except ValueError:
                print(f"error: TWOSQ_THREADS={env!r} is not an integer", file=sys.stderr)
                return EXIT_USAGE
    if args.threads is not None and args.threads < 1:
        print("error: --threads must be positive", file=sys.stderr)
        return EXIT_USAGE
    try:
        rows, ok = args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (TwosqError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        # validation and guard errors are ValueErrors; the rest are failed computations
        return EXIT_USAGE if isinstance(exc, ValueError) else EXIT_FAIL
    text = render(rows, args.format)
    if args.output:
        write_atomic(args.output, text)
    else:
        sys.stdout.write(text)
    return EXIT_OK if ok else EXIT_FAIL


def main() -> None:
    sys.exit(run())

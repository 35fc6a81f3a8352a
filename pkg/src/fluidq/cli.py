"""fluidq command line: eval, table, marginal, compare, simulate."""

from __future__ import annotations

import argparse
import math
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Callable, Sequence

import numpy as np

from .errors import DomainError, ModelError, NumericalError
from .evaluate import METHODS, cached_solution, compare, evaluate
from .io import MARGINAL_COLUMNS, TABLE_COLUMNS, to_json, write_csv
from .marginal import MarginalResult, marginal_auto, marginal_m1, marginal_m2
from .model import ModelParams, classify_region, new_model, scaled_point
from .oracle import (
    SimConfig, oracle_density_log, oracle_marginal_log, simulate, thread_count,
)
from .probes import PROBES
from .rays import DENSITY_FORMS, log_density

FIG_LAMBDA = 0.3145
FIG_MU = 0.8473
FIG_C = 10.5

PRESETS: dict[str, dict[str, Any]] = {
    "fig3": {"quantity": "density", "z": [0.5], "y_grid": "0:2:201",
             "note": "ray-form density at z = 0.5; eps = 0.1 figure rates with c = 10.5"},
    "fig4": {"quantity": "density", "z": [1.5], "y_grid": "0:2:201",
             "note": "ray-form density at z = 1.5; eps = 0.1 figure rates with c = 10.5"},
    "fig5": {"quantity": "density", "y": [0.5, 0.6, 0.8, 1.0], "z_grid": "0:2:201",
             "note": "ray-form density against z at y = 0.5, 0.6, 0.8, 1; c = 10.5"},
}

EXIT_FLAGS, EXIT_MODEL, EXIT_NUMERIC = 2, 3, 4


def parse_grid(text: str) -> np.ndarray:
    """'a:b:n' -> n evenly spaced points from a to b inclusive."""
    try:
        a, b, n = text.split(":")
        n = int(n)
        a, b = float(a), float(b)
    except ValueError:
        raise argparse.ArgumentTypeError(f"grid must look like a:b:n, got {text!r}") from None
    if n < 1:
        raise argparse.ArgumentTypeError("grid needs n >= 1")
    return np.linspace(a, b, n)


def parse_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of numbers, got {text!r}") from None


def parse_int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of integers, got {text!r}") from None


def positive_float(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not v > 0.0:
        raise argparse.ArgumentTypeError(f"must be > 0, got {text}")
    return v


def _model_args(p: argparse.ArgumentParser, c_default: float | None) -> None:
    p.add_argument("--lambda", dest="lam", type=float, default=FIG_LAMBDA, help="source on-rate")
    p.add_argument("--mu", type=float, default=FIG_MU, help="source off-rate")
    if c_default is None:
        p.add_argument("--c", type=float, required=True, help="output rate")
    else:
        p.add_argument("--c", type=float, default=c_default, help="output rate")


def _pmap(fn: Callable, items: Sequence) -> list:
    """Order-preserving parallel map capped by FLUIDQ_THREADS."""
    n = min(thread_count(), max(1, len(items)))
    if n == 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


def _header(args: argparse.Namespace, m: ModelParams, command: str) -> list[str]:
    return [f"fluidq {command} lambda={m.lam!r} mu={m.mu!r} c={m.c!r} rho={m.rho!r} eps={m.eps!r}"]


# eval

def cmd_eval(args: argparse.Namespace) -> int:
    m = new_model(args.lam, args.mu, args.c)
    if args.x < 0 or args.k < 0:
        raise DomainError("eval needs --x >= 0 and --k >= 0")
    if args.method == "oracle" or args.with_oracle:
        res = compare(m, args.x, args.k, args.method)
    else:
        res = evaluate(m, args.x, args.k, args.method)
    d = res.to_dict()
    if args.json:
        print(to_json(d))
    else:
        for key in ("x", "k", "y", "z", "region", "method", "log_F", "F", "oracle_log_F", "rel_log_err"):
            print(f"{key}: {d[key]}")
    return 0


# table

def _density_row(m: ModelParams, y: float, z: float, form: str, with_oracle: bool) -> dict[str, Any]:
    x = y * m.c * m.c
    kf = z * m.c
    lv = log_density(m, y, z, form)
    row = {"x": x, "k": kf, "y": y, "z": z, "method": f"density-{form}", "log_F": lv,
           "F": math.exp(lv) if lv > -745.0 else 0.0}
    kr = round(kf)
    if abs(kf - kr) < 1e-9:
        row["k"] = int(kr)
        row["region"] = classify_region(m, scaled_point(m, x, int(kr))).value
        if with_oracle and x > 0.0:
            sol = cached_solution(m)
            if kr <= sol.K_trunc:
                o = oracle_density_log(sol, x, int(kr))
                row["oracle_log_F"] = o
                if o != 0.0 and math.isfinite(o) and math.isfinite(lv):
                    row["rel_log_err"] = abs(lv - o) / abs(o)
    return row


def _f_row(m: ModelParams, x: float, k: int, method: str, with_oracle: bool) -> dict[str, Any]:
    res = compare(m, x, k, method) if with_oracle else evaluate(m, x, k, method)
    d = res.to_dict()
    return {c: d.get(c) for c in TABLE_COLUMNS}


def table_rows(m: ModelParams, quantity: str, outer: Sequence[float], inner: Sequence[float],
               layout: str, method: str = "auto", form: str = "ray",
               with_oracle: bool = False) -> list[dict[str, Any]]:
    """Rows in row-major order: ``outer`` varies slowest.

    layout: 'z-y' (outer z, inner y), 'y-z', or 'k-x'.
    """
    pts = [(o, i) for o in outer for i in inner]
    if quantity == "density":
        if layout == "z-y":
            return _pmap(lambda p: _density_row(m, p[1], p[0], form, with_oracle), pts)
        if layout == "y-z":
            return _pmap(lambda p: _density_row(m, p[0], p[1], form, with_oracle), pts)
        raise DomainError("density tables take a y grid with z values or a z grid with y values")
    if layout == "z-y":
        xk = [(y * m.c * m.c, int(round(z * m.c))) for z, y in pts]
    elif layout == "y-z":
        xk = [(y * m.c * m.c, int(round(z * m.c))) for y, z in pts]
    else:
        xk = [(x, int(k)) for k, x in pts]
    return _pmap(lambda p: _f_row(m, p[0], p[1], method, with_oracle), xk)


def cmd_table(args: argparse.Namespace) -> int:
    preset = PRESETS.get(args.preset) if args.preset else None
    quantity = args.quantity or (preset["quantity"] if preset else "F")
    m = new_model(args.lam, args.mu, args.c)
    comments = _header(args, m, "table")
    if preset:
        comments.append(f"preset {args.preset}: {preset['note']}")
    comments.append(f"quantity={quantity} method={args.method if quantity == 'F' else 'density-' + args.form}")
    y_grid = args.y_grid if args.y_grid is not None else (
        parse_grid(preset["y_grid"]) if preset and "y_grid" in preset else None)
    z_grid = args.z_grid if args.z_grid is not None else (
        parse_grid(preset["z_grid"]) if preset and "z_grid" in preset else None)
    z_list = args.z if args.z is not None else (preset.get("z") if preset else None)
    y_list = args.y if args.y is not None else (preset.get("y") if preset else None)
    if y_grid is not None and z_list is not None:
        rows = table_rows(m, quantity, z_list, y_grid, "z-y", args.method, args.form, args.with_oracle)
    elif z_grid is not None and y_list is not None:
        rows = table_rows(m, quantity, y_list, z_grid, "y-z", args.method, args.form, args.with_oracle)
    elif args.x_grid is not None and args.k is not None:
        if quantity == "density":
            raise DomainError("density tables use scaled coordinates: give --y-grid with --z")
        rows = table_rows(m, quantity, args.k, args.x_grid, "k-x", args.method,
                          with_oracle=args.with_oracle)
    else:
        raise DomainError("table needs --y-grid with --z, --z-grid with --y, or --x-grid with --k")
    _emit(args.out, TABLE_COLUMNS, rows, comments)
    return 0


def _emit(out: str | None, columns: Sequence[str], rows: list[dict[str, Any]], comments: list[str]) -> None:
    if out in (None, "-"):
        write_csv(sys.stdout, columns, rows, comments)
    else:
        with open(out, "w", newline="") as fh:
            write_csv(fh, columns, rows, comments)


# marginal

MARGINAL_PRESETS = {
    "small": [0.0, 0.25, 0.5, 1.0, 2.0, 3.0, 5.0],
}


def marginal_result(m: ModelParams, x: float, method: str) -> MarginalResult:
    if method == "m1":
        return marginal_m1(m, x)
    if method == "m2":
        return marginal_m2(m, x)
    if method == "auto":
        return marginal_auto(m, x)
    if method == "oracle":
        lm = oracle_marginal_log(cached_solution(m), x)
        return MarginalResult(x=x, M=math.exp(lm), log_M=lm, method="Oracle")
    raise DomainError(f"unknown marginal method {method!r}")


def cmd_marginal(args: argparse.Namespace) -> int:
    m = new_model(args.lam, args.mu, args.c)
    if args.x_list is not None:
        xs = args.x_list
    elif args.preset == "large":
        xs = [f * m.c * m.c for f in (0.1, 0.25, 0.5, 0.75, 1.0)]
    elif args.preset:
        xs = MARGINAL_PRESETS[args.preset]
    else:
        raise DomainError("marginal needs --x-list or --preset")
    if any(x < 0 for x in xs):
        raise DomainError("x values must be >= 0")

    def one(x: float) -> dict[str, Any]:
        r = marginal_result(m, x, args.method)
        if args.with_oracle or args.method == "oracle":
            r = r.with_oracle(marginal_result(m, x, "oracle"))
        return {"x": r.x, "method": r.method, "log_M": r.log_M, "M": r.M,
                "oracle_log_M": r.oracle_log_M, "rel_log_err": r.rel_log_err}

    rows = _pmap(one, xs)
    comments = _header(args, m, "marginal")
    if args.method == "auto":
        lo, hi = math.sqrt(m.c), m.c ** 1.5
        comments.append(f"auto: M1 for x <= {lo!r}, M2 for x >= {hi!r}, log-linear blend between")
    _emit(args.out, MARGINAL_COLUMNS, rows, comments)
    return 0


# compare

COMPARE_COLUMNS = ("probe", "regime", "method", "c", "x", "k", "log_F", "oracle_log_F",
                   "rel_log_err", "err_ratio")


def compare_rows(lam: float, mu: float, c_list: Sequence[float], probes=PROBES) -> list[dict[str, Any]]:
    rows = []
    for pr in probes:
        prev = None
        for c in c_list:
            m = new_model(lam, mu, c)
            x, k = pr.point(m)
            res = compare(m, x, k, pr.method)
            err = res.rel_log_err
            rows.append({"probe": pr.name, "regime": pr.regime, "method": res.method, "c": c,
                         "x": x, "k": k, "log_F": res.log_F, "oracle_log_F": res.oracle_log_F,
                         "rel_log_err": err,
                         "err_ratio": (err / prev) if prev not in (None, 0.0) else None})
            prev = err
    return rows


def cmd_compare(args: argparse.Namespace) -> int:
    t0 = time.perf_counter()
    probes = PROBES if not args.probes else tuple(p for p in PROBES if p.name in args.probes)
    if not probes:
        raise DomainError(f"no probe matches {args.probes}; known: {', '.join(p.name for p in PROBES)}")
    rows = compare_rows(args.lam, args.mu, args.c_list, probes)
    comments = [f"fluidq compare lambda={args.lam!r} mu={args.mu!r} c_list={args.c_list}",
                "err_ratio = rel_log_err(c) / rel_log_err(previous c)",
                f"elapsed_s={time.perf_counter() - t0:.1f}"]
    _emit(args.out, COMPARE_COLUMNS, rows, comments)
    return 0


# simulate

def cmd_simulate(args: argparse.Namespace) -> int:
    m = new_model(args.lam, args.mu, args.c)
    cfg = SimConfig(t_max=args.t_max, seed=args.seed, sample_dt=args.sample_dt,
                    burn_in=args.burn_in, replicas=args.replicas)
    xs = args.x_list or [0.0]
    joint = [(x, k) for x in xs for k in (args.k or [])]
    res = simulate(m, cfg, x_grid=xs, joint_points=joint)
    out = res.to_dict()
    out.update(lam=m.lam, mu=m.mu, c=m.c)
    if args.with_oracle:
        sol = cached_solution(m)
        for row in out["marginal"]:
            row["oracle_M"] = math.exp(oracle_marginal_log(sol, row["x"]))
    print(to_json(out))
    if args.out:
        rows = [{"x": x, "k": k, "F": v, "se": s}
                for (x, k), v, s in zip(res.joint_points, res.joint, res.joint_se)]
        rows += [{"x": x, "k": None, "F": 1.0 - v, "se": s}
                 for x, v, s in zip(res.x_grid, res.marginal, res.marginal_se)]
        _emit(args.out, ("x", "k", "F", "se"), rows,
              [f"fluidq simulate t_max={cfg.t_max!r} seed={cfg.seed} replicas={cfg.replicas}",
               "rows with empty k hold Pr[X <= x]"])
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fluidq", description="Asymptotics of a fluid buffer fed by M/M/1 sources")
    sub = p.add_subparsers(dest="command", required=True)

    e = sub.add_parser("eval", help="evaluate F_k(x) at one point")
    _model_args(e, None)
    e.add_argument("--x", type=float, required=True)
    e.add_argument("--k", type=int, required=True)
    e.add_argument("--method", choices=METHODS, default="auto")
    e.add_argument("--with-oracle", action="store_true")
    e.add_argument("--json", action="store_true", help="print the full result as JSON")
    e.set_defaults(func=cmd_eval)

    t = sub.add_parser("table", help="evaluate on a grid and write CSV")
    _model_args(t, FIG_C)
    t.add_argument("--preset", choices=sorted(PRESETS))
    t.add_argument("--quantity", choices=("F", "density"))
    t.add_argument("--form", choices=sorted(DENSITY_FORMS), default="ray")
    t.add_argument("--y-grid", type=parse_grid)
    t.add_argument("--z-grid", type=parse_grid)
    t.add_argument("--x-grid", type=parse_grid)
    t.add_argument("--z", type=parse_list)
    t.add_argument("--y", type=parse_list)
    t.add_argument("--k", type=parse_int_list)
    t.add_argument("--method", choices=METHODS, default="auto")
    t.add_argument("--with-oracle", action="store_true")
    t.add_argument("--out")
    t.set_defaults(func=cmd_table)

    mg = sub.add_parser("marginal", help="Pr[X > x] on a list of x")
    _model_args(mg, FIG_C)
    mg.add_argument("--x-list", type=parse_list)
    mg.add_argument("--preset", choices=("small", "large"))
    mg.add_argument("--method", choices=("m1", "m2", "auto", "oracle"), default="auto")
    mg.add_argument("--with-oracle", action="store_true")
    mg.add_argument("--out")
    mg.set_defaults(func=cmd_marginal)

    cp = sub.add_parser("compare", help="asymptotic vs oracle error across c")
    cp.add_argument("--lambda", dest="lam", type=float, default=FIG_LAMBDA)
    cp.add_argument("--mu", type=float, default=FIG_MU)
    cp.add_argument("--c-list", type=parse_list, default=[10.5, 20.5, 40.5])
    cp.add_argument("--probes", type=lambda s: [v for v in s.split(",") if v])
    cp.add_argument("--out")
    cp.set_defaults(func=cmd_compare)

    s = sub.add_parser("simulate", help="Monte Carlo estimates with batch-means errors")
    _model_args(s, FIG_C)
    s.add_argument("--t-max", type=positive_float, required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--replicas", type=int, default=4)
    s.add_argument("--sample-dt", type=positive_float, default=1.0)
    s.add_argument("--burn-in", type=positive_float)
    s.add_argument("--x-list", type=parse_list)
    s.add_argument("--k", type=parse_int_list)
    s.add_argument("--with-oracle", action="store_true")
    s.add_argument("--out")
    s.set_defaults(func=cmd_simulate)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ModelError as exc:
        print(f"fluidq {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_MODEL
    except NumericalError as exc:
        print(f"fluidq {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except DomainError as exc:
        print(f"fluidq {args.command}: invalid input: {exc}", file=sys.stderr)
        return EXIT_FLAGS


if __name__ == "__main__":
    raise SystemExit(main())

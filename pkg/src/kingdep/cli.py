"""Command line interface: ``kingdep <command> ...``.

Exit codes: 0 success, 2 usage error, 3 result not certified within the
budget, 4 verification failed.
"""
from __future__ import annotations

import json
import logging
import os
import sys
from fractions import Fraction

import click
import numpy as np

from . import bounds as bd
from . import constructions as cons
from . import taxation as tax
from .board import BoardError, BoardSpec
from .ilp import Budget, build_halfdep_model, build_kdep_model, solve_binary, tighten
from .sets import (
    KingSet,
    PatternError,
    density,
    format_pattern,
    is_half_dependent,
    kingset_from_json,
    parse_pattern,
)

EXIT_OK, EXIT_USAGE, EXIT_UNCERTIFIED, EXIT_FAILED = 0, 2, 3, 4

# h(K[n,n]) for n = 1..11 as published
KNOWN_HALF_TABLE = (1, 2, 6, 9, 15, 22, 28, 39, 49, 59, 73)
KNOWN_PROP_BOUNDS = tuple(
    Fraction(a, b) for a, b in ((4, 12), (4, 11), (6, 12), (6, 11), (8, 12), (8, 11), (8, 10), (8, 9), (8, 8))
)
KNOWN_PROP_TEXT = ("4/12", "4/11", "6/12", "6/11", "8/12", "8/11", "8/10", "8/9", "8/8")


def fmt(q) -> str:
    q = Fraction(q)
    if q.denominator == 1:
        return str(q.numerator)
    return f"{q.numerator}/{q.denominator} ≈ {float(q):.6f}"


def exact(q) -> dict:
    q = Fraction(q)
    return {"exact": f"{q.numerator}/{q.denominator}", "decimal": round(float(q), 6)}


def _default_time():
    env = os.environ.get("KD_BUDGET_SECONDS")
    if not env:
        return None
    try:
        val = float(env)
    except ValueError:
        raise click.UsageError(f"KD_BUDGET_SECONDS must be a number, got {env!r}")
    if val <= 0:
        raise click.UsageError("KD_BUDGET_SECONDS must be positive")
    return val


def _budget(node_limit, time_limit) -> Budget:
    if node_limit is not None and node_limit <= 0:
        raise click.UsageError("--node-limit must be positive")
    if time_limit is not None and time_limit <= 0:
        raise click.UsageError("--time-limit must be positive")
    return Budget(node_limit, time_limit if time_limit is not None else _default_time())


def _board(text) -> BoardSpec:
    try:
        return BoardSpec.parse(text)
    except BoardError as exc:
        raise click.UsageError(str(exc))


def _target(k, half):
    if half and k is not None:
        raise click.UsageError("give either --k or --half, not both")
    if not half and k is None:
        raise click.UsageError("one of --k or --half is required")
    if k is not None and k < 0:
        raise click.UsageError("--k must be nonnegative")
    return "half" if half else k


def _read_set(path) -> KingSet:
    try:
        with open(path) as fh:
            text = fh.read()
        if text.lstrip().startswith("{"):
            return kingset_from_json(text)
        return parse_pattern(text)
    except (OSError, PatternError, BoardError, ValueError, KeyError) as exc:
        raise click.UsageError(f"cannot read pattern {path}: {exc}")


def _read_weights(path) -> bd.WeightingFunction:
    try:
        return bd.load_weights(path)
    except (OSError, bd.BoundError, ValueError, ZeroDivisionError) as exc:
        raise click.UsageError(f"cannot read weights {path}: {exc}")


def _emit(ctx_format, data: dict, text: str):
    if ctx_format == "json":
        click.echo(json.dumps(data, indent=2, default=str))
    else:
        click.echo(text.rstrip("\n"))


def _ints(text, name):
    try:
        return tuple(int(x) for x in text.replace(",", " ").split())
    except ValueError:
        raise click.UsageError(f"{name} must be a list of integers")


format_opt = click.option("--format", "fmt_", type=click.Choice(["text", "json"]), default="text", show_default=True)
k_opt = click.option("--k", type=int, default=None, help="dependence threshold")
half_opt = click.option("--half", is_flag=True, help="half-dependence instead of a fixed k")
budget_opts = [
    click.option("--time-limit", type=float, default=None, help="seconds (default: $KD_BUDGET_SECONDS)"),
    click.option("--node-limit", type=int, default=None, help="branch-and-bound nodes"),
]
workers_opt = click.option("--workers", type=int, default=1, show_default=True)


def with_budget(f):
    for opt in reversed(budget_opts):
        f = opt(f)
    return f


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
@click.option("-v", "--verbose", count=True, help="log progress to stderr")
def main(verbose):
    """Exact and certified computations for k-dependent king placements."""
    logging.basicConfig(level=logging.WARNING - 10 * min(verbose, 2), format="%(levelname)s %(name)s: %(message)s")


# --- solve ----------------------------------------------------------------------


@main.command()
@click.argument("board")
@k_opt
@half_opt
@click.option("--weights", type=click.Path(exists=True, dir_okay=False), help="weight grid for the objective")
@click.option("--tighten", "tight", is_flag=True, help="use neighborhood-tightened rows (uniform tori)")
@click.option("--method", type=click.Choice(["auto", "rows", "bnb"]), default="auto", show_default=True)
@with_budget
@workers_opt
@format_opt
@click.option("--output", type=click.Path(dir_okay=False), help="also write the witness pattern here")
def solve(board, k, half, weights, tight, method, time_limit, node_limit, workers, fmt_, output):
    """Maximum (weighted) k-dependent or half-dependent set on BOARD."""
    b = _board(board)
    target = _target(k, half)
    omega = None
    if weights:
        w = _read_weights(weights)
        if w.window.dims != b.dims:
            raise click.UsageError(f"weights are {w.window.dims}, board is {b.dims}")
        omega = w.weights
    if workers < 1:
        raise click.UsageError("--workers must be >= 1")
    model = build_halfdep_model(b, omega) if target == "half" else build_kdep_model(b, target, omega)
    if tight:
        if not b.is_uniform:
            raise click.UsageError("--tighten needs a torus with every side >= 3")
        model = tighten(model, b, bd.half_k(b.d) if target == "half" else target)
    try:
        res = solve_binary(model, _budget(node_limit, time_limit), method=method, workers=workers)
    except ValueError as exc:
        raise click.UsageError(str(exc))
    if output:
        with open(output, "w") as fh:
            fh.write(format_pattern(res.witness))
    data = {"board": str(b), "k": target, **res.to_json()}
    lines = [
        f"board: {b}",
        f"target: {'half' if target == 'half' else f'k={target}'}",
        f"value: {fmt(res.value)}",
        f"status: {res.status}",
        f"upper bound: {fmt(res.best_upper)}",
        f"engine: {res.engine}  nodes: {res.node_count}  time: {res.elapsed:.2f}s",
    ]
    if res.witness.board.d <= 3:
        lines += ["witness:", format_pattern(res.witness)]
    _emit(fmt_, data, "\n".join(lines))
    sys.exit(EXIT_OK if res.proved else EXIT_UNCERTIFIED)


# --- bound ----------------------------------------------------------------------


@main.command()
@click.option("--d", "dim", type=int, default=2, show_default=True)
@k_opt
@half_opt
@click.option("--method", type=click.Choice(["nbhd", "summed", "weighted", "optimize"]), required=True)
@click.option("--tighten", "tight", is_flag=True, help="summed method: use tightened rows")
@click.option("--weights", type=click.Path(exists=True, dir_okay=False))
@click.option("--window", help="window board K[...] for weighted/optimize")
@click.option("--max-iter", type=int, default=200, show_default=True)
@click.option("--save-weights", type=click.Path(dir_okay=False), help="optimize: write the final weighting")
@with_budget
@workers_opt
@format_opt
def bound(dim, k, half, method, tight, weights, window, max_iter, save_weights, time_limit, node_limit, workers, fmt_):
    """Certified upper bound on the limiting density in dimension D."""
    target = _target(k, half)
    if dim < 1:
        raise click.UsageError("--d must be >= 1")
    kk = bd.half_k(dim) if target == "half" else target
    if kk > 3**dim - 1:
        raise click.UsageError(f"k must be at most {3**dim - 1} in dimension {dim}")
    budget = _budget(node_limit, time_limit)
    trace = None
    try:
        if method in ("nbhd", "summed"):
            torus = BoardSpec((4,) * dim, True)
            res = bd.nbhd_bound(torus, target) if method == "nbhd" else bd.summed_constraint_bound(torus, target, tight)
        elif method == "weighted":
            if not weights:
                raise click.UsageError("--method weighted needs --weights")
            w = _read_weights(weights)
            if window and _board(window) != w.window:
                raise click.UsageError(f"weights are on {w.window}, not {window}")
            if w.window.d != dim:
                raise click.UsageError(f"weights are {w.window.d}-dimensional, target is d={dim}")
            res = bd.weighted_bound(w, target, budget, workers)
        else:
            if not window:
                raise click.UsageError("--method optimize needs --window")
            win = _board(window)
            if win.toroidal or win.d != dim:
                raise click.UsageError(f"window must be a {dim}-dimensional K board")
            out = bd.optimize_weights(win, target, budget=budget, max_iter=max_iter, workers=workers)
            res, trace = out.bound, out.trace
            if save_weights:
                bd.save_weights(out.omega.scaled(), save_weights)
    except bd.BoundError as exc:
        raise click.UsageError(str(exc))
    data = res.to_json()
    lines = [
        f"target: d={dim}, {'half' if target == 'half' else f'k={target}'}",
        f"upper bound: {fmt(res.value)}",
        f"certificate: {res.certificate}",
        f"certified: {'yes' if res.certified else 'no'}",
    ]
    if res.certificate == "nbhd-bound":
        lines.append(f"beta*: {res.payload['beta_star']}  |N|: {res.payload['nbhd_size']}")
    if res.certificate == "weighted":
        lines.append(f"M: {fmt(res.payload['M'])}  W: {fmt(res.payload['W'])}")
    if trace is not None:
        data["trace"] = [{k2: (exact(v) if isinstance(v, Fraction) else v) for k2, v in e.items()} for e in trace]
        lines.append(f"iterations: {len(trace)}  converged: {res.diagnostics['converged']}")
        for e in trace:
            m_txt = "-" if e["M"] is None else fmt(e["M"])
            lines.append(f"  {e['iteration']:3d}  theta {fmt(e['theta'])}  M {m_txt}")
    _emit(fmt_, data, "\n".join(lines))
    sys.exit(EXIT_OK if res.certified else EXIT_UNCERTIFIED)


# --- construct ------------------------------------------------------------------


def _summary(s: KingSet) -> dict:
    return {
        "board": str(s.board),
        "kings": len(s),
        "density": exact(density(s)),
        "max_count": s.max_count(),
        "half_dependent": bool(is_half_dependent(s)),
    }


@main.command()
@click.argument(
    "name", type=click.Choice(["congruence", "power", "stripes", "tau1", "halfdep", "pack", "fixture"])
)
@click.option("--n", type=int)
@click.option("--d", "dim", type=int, default=2, show_default=True)
@click.option("--c", "cvec", help="congruence: coefficient vector, e.g. 1,5")
@click.option("--R", "rset", help="congruence: residue set, e.g. 0,1,2")
@click.option("--size", type=int, help="congruence search: |R|")
@k_opt
@click.option("--board", "board_text", help="tau1: torus; pack: the big torus")
@click.option("--tile", type=click.Path(exists=True, dir_okay=False), help="pack: tile pattern on a torus")
@click.option("--polish", type=int, default=0, show_default=True, help="halfdep: band re-optimisation rounds")
@click.option("--which", type=click.Choice(["C", "D"]), help="fixture to print")
@click.option("--regenerate", is_flag=True, help="fixture: recompute instead of loading")
@click.option("--output", type=click.Path(dir_okay=False))
@format_opt
def construct(name, n, dim, cvec, rset, size, k, board_text, tile, polish, which, regenerate, output, fmt_):
    """Build an explicit arrangement and report its dependence level."""

    def need(val, flag):
        if val is None:
            raise click.UsageError(f"{name} needs {flag}")
        return val

    extra = {}
    try:
        if name == "congruence":
            need(n, "--n")
            if size is not None:
                spec = cons.search_congruence(n, dim, size, need(k, "--k"))
                if spec is None:
                    click.echo(f"no (c, R) with |R|={size} is {k}-dependent on T^{dim}[{n}]", err=True)
                    sys.exit(EXIT_FAILED)
            else:
                spec = cons.CongruenceSpec(n, dim, _ints(need(cvec, "--c"), "--c"), frozenset(_ints(need(rset, "--R"), "--R")))
            s = cons.congruence_set(spec)
            extra = {"c": list(spec.c), "R": sorted(spec.R), "f_bound": cons.congruence_dependence(spec)}
        elif name == "power":
            s = cons.power_congruence(dim)
        elif name == "stripes":
            s = cons.stripes(need(n, "--n"))
        elif name == "tau1":
            s = cons.tau1_pattern(_board(need(board_text, "--board")).dims)
        elif name == "halfdep":
            if polish < 0:
                raise click.UsageError("--polish must be >= 0")
            layout = cons.half_dependent_layout(need(n, "--n"))
            s = cons.half_dependent_construction(n, polish) if polish else layout.kings
            extra = {
                "a_copies": layout.a_copies,
                "b_copies": layout.b_copies,
                "gap": layout.gap,
                "stacked_kings": layout.count,
                "formula": round(cons.stacking_formula(n), 6),
            }
        elif name == "pack":
            big = _board(need(board_text, "--board"))
            t = _read_set(need(tile, "--tile"))
            s = cons.pack_torus(big, t.board, t)
            extra = {"copies": cons.pack_count(big, t.board), "tile_kings": len(t)}
        else:
            which_ = need(which, "--which")
            if regenerate:
                s = cons.regenerate_fixture_c() if which_ == "C" else cons.regenerate_fixture_d()
            else:
                s = cons.fixture(which_)
    except (cons.ConstructionError, BoardError) as exc:
        raise click.UsageError(str(exc))
    summary = {**_summary(s), **extra}
    pattern = format_pattern(s) if s.board.d <= 3 else None
    if output:
        if pattern is None:
            with open(output, "w") as fh:
                json.dump(s.to_json(), fh)
        else:
            with open(output, "w") as fh:
                fh.write(pattern)
    data = {"summary": summary, "pattern": pattern}
    if pattern is None:
        data["set"] = s.to_json()
    lines = [] if (output or pattern is None) else [pattern.rstrip("\n")]
    lines += [
        f"kings: {len(s)} on {s.board}",
        f"density: {fmt(density(s))}",
        f"dependence: {s.max_count()}-dependent",
        f"half-dependent: {'yes' if summary['half_dependent'] else 'no'}",
    ]
    lines += [f"{key}: {val}" for key, val in extra.items()]
    _emit(fmt_, data, "\n".join(lines))


# --- verify ---------------------------------------------------------------------


@main.command()
@click.argument("pattern", type=click.Path(exists=True, dir_okay=False))
@k_opt
@half_opt
@format_opt
def verify(pattern, k, half, fmt_):
    """Check a pattern file for k-dependence or half-dependence."""
    target = _target(k, half)
    s = _read_set(pattern)
    bad = s.violations(None if target == "half" else target)
    ok = not bad
    counts = s.neighbor_counts
    viol = [{"vertex": list(v), "count": int(counts[s.board.index(v)])} for v in bad]
    data = {"pass": ok, "target": target, **_summary(s), "violations": viol}
    lines = [f"{'PASS' if ok else 'FAIL'}: {len(s)} kings on {s.board}, {'half' if target == 'half' else f'k={target}'}"]
    lines += [f"  {tuple(v['vertex'])} has {v['count']} neighboring kings" for v in viol]
    _emit(fmt_, data, "\n".join(lines))
    sys.exit(EXIT_OK if ok else EXIT_FAILED)


# --- table ----------------------------------------------------------------------


@main.command()
@click.argument("name", type=click.Choice(["half-table", "prop-bounds"]))
@click.option("--max-n", type=int, default=8, show_default=True)
@click.option("--d", "dim", type=int, default=2, show_default=True, help="prop-bounds dimension")
@click.option("--time-limit", type=float, default=None, help="seconds per cell (default: $KD_BUDGET_SECONDS)")
@format_opt
def table(name, max_n, dim, time_limit, fmt_):
    """Recompute a published table and compare against it."""
    rows, status = [], EXIT_OK
    if name == "half-table":
        if max_n < 1:
            raise click.UsageError("--max-n must be >= 1")
        budget = _budget(None, time_limit)
        for n in range(1, max_n + 1):
            res = solve_binary(build_halfdep_model(BoardSpec((n, n))), budget)
            known = KNOWN_HALF_TABLE[n - 1] if n <= len(KNOWN_HALF_TABLE) else None
            value = int(res.value)
            match = None if known is None or not res.proved else value == known
            rows.append(
                {"n": n, "value": value, "status": res.status, "known": known, "match": match, "elapsed": round(res.elapsed, 2)}
            )
            if not res.proved:
                status = max(status, EXIT_UNCERTIFIED)
            if match is False:
                status = EXIT_FAILED
        lines = [f"{'n':>3} {'h(K[n,n])':>10} {'known':>6}  status"]
        for r in rows:
            mark = {True: "match", False: "MISMATCH", None: "-"}[r["match"]]
            shown = str(r["value"]) if r["status"] == "proved-optimal" else f">={r['value']}"
            lines.append(f"{r['n']:>3} {shown:>10} {str(r['known'] or '-'):>6}  {r['status']} {mark} ({r['elapsed']}s)")
    else:
        if dim < 1:
            raise click.UsageError("--d must be >= 1")
        torus = BoardSpec((4,) * dim, True)
        for kk in range(3**dim):
            res = bd.nbhd_bound(torus, kk)
            b = res.payload["beta_star"]
            raw = f"{b}/{b - kk + 3**dim - 1}"
            known = KNOWN_PROP_TEXT[kk] if dim == 2 else None
            match = None if known is None else raw == known
            rows.append({"k": kk, "beta_star": b, "bound": raw, "value": exact(res.value), "known": known, "match": match})
            if match is False:
                status = EXIT_FAILED
        lines = [f"{'k':>3} {'beta*':>6} {'bound':>7}  known"]
        lines += [f"{r['k']:>3} {r['beta_star']:>6} {r['bound']:>7}  {r['known'] or '-'}" for r in rows]
    _emit(fmt_, {"table": name, "rows": rows}, "\n".join(lines))
    sys.exit(status)


# --- taxation -------------------------------------------------------------------


@main.command()
@click.argument("board")
@click.option("--pattern", type=click.Path(exists=True, dir_okay=False))
@click.option("--exhaustive", "exh", is_flag=True, help="every 3-dependent subset (at most 20 vertices)")
@click.option("--random", "n_random", type=int, help="this many random 3-dependent subsets")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--trace", "show_trace", is_flag=True, help="single mode: include the balance grids")
@format_opt
def taxation(board, pattern, exh, n_random, seed, show_trace, fmt_):
    """Run the money-redistribution check on a 2-D torus."""
    b = _board(board)
    modes = sum(x is not None and x is not False for x in (pattern, exh or None, n_random))
    if modes != 1:
        raise click.UsageError("choose exactly one of --pattern, --exhaustive, --random")
    if not b.toroidal or b.d != 2 or min(b.dims) < 3:
        raise click.UsageError("taxation needs a 2-D torus with sides >= 3")
    if pattern:
        s = _read_set(pattern)
        if s.board != b:
            raise click.UsageError(f"pattern is on {s.board}, not {b}")
        ok, problems = tax.check(s, require_3dep=True)
        data = {"pass": ok, "kings": len(s), "violations": problems}
        if show_trace:
            data["trace"] = tax.redistribute(s).to_json()
        lines = [f"{'PASS' if ok else 'FAIL'}: {len(s)} kings on {b}"]
        lines += [f"  {p}" for p in problems]
        _emit(fmt_, data, "\n".join(lines))
        sys.exit(EXIT_OK if ok else EXIT_FAILED)
    if exh:
        if b.size > 20:
            raise click.UsageError("--exhaustive is limited to boards with at most 20 vertices")
        total, best, failures = tax.exhaustive(b)
        sizes_ok = best * 2 <= b.size
        data = {
            "sets": total,
            "failures": [f.to_json() for f in failures],
            "max_size": best,
            "max_size_at_most_half": sizes_ok,
        }
        lines = [
            f"3-dependent sets checked: {total}",
            f"failures: {len(failures)}",
            f"max 3-dependent size: {best} (mn/2 = {fmt(Fraction(b.size, 2))})",
        ]
        _emit(fmt_, data, "\n".join(lines))
        sys.exit(EXIT_OK if not failures and sizes_ok else EXIT_FAILED)
    if n_random < 1:
        raise click.UsageError("--random must be positive")
    rng = np.random.default_rng(seed)
    failures, best = [], 0
    for _ in range(n_random):
        s = tax.random_3dependent(b, rng)
        best = max(best, len(s))
        ok, problems = tax.check(s)
        if not ok:
            failures.append({"set": s.to_json(), "violations": problems})
    data = {"sets": n_random, "failures": failures, "max_size": best}
    lines = [f"random 3-dependent sets checked: {n_random}", f"failures: {len(failures)}", f"largest: {best}"]
    _emit(fmt_, data, "\n".join(lines))
    sys.exit(EXIT_OK if not failures else EXIT_FAILED)


if __name__ == "__main__":
    main()

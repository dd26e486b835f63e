"""Exact rational linear programming.

A dense two-phase tableau simplex over Python integers: each tableau row is
kept as a list of integer numerators with one positive row denominator, so
pivots stay in integer arithmetic.  Pricing is Dantzig's rule until a run of
degenerate pivots, then Bland's rule, which guarantees termination.

Every optimal solve comes with a dual certificate; :func:`verify` checks it
by exact multiplication.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd
from typing import Sequence

log = logging.getLogger(__name__)

Number = int | Fraction

LE, EQ, GE = "<=", "=", ">="


class LpError(ValueError):
    """Malformed linear program."""


@dataclass
class LinearProgram:
    """``sense`` c.x subject to rows (coeffs, relation, rhs) and bounds.

    ``lower[j]`` may be ``None`` for a free variable; ``upper[j]`` is
    ``None`` when absent.
    """

    objective: list[Fraction]
    sense: str = "min"
    constraints: list[tuple[list[Fraction], str, Fraction]] = field(default_factory=list)
    lower: list[Fraction | None] | None = None
    upper: list[Fraction | None] | None = None
    names: list[str] | None = None

    def __post_init__(self):
        n = len(self.objective)
        self.objective = [Fraction(c) for c in self.objective]
        if self.lower is None:
            self.lower = [Fraction(0)] * n
        if self.upper is None:
            self.upper = [None] * n
        self.lower = [None if x is None else Fraction(x) for x in self.lower]
        self.upper = [None if x is None else Fraction(x) for x in self.upper]
        self.constraints = [([Fraction(a) for a in row], rel, Fraction(rhs)) for row, rel, rhs in self.constraints]
        self.validate()

    @property
    def n(self) -> int:
        return len(self.objective)

    def add_constraint(self, row: Sequence[Number], rel: str, rhs: Number) -> None:
        self.constraints.append(([Fraction(a) for a in row], rel, Fraction(rhs)))
        self.validate()

    def validate(self) -> None:
        if self.sense not in ("min", "max"):
            raise LpError(f"unknown sense {self.sense!r}")
        if len(self.lower) != self.n or len(self.upper) != self.n:
            raise LpError("bound vectors must match the variable count")
        for row, rel, _ in self.constraints:
            if len(row) != self.n:
                raise LpError(f"constraint row has {len(row)} entries, expected {self.n}")
            if rel not in (LE, EQ, GE):
                raise LpError(f"unknown relation {rel!r}")
        for lo, hi in zip(self.lower, self.upper):
            if lo is not None and hi is not None and hi < lo:
                raise LpError("upper bound below lower bound")

    def dump(self) -> str:
        """Human-readable listing for debugging; not a stable format."""
        names = self.names or [f"x{j}" for j in range(self.n)]

        def expr(row):
            terms = [f"{a} {nm}" for a, nm in zip(row, names) if a]
            return " + ".join(terms) or "0"

        out = [f"{self.sense} {expr(self.objective)}", "st"]
        out += [f"  {expr(row)} {rel} {rhs}" for row, rel, rhs in self.constraints]
        out.append("bounds")
        for nm, lo, hi in zip(names, self.lower, self.upper):
            out.append(f"  {'-inf' if lo is None else lo} <= {nm} <= {'inf' if hi is None else hi}")
        return "\n".join(out)


@dataclass
class LpSolution:
    status: str  # optimal | infeasible | unbounded
    value: Fraction | None = None
    primal: list[Fraction] | None = None
    dual: list[Fraction] | None = None  # one multiplier per constraint
    reduced: list[Fraction] | None = None  # c - A^T y
    pivots: int = 0

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


class _Tableau:
    """Rows of integer numerators with a positive denominator per row."""

    def __init__(self, rows: list[list[Fraction]]):
        self.rows: list[list[int]] = []
        self.den: list[int] = []
        for r in rows:
            self.append(r)

    def _reduce(self, i: int) -> None:
        g = gcd(self.den[i], *self.rows[i])
        if g > 1:
            self.rows[i] = [x // g for x in self.rows[i]]
            self.den[i] //= g

    def value(self, i: int, j: int) -> Fraction:
        return Fraction(self.rows[i][j], self.den[i])

    def append(self, row: list[Fraction]) -> None:
        d = 1
        for x in row:
            d = d * x.denominator // gcd(d, x.denominator)
        self.rows.append([int(x * d) for x in row])
        self.den.append(d)
        self._reduce(len(self.rows) - 1)

    def pivot(self, r: int, s: int) -> None:
        prow = self.rows[r]
        p = prow[s]
        if p < 0:
            prow = [-x for x in prow]
            p = -p
        self.rows[r] = prow
        self.den[r] = p
        self._reduce(r)
        prow, p = self.rows[r], self.den[r]
        for i in range(len(self.rows)):
            if i == r:
                continue
            row = self.rows[i]
            e = row[s]
            if e == 0:
                continue
            self.rows[i] = [a * p - e * b for a, b in zip(row, prow)]
            self.den[i] *= p
            self._reduce(i)


def _standard_form(p: LinearProgram):
    """Map ``p`` to min c'x', A'x' = b', x' >= 0 with b' >= 0.

    Returns the tableau pieces plus enough bookkeeping to map primal and
    dual values back.
    """
    c = p.objective if p.sense == "min" else [-x for x in p.objective]
    # column map: each original var -> list of (std column, sign), plus offset
    cols: list[list[tuple[int, int]]] = []
    shift: list[Fraction] = []
    ncol = 0
    for j in range(p.n):
        lo, hi = p.lower[j], p.upper[j]
        if lo is not None:
            cols.append([(ncol, 1)])
            shift.append(lo)
            ncol += 1
        elif hi is not None:
            cols.append([(ncol, -1)])  # x = hi - x'
            shift.append(hi)
            ncol += 1
        else:
            cols.append([(ncol, 1), (ncol + 1, -1)])
            shift.append(Fraction(0))
            ncol += 2
    rows: list[tuple[list[Fraction], str, Fraction, int]] = []  # (coeffs, rel, rhs, origin)
    for i, (row, rel, rhs) in enumerate(p.constraints):
        std = [Fraction(0)] * ncol
        b = rhs
        for j, a in enumerate(row):
            if a:
                b -= a * shift[j]
                for col, sg in cols[j]:
                    std[col] += a * sg
        rows.append((std, rel, b, i))
    for j in range(p.n):
        lo, hi = p.lower[j], p.upper[j]
        if lo is not None and hi is not None:
            std = [Fraction(0)] * ncol
            std[cols[j][0][0]] = Fraction(1)
            rows.append((std, LE, hi - lo, -1 - j))
    cstd = [Fraction(0)] * ncol
    for j, cj in enumerate(c):
        for col, sg in cols[j]:
            cstd[col] += cj * sg
    const = sum((cj * s for cj, s in zip(c, shift)), Fraction(0))
    return cols, shift, rows, cstd, const


def solve_lp(p: LinearProgram, guide: bool = False, max_pivots: int = 1_000_000) -> LpSolution:
    """Solve ``p`` exactly.

    With ``guide=True`` a floating-point HiGHS solve is run first and its
    positive columns are preferred when choosing entering variables; the
    final basis is still established and checked in exact arithmetic.
    """
    p.validate()
    cols, shift, rows, cstd, const = _standard_form(p)
    ncol = len(cstd)
    m = len(rows)
    # slack/surplus columns, then one identity column per row (slack or artificial)
    n_extra = sum(1 for r in rows if r[1] != EQ)
    width = ncol + n_extra + m
    data: list[list[Fraction]] = []
    row_sign: list[int] = []
    art_cols: list[int] = []
    natural: list[bool] = []
    extra = ncol
    for i, (coef, rel, rhs, _) in enumerate(rows):
        r = coef + [Fraction(0)] * (n_extra + m) + [rhs]
        if rel == LE:
            r[extra] = Fraction(1)
        elif rel == GE:
            r[extra] = Fraction(-1)
        slack_col = extra if rel != EQ else None
        if rel != EQ:
            extra += 1
        sign = 1
        if rhs < 0:
            r = [-x for x in r]
            sign = -1
        row_sign.append(sign)
        ident = ncol + n_extra + i
        r[ident] = Fraction(1)
        art_cols.append(ident)
        # a +1 slack on a nonnegative rhs row can stand in for the artificial
        natural.append(slack_col is not None and r[slack_col] == 1)
        data.append(r)
    # phase 1 objective: sum of artificials on rows without a natural basis
    tab = _Tableau(data)
    basis = [art_cols[i] for i in range(m)]
    is_art = [False] * width
    for i in range(m):
        if natural[i]:
            # swap the identity column for the slack: both are unit vectors
            slack = next(j for j in range(ncol, ncol + n_extra) if tab.rows[i][j] != 0)
            basis[i] = slack
        else:
            is_art[art_cols[i]] = True
    # identity columns of natural rows are never allowed to enter
    frozen = {art_cols[i] for i in range(m) if natural[i]}

    preferred: set[int] = set()
    if guide and ncol:
        preferred = _float_guide(cstd, rows, ncol)

    cost2 = cstd + [Fraction(0)] * (n_extra + m)
    phase1_cost = [Fraction(1) if is_art[j] else Fraction(0) for j in range(width)]
    # the two cost rows ride along as extra tableau rows holding reduced costs
    for cost in (phase1_cost, cost2):
        reduced_row = list(cost) + [Fraction(0)]
        for i, j in enumerate(basis):
            if cost[j]:
                for col in range(width + 1):
                    t = tab.rows[i][col]
                    if t:
                        reduced_row[col] -= cost[j] * Fraction(t, tab.den[i])
        tab.append(reduced_row)
    obj1, obj2 = m, m + 1

    pivots = _simplex(tab, m, basis, obj1, frozen, preferred, max_pivots)
    if -tab.value(obj1, width) > 0:
        return LpSolution("infeasible", pivots=pivots)
    # drive zero-level artificials out of the basis where possible
    for i in range(m):
        if is_art[basis[i]]:
            for j in range(ncol + n_extra):
                if tab.rows[i][j] != 0 and j not in basis:
                    tab.pivot(i, j)
                    basis[i] = j
                    pivots += 1
                    break
    banned = {j for j in range(width) if is_art[j]} | frozen
    try:
        pivots += _simplex(tab, m, basis, obj2, banned, preferred, max_pivots)
    except _Unbounded as exc:
        return LpSolution("unbounded", pivots=pivots + exc.args[0])

    xstd = [Fraction(0)] * width
    for i, j in enumerate(basis):
        xstd[j] = tab.value(i, width)
    x = []
    for j in range(p.n):
        v = shift[j]
        for col, sg in cols[j]:
            v += sg * xstd[col]
        x.append(v)
    value = sum((cj * xj for cj, xj in zip(p.objective, x)), Fraction(0))

    # identity column i has cost 0, so its reduced cost is -y_i
    y_row = [-tab.value(obj2, art_cols[i]) * row_sign[i] for i in range(m)]
    flip = 1 if p.sense == "min" else -1
    dual = [Fraction(0)] * len(p.constraints)
    for (_, _, _, origin), yi in zip(rows, y_row):
        if origin >= 0:
            dual[origin] = yi * flip
    reduced = list(p.objective)
    for i, (row, _, _) in enumerate(p.constraints):
        if dual[i]:
            for j, a in enumerate(row):
                if a:
                    reduced[j] -= a * dual[i]
    return LpSolution("optimal", value, x, dual, reduced, pivots)


class _Unbounded(Exception):
    pass


def _simplex(tab: _Tableau, m: int, basis: list[int], obj: int, banned, preferred, max_pivots) -> int:
    """Minimize the cost whose reduced costs sit in tableau row ``obj``."""
    if m == 0:
        return 0
    width = len(tab.rows[0]) - 1
    pivots = 0
    degenerate_run = 0
    bland = False
    while True:
        in_basis = set(basis)
        drow = tab.rows[obj]
        s = None
        best_key = None
        for j in range(width):
            d = drow[j]
            if d >= 0 or j in banned or j in in_basis:
                continue
            if bland:
                s = j
                break
            # den is shared across the row, so numerators order like values
            key = (j not in preferred, d)
            if s is None or key < best_key:
                s, best_key = j, key
        if s is None:
            return pivots
        # ratio test, ties broken by smallest basic column index
        r = None
        r_ratio = None
        for i in range(m):
            t = tab.rows[i][s]
            if t > 0:
                ratio = Fraction(tab.rows[i][width], t)
                if r is None or ratio < r_ratio or (ratio == r_ratio and basis[i] < basis[r]):
                    r, r_ratio = i, ratio
        if r is None:
            raise _Unbounded(pivots)
        degenerate_run = degenerate_run + 1 if r_ratio == 0 else 0
        if degenerate_run > 50 and not bland:
            log.debug("switching to Bland's rule after %d degenerate pivots", degenerate_run)
            bland = True
        tab.pivot(r, s)
        basis[r] = s
        pivots += 1
        if pivots >= max_pivots:
            raise RuntimeError("simplex pivot limit reached")


def _float_guide(cstd, rows, ncol) -> set[int]:
    import numpy as np
    from scipy.optimize import linprog

    a_ub, b_ub, a_eq, b_eq = [], [], [], []
    for coef, rel, rhs, _ in rows:
        r = [float(x) for x in coef]
        if rel == LE:
            a_ub.append(r)
            b_ub.append(float(rhs))
        elif rel == GE:
            a_ub.append([-x for x in r])
            b_ub.append(-float(rhs))
        else:
            a_eq.append(r)
            b_eq.append(float(rhs))
    res = linprog(
        np.array([float(x) for x in cstd]),
        A_ub=np.array(a_ub) if a_ub else None,
        b_ub=np.array(b_ub) if b_ub else None,
        A_eq=np.array(a_eq) if a_eq else None,
        b_eq=np.array(b_eq) if b_eq else None,
        bounds=[(0, None)] * ncol,
        method="highs",
    )
    if res.status != 0:
        return set()
    return {j for j in range(ncol) if res.x[j] > 1e-9}


def verify(p: LinearProgram, sol: LpSolution) -> bool:
    """Check primal feasibility, dual feasibility and equal objectives exactly."""
    if not sol.optimal:
        return False
    x, y = sol.primal, sol.dual
    for (row, rel, rhs) in p.constraints:
        lhs = sum((a * xj for a, xj in zip(row, x) if a), Fraction(0))
        if (rel == LE and lhs > rhs) or (rel == GE and lhs < rhs) or (rel == EQ and lhs != rhs):
            return False
    for xj, lo, hi in zip(x, p.lower, p.upper):
        if (lo is not None and xj < lo) or (hi is not None and xj > hi):
            return False
    # normalise to minimisation: c.x >= y.b + sum over bounds of r_j * bound
    sg = 1 if p.sense == "min" else -1
    for (row, rel, _), yi in zip(p.constraints, y):
        yi = yi * sg
        if (rel == LE and yi > 0) or (rel == GE and yi < 0):
            return False
    reduced = list(p.objective)
    for (row, _, _), yi in zip(p.constraints, y):
        for j, a in enumerate(row):
            if a:
                reduced[j] -= a * yi
    dual_value = sum((yi * rhs for (_, _, rhs), yi in zip(p.constraints, y)), Fraction(0))
    for rj, lo, hi in zip(reduced, p.lower, p.upper):
        rj = rj * sg
        if rj > 0:
            if lo is None:
                return False
            dual_value += sg * rj * lo
        elif rj < 0:
            if hi is None:
                return False
            dual_value += sg * rj * hi
    return dual_value == sol.value

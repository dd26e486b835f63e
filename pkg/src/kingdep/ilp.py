"""Binary programs for k-dependence and half-dependence, and their exact solution.

Each vertex v contributes one row

    a_v * x_v + sum_{u in N(v)} mult(u) * x_u <= b_v

with a_v = |N(v)| - k, b_v = |N(v)| for k-dependence, a_v = ceil(|N(v)|/2),
b_v = |N(v)| for half-dependence, and a_v = beta* - k, b_v = beta* after
neighborhood tightening.  Degrees are counted with multiplicity.

Two exact engines are available:

* ``rows``: transfer-matrix dynamic programming for 2-D boards with a short
  side of at most 11, or at most 6 on a torus (see :mod:`kingdep.rowdp`);
* ``bnb``: depth-first branch-and-bound with LP relaxation bounds.  The LP
  is solved in floating point, but the bound used for pruning is the
  Lagrangian value of the returned duals, valid for any nonnegative
  multipliers, so solver inaccuracy cannot cut off an optimum.
"""
from __future__ import annotations

import itertools
import logging
import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy import sparse
from scipy.optimize import linprog

from . import rowdp
from .board import BoardSpec, adjacency_matrix, degrees, neighborhood_subgraph
from .sets import KingSet

log = logging.getLogger(__name__)


class ModelError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class BinaryProgram:
    """max weights.x subject to A x <= b, x binary (one variable per vertex)."""

    board: BoardSpec
    A: sparse.csr_matrix  # integer coefficients
    b: np.ndarray
    weights: tuple[Fraction, ...]
    kind: str  # "kdep", "halfdep" or "custom"
    k: int | None = None
    tightened: bool = False

    @property
    def n(self) -> int:
        return self.A.shape[1]

    def row(self, v: int) -> tuple[dict[int, int], int]:
        start, stop = self.A.indptr[v], self.A.indptr[v + 1]
        return dict(zip(self.A.indices[start:stop].tolist(), self.A.data[start:stop].tolist())), int(self.b[v])

    def is_feasible(self, x: Sequence[int]) -> bool:
        x = np.asarray(x, dtype=np.int64)
        return bool(np.all(self.A @ x <= self.b))

    def objective(self, x: Sequence[int]) -> Fraction:
        return sum((w for w, xi in zip(self.weights, x) if xi), Fraction(0))

    @property
    def uniform(self) -> bool:
        return all(w == self.weights[0] for w in self.weights)

    def int_weights(self) -> tuple[np.ndarray, int]:
        """Weights scaled to integers, plus the scale factor."""
        scale = 1
        for w in self.weights:
            scale = math.lcm(scale, w.denominator)
        ints = [int(w * scale) for w in self.weights]
        if max(map(abs, ints), default=0) < 1 << 62:
            return np.array(ints, dtype=np.int64), scale
        return np.array(ints, dtype=object), scale


def _weights(board: BoardSpec, omega) -> tuple[Fraction, ...]:
    if omega is None:
        return (Fraction(1),) * board.size
    w = getattr(omega, "weights", omega)
    w = np.asarray(w, dtype=object).ravel()
    if len(w) != board.size:
        raise ModelError(f"weighting has {len(w)} entries, {board} has {board.size} vertices")
    out = tuple(Fraction(x) for x in w)
    if any(x < 0 for x in out):
        raise ModelError("weights must be nonnegative")
    return out


def _model(board, self_coef, rhs, omega, kind, k=None, tightened=False) -> BinaryProgram:
    adj = adjacency_matrix(board).tolil(copy=True)
    adj.setdiag(self_coef)
    A = adj.tocsr()
    A.eliminate_zeros()
    A.sort_indices()
    return BinaryProgram(board, A, np.asarray(rhs, dtype=np.int64), _weights(board, omega), kind, k, tightened)


def build_kdep_model(board: BoardSpec, k: int, omega=None) -> BinaryProgram:
    if k < 0:
        raise ModelError("k must be nonnegative")
    deg = degrees(board)
    return _model(board, deg - k, deg, omega, "kdep", k)


def build_halfdep_model(board: BoardSpec, omega=None) -> BinaryProgram:
    deg = degrees(board)
    return _model(board, -(-deg // 2), deg, omega, "halfdep")


def tighten(model: BinaryProgram, board: BoardSpec | None = None, k: int | None = None) -> BinaryProgram:
    """Replace every row by (beta* - k) x_v + sum x_u <= beta*."""
    board = board or model.board
    k = model.k if k is None else k
    if model.kind != "kdep" or k is None:
        raise ModelError("tightening applies to k-dependence models")
    if not board.toroidal:
        raise ModelError("tightening needs a vertex-transitive (toroidal) board")
    bs = beta_star(board, k)
    n = board.size
    return _model(board, np.full(n, bs - k), np.full(n, bs), model.weights, "kdep", k, tightened=True)


def beta_star(board: BoardSpec, k: int) -> int:
    """beta_k of the subgraph induced by one neighborhood of a uniform torus."""
    if not board.toroidal:
        raise ModelError("beta* is defined here for toroidal boards")
    if not board.is_uniform:
        raise ModelError("beta* needs every side >= 3")
    if k < 0:
        raise ModelError("k must be nonnegative")
    # sides of 3 wrap inside the neighborhood; every side >= 4 looks alike
    return _beta_star(tuple(min(n, 4) for n in board.dims), k)


_BETA_STAR: dict[tuple, int] = {}


def _beta_star(dims: tuple[int, ...], k: int) -> int:
    key = (dims, k)
    if key not in _BETA_STAR:
        g = neighborhood_subgraph(BoardSpec(dims, True), (1,) * len(dims))
        adj = np.array(g.adjacency, dtype=np.int64)
        _BETA_STAR[key] = max_kdep_in_graph(adj, k)
    return _BETA_STAR[key]


def max_kdep_in_graph(adj: np.ndarray, k: int) -> int:
    """beta_k of an explicit small graph given by its multiplicity matrix."""
    nv = len(adj)
    if nv == 0:
        return 0
    if nv <= 20:
        return max(len(s) for s in _kdep_subsets(adj, k))
    deg = adj.sum(axis=1)
    A = sparse.csr_matrix(adj + np.diag(np.maximum(deg - k, 0)))
    model = BinaryProgram(BoardSpec((nv,), False), A, deg.astype(np.int64), (Fraction(1),) * nv, "custom", k)
    res = _bnb(model, node_limit=None, time_limit=None)
    return int(res[0])


def _kdep_subsets(adj: np.ndarray, k: int):
    nv = len(adj)
    for size in range(nv, -1, -1):
        found = False
        for combo in itertools.combinations(range(nv), size):
            sub = adj[np.ix_(combo, combo)]
            if size == 0 or sub.sum(axis=1).max() <= k:
                found = True
                yield combo
                break
        if found:
            return


# --- solving -------------------------------------------------------------------


@dataclass
class Budget:
    node_limit: int | None = None
    time_limit: float | None = None


@dataclass
class SolveResult:
    value: Fraction
    witness: KingSet
    status: str  # "proved-optimal" or "bounds-only"
    best_upper: Fraction
    node_count: int = 0
    elapsed: float = 0.0
    root_bound: Fraction | None = None
    engine: str = ""
    extra: dict = field(default_factory=dict)

    @property
    def proved(self) -> bool:
        return self.status == "proved-optimal"

    def to_json(self) -> dict:
        from .sets import format_pattern

        out = {
            "value": _frac_json(self.value),
            "status": self.status,
            "best_upper": _frac_json(self.best_upper),
            "root_relaxation": None if self.root_bound is None else _frac_json(self.root_bound),
            "node_count": self.node_count,
            "elapsed": round(self.elapsed, 3),
            "engine": self.engine,
            "witness": self.witness.to_json(),
        }
        if self.witness.board.d <= 3:
            out["pattern"] = format_pattern(self.witness)
        return out


def _frac_json(q: Fraction) -> dict:
    q = Fraction(q)
    return {"exact": f"{q.numerator}/{q.denominator}", "decimal": round(float(q), 6)}


def rows_engine_applicable(model: BinaryProgram) -> bool:
    b = model.board
    if b.d != 2 or model.kind == "custom":
        return False
    if b.toroidal:
        return min(b.dims) <= rowdp.MAX_TORUS_WIDTH and max(b.dims) >= 3
    return min(b.dims) <= rowdp.MAX_WIDTH


def solve_binary(
    model: BinaryProgram,
    budget: Budget | None = None,
    method: str = "auto",
    workers: int = 1,
) -> SolveResult:
    """Maximise the model's objective over binary vectors.

    ``method`` is ``"auto"``, ``"rows"`` or ``"bnb"``.  A search that runs
    out of budget returns status ``bounds-only`` with the best witness found
    and the root LP bound.
    """
    budget = budget or Budget()
    if workers < 1:
        raise ValueError("workers must be >= 1")
    start = time.monotonic()
    if method == "auto":
        method = "rows" if rows_engine_applicable(model) else "bnb"
    if method == "rows":
        if not rows_engine_applicable(model):
            raise ModelError("row engine needs a 2-D board with a side <= 11 (<= 6 on a torus)")
        try:
            return _solve_rows(model, budget, start)
        except (rowdp.DPBudgetExceeded, OverflowError) as exc:
            log.info("row engine stopped (%s); reporting bounds only", exc)
            return _bounds_only(model, start, "rows")
    if method != "bnb":
        raise ValueError(f"unknown method {method!r}")
    value, x, nodes, proved, root = _bnb(model, budget.node_limit, budget.time_limit)
    scale = model.int_weights()[1]
    witness = KingSet(model.board, np.asarray(x, dtype=bool))
    assert model.is_feasible(x)
    val = model.objective(x)
    assert val * scale == value
    upper = val if proved else max(val, root)
    return SolveResult(
        val,
        witness,
        "proved-optimal" if proved else "bounds-only",
        upper,
        nodes,
        time.monotonic() - start,
        root,
        "bnb",
    )


def _caps(model: BinaryProgram):
    """Per-cell neighbor-count caps for x_v = 0 and x_v = 1, or None."""
    board = model.board
    adj = adjacency_matrix(board)
    A = model.A
    diag = A.diagonal()
    off = (A - sparse.diags(diag)).tocsr()
    off.eliminate_zeros()
    if (off != adj).nnz:
        return None
    # a row that can never bind gets a cap the engine treats as absent
    reach = np.asarray(adj.sum(axis=1)).ravel()
    cap0 = np.where(model.b >= reach, 99, model.b)
    cap1 = np.where(model.b - diag >= reach, 99, model.b - diag)
    return cap0.reshape(board.dims), cap1.reshape(board.dims)


def _solve_rows(model: BinaryProgram, budget: Budget, start: float) -> SolveResult:
    caps = _caps(model)
    if caps is None:
        raise ModelError("model rows are not neighbor-count caps; use method='bnb'")
    w, scale = model.int_weights()
    if w.dtype == object:
        raise OverflowError("scaled weights exceed 64-bit range")
    m, n = model.board.dims
    w = w.reshape(m, n)
    cap0, cap1 = caps
    transpose = n > m
    if transpose:
        w, cap0, cap1 = w.T, cap0.T, cap1.T
    engine = rowdp.solve_torus_rows if model.board.toroidal else rowdp.solve_rows
    value, x = engine(np.ascontiguousarray(w), cap0, cap1, budget.time_limit)
    if value is None:
        raise ModelError("model is infeasible")
    if transpose:
        x = x.T
    x = x.ravel()
    if not model.is_feasible(x):
        raise AssertionError("row engine produced an infeasible witness")
    val = model.objective(x)
    if val * scale != value:
        raise AssertionError("row engine value does not match its witness")
    return SolveResult(
        val, KingSet(model.board, x.astype(bool)), "proved-optimal", val, 0, time.monotonic() - start, None, "rows"
    )


def _bounds_only(model: BinaryProgram, start: float, engine: str) -> SolveResult:
    x = _greedy(model, np.zeros(model.n, dtype=np.int64), np.ones(model.n, dtype=np.int64), None)
    root = root_bound(model)
    val = model.objective(x)
    return SolveResult(
        val,
        KingSet(model.board, x.astype(bool)),
        "bounds-only",
        max(val, root),
        0,
        time.monotonic() - start,
        root,
        engine,
    )


def lagrangian_bound(model: BinaryProgram, y, lo=None, hi=None, exact: bool = False):
    """max over lo <= x <= hi of c.x + y.(b - A x), valid for any y >= 0."""
    n = model.n
    lo = np.zeros(n, dtype=np.int64) if lo is None else lo
    hi = np.ones(n, dtype=np.int64) if hi is None else hi
    if exact:
        c, scale = model.int_weights()
        yq = [Fraction(max(float(t), 0.0)).limit_denominator(1 << 20) for t in y]
        A = model.A.tocsc()
        total = sum((yi * int(bi) for yi, bi in zip(yq, model.b)), Fraction(0))
        for j in range(n):
            rj = Fraction(int(c[j]))
            for i, a in zip(A.indices[A.indptr[j] : A.indptr[j + 1]], A.data[A.indptr[j] : A.indptr[j + 1]]):
                rj -= yq[i] * int(a)
            total += rj * (int(hi[j]) if rj > 0 else int(lo[j]))
        return total / scale
    c = model.int_weights()[0].astype(float)
    y = np.maximum(np.asarray(y, dtype=float), 0.0)
    r = c - model.A.T @ y
    return float(y @ model.b + np.where(r > 0, r * hi, r * lo).sum())


def _lp(model: BinaryProgram, c, lo, hi):
    res = linprog(
        -c,
        A_ub=model.A,
        b_ub=model.b,
        bounds=np.column_stack([lo, hi]),
        method="highs-ds",
    )
    if res.status == 2:
        return None
    if res.status != 0:
        raise RuntimeError(f"LP relaxation failed: {res.message}")
    return res.x, -res.ineqlin.marginals


def root_bound(model: BinaryProgram) -> Fraction:
    """Certified upper bound from the LP relaxation at the root."""
    c = model.int_weights()[0].astype(float)
    n = model.n
    out = _lp(model, c, np.zeros(n), np.ones(n))
    if out is None:
        return Fraction(-1)
    return lagrangian_bound(model, out[1], exact=True)


def _greedy(model: BinaryProgram, lo, hi, order):
    """Extend the forced-in set ``lo`` with free vertices while feasible."""
    x = lo.astype(np.int64).copy()
    load = model.A @ x
    if np.any(load > model.b):
        return np.zeros(model.n, dtype=np.int64) if model.is_feasible(np.zeros(model.n)) else x
    if order is None:
        w = np.array([float(t) for t in model.weights])
        order = np.argsort(-w, kind="stable")
    A = model.A.tocsc()
    for j in order:
        if x[j] or not hi[j]:
            continue
        col_idx = A.indices[A.indptr[j] : A.indptr[j + 1]]
        col_val = A.data[A.indptr[j] : A.indptr[j + 1]]
        if np.all(load[col_idx] + col_val <= model.b[col_idx]):
            x[j] = 1
            load[col_idx] += col_val
    return x


def _translation_anchor(model: BinaryProgram) -> bool:
    """True if translating any optimum keeps it optimal (fix x_0 = 1 safely)."""
    b = model.board
    if not b.toroidal or not model.uniform or model.kind == "custom":
        return False
    return bool(np.all(model.b == model.b[0])) and bool(np.all(model.A.diagonal() == model.A.diagonal()[0]))


def _bnb(model: BinaryProgram, node_limit, time_limit):
    """Returns (scaled value, x, nodes, proved, root_bound)."""
    start = time.monotonic()
    c_int, scale = model.int_weights()
    if c_int.dtype == object:
        raise OverflowError("scaled weights exceed 64-bit range")
    c = c_int.astype(float)
    n = model.n
    integral = True
    zero = np.zeros(n, dtype=np.int64)
    best_x = zero.copy() if model.is_feasible(zero) else None
    best = int(c_int @ best_x) if best_x is not None else None

    def offer(x):
        nonlocal best, best_x
        x = np.asarray(x, dtype=np.int64)
        if model.is_feasible(x):
            v = int(c_int @ x)
            if best is None or v > best:
                best, best_x = v, x.copy()

    offer(_greedy(model, zero, np.ones(n, dtype=np.int64), None))

    root = Fraction(-1)
    out = _lp(model, c, np.zeros(n), np.ones(n))
    if out is not None:
        root = lagrangian_bound(model, out[1], exact=True)
    stack = []
    lo0 = np.zeros(n, dtype=np.int64)
    hi0 = np.ones(n, dtype=np.int64)
    if _translation_anchor(model):
        lo_a = lo0.copy()
        lo_a[0] = 1
        stack.append((lo_a, hi0.copy()))
    else:
        stack.append((lo0, hi0))
    nodes = 0
    proved = True
    while stack:
        if (node_limit is not None and nodes >= node_limit) or (
            time_limit is not None and time.monotonic() - start > time_limit
        ):
            proved = False
            break
        lo, hi = stack.pop()
        nodes += 1
        out = _lp(model, c, lo, hi)
        if out is None:
            continue
        xf, y = out
        bound = lagrangian_bound(model, y, lo, hi)
        limit = math.floor(bound + 1e-6) if integral else bound + 1e-9
        if best is not None and limit <= best:
            continue
        frac = np.flatnonzero(np.abs(xf - np.round(xf)) > 1e-9)
        if frac.size == 0:
            offer(np.round(xf))
            xr = np.round(xf).astype(np.int64)
            if model.is_feasible(xr):
                continue
            frac = np.flatnonzero(lo != hi)[:1]
            if frac.size == 0:
                continue
        # round down the LP point and complete greedily in LP order
        order = np.argsort(-xf, kind="stable")
        offer(_greedy(model, np.maximum(np.floor(xf + 1e-9).astype(np.int64), lo), hi, order))
        if best is not None and limit <= best:
            continue
        j = int(frac[np.argmax(xf[frac])])
        lo1, hi0_ = lo.copy(), hi.copy()
        lo1[j] = 1
        hi0_[j] = 0
        stack.append((lo, hi0_))
        stack.append((lo1, hi))
    if best_x is None:
        raise ModelError("model is infeasible")
    return best, best_x, nodes, proved, root

"""Certified upper and lower bounds on limiting king densities.

Upper bounds come from the neighborhood argument on a torus, from summing
the model rows, and from weightings of a finite window: for any
nonnegative omega on K[n_1,...,n_d] the torus density is at most
M_k(window, omega) / W(omega).  Lower bounds come from explicit sets on
tori.
"""
from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce

import numpy as np

from . import constructions
from .board import BoardSpec
from .ilp import Budget, SolveResult, beta_star, build_kdep_model, solve_binary
from .lp import LinearProgram, solve_lp
from .sets import KingSet, density, is_half_dependent, is_k_dependent

log = logging.getLogger(__name__)


class BoundError(ValueError):
    pass


def _frac(q) -> dict:
    q = Fraction(q)
    return {"exact": f"{q.numerator}/{q.denominator}", "decimal": round(float(q), 6)}


def half_k(d: int) -> int:
    """Threshold that makes half-dependence and k-dependence agree on large tori."""
    return (3**d - 1) // 2


def _resolve_k(d: int, k) -> int:
    return half_k(d) if k == "half" else int(k)


# --- weightings ------------------------------------------------------------------


@dataclass(frozen=True)
class WeightingFunction:
    window: BoardSpec
    weights: tuple[Fraction, ...]

    def __post_init__(self):
        if self.window.toroidal:
            raise BoundError("weightings live on non-toroidal windows")
        w = tuple(Fraction(x) for x in self.weights)
        if len(w) != self.window.size:
            raise BoundError(f"{len(w)} weights for {self.window.size} vertices")
        if any(x < 0 for x in w):
            raise BoundError("weights must be nonnegative")
        if not any(w):
            raise BoundError("weighting is identically zero")
        object.__setattr__(self, "weights", w)

    @property
    def W(self) -> Fraction:
        return sum(self.weights, Fraction(0))

    @classmethod
    def from_grid(cls, grid) -> "WeightingFunction":
        arr = np.asarray(grid, dtype=object)
        return cls(BoardSpec(tuple(arr.shape)), tuple(arr.ravel()))

    @classmethod
    def uniform(cls, window: BoardSpec) -> "WeightingFunction":
        return cls(window, (Fraction(1),) * window.size)

    def grid(self) -> np.ndarray:
        return np.array(self.weights, dtype=object).reshape(self.window.dims)

    def scaled(self) -> "WeightingFunction":
        """Same weighting with the smallest positive integer entries."""
        lcm = reduce(math.lcm, (x.denominator for x in self.weights), 1)
        ints = [int(x * lcm) for x in self.weights]
        g = reduce(math.gcd, ints)
        return WeightingFunction(self.window, tuple(Fraction(x // g) for x in ints))


def parse_weights(text: str) -> WeightingFunction:
    """Grid of nonnegative numbers, whitespace or comma separated, one row per line.

    Entries may be integers or fractions ``p/q``.  Only 2-D grids are read
    from text.
    """
    rows = []
    for ln in text.splitlines():
        ln = ln.split("#", 1)[0].replace(",", " ").strip()
        if ln:
            rows.append([Fraction(tok) for tok in ln.split()])
    if not rows:
        raise BoundError("empty weight file")
    if len({len(r) for r in rows}) != 1:
        raise BoundError("weight rows have different lengths")
    return WeightingFunction(BoardSpec((len(rows), len(rows[0]))), tuple(x for r in rows for x in r))


def load_weights(path) -> WeightingFunction:
    with open(path) as fh:
        return parse_weights(fh.read())


def format_weights(w: WeightingFunction) -> str:
    if w.window.d != 2:
        raise BoundError("weight text format is 2-D")
    cells = [[str(x) for x in row] for row in w.grid()]
    width = max(len(c) for row in cells for c in row)
    return "\n".join(" ".join(c.rjust(width) for c in row) for row in cells) + "\n"


def save_weights(w: WeightingFunction, path) -> None:
    with open(path, "w") as fh:
        fh.write(format_weights(w))


def stored_weighting(name: str) -> WeightingFunction:
    """The stored weightings ``w1`` (K[10,10]) and ``w2`` (K[11,11])."""
    from importlib import resources

    if name not in ("w1", "w2"):
        raise BoundError(f"unknown weighting {name!r}")
    return parse_weights(resources.files("kingdep").joinpath("data", f"{name}.txt").read_text())


# --- bounds ------------------------------------------------------------------------


@dataclass
class DensityBound:
    kind: str  # "upper" or "lower"
    target: tuple  # (d, k) or (d, "half")
    value: Fraction
    certificate: str  # nbhd-bound, summed-constraint, weighted, construction
    payload: dict = field(default_factory=dict)
    certified: bool = True
    diagnostics: dict = field(default_factory=dict)

    def verify(self, budget: Budget | None = None) -> bool:
        """Recompute the value from the certificate alone."""
        d, k = self.target
        kk = _resolve_k(d, k)
        if self.certificate == "nbhd-bound":
            b, n = self.payload["beta_star"], self.payload["nbhd_size"]
            board = BoardSpec.parse(self.payload["board"])
            return b == beta_star(board, kk) and self.value == Fraction(b, b - kk + n)
        if self.certificate == "summed-constraint":
            n = 3**d - 1
            if self.payload["tightened"]:
                b = beta_star(BoardSpec.parse(self.payload["board"]), kk)
                return self.value == Fraction(b, b - kk + n)
            return self.value == Fraction(n, 2 * n - kk)
        if self.certificate == "weighted":
            w: WeightingFunction = self.payload["omega"]
            r = solve_binary(build_kdep_model(w.window, kk, w.weights), budget)
            if not r.proved:
                return False
            return r.value == self.payload["M"] and self.value == r.value / w.W
        if self.certificate == "construction":
            s: KingSet = self.payload["set"]
            ok = is_half_dependent(s) if k == "half" else is_k_dependent(s, kk)
            return ok and self.value == density(s)
        return False

    def to_json(self) -> dict:
        d, k = self.target
        out = {
            "target": {"d": d, "k": k},
            "kind": self.kind,
            "value": _frac(self.value),
            "certificate": self.certificate,
            "certified": self.certified,
        }
        pay = {}
        for key, val in self.payload.items():
            if isinstance(val, WeightingFunction):
                pay[key] = {"window": str(val.window), "W": str(val.W)}
            elif isinstance(val, KingSet):
                pay[key] = val.to_json()
            elif isinstance(val, Fraction):
                pay[key] = _frac(val)
            else:
                pay[key] = val
        out["payload"] = pay
        if self.diagnostics:
            out["diagnostics"] = self.diagnostics
        return out


def _check_uniform_torus(board: BoardSpec):
    if not board.is_uniform:
        raise BoundError(f"{board} must be toroidal with every side >= 3")


def nbhd_bound(board: BoardSpec, k) -> DensityBound:
    """beta* / (beta* - k + |N|), valid for every torus with sides >= 3."""
    _check_uniform_torus(board)
    d = board.d
    kk = _resolve_k(d, k)
    n = 3**d - 1
    b = beta_star(board, kk)
    return DensityBound(
        "upper", (d, k), Fraction(b, b - kk + n), "nbhd-bound", {"board": str(board), "beta_star": b, "nbhd_size": n}
    )


def summed_constraint_bound(board: BoardSpec, k, tightened: bool = False) -> DensityBound:
    _check_uniform_torus(board)
    d = board.d
    kk = _resolve_k(d, k)
    n = 3**d - 1
    if tightened:
        b = beta_star(board, kk)
        value = Fraction(b, b - kk + n)
    else:
        value = Fraction(n, 2 * n - kk)
    return DensityBound("upper", (d, k), value, "summed-constraint", {"board": str(board), "tightened": tightened})


def weighted_bound(omega: WeightingFunction, k, budget: Budget | None = None, workers: int = 1) -> DensityBound:
    d = omega.window.d
    kk = _resolve_k(d, k)
    r = solve_binary(build_kdep_model(omega.window, kk, omega.weights), budget, workers=workers)
    value = r.best_upper / omega.W
    return DensityBound(
        "upper",
        (d, k),
        value,
        "weighted",
        {"omega": omega, "M": r.best_upper, "W": omega.W, "witness": r.witness},
        certified=r.proved,
        diagnostics={"status": r.status, "engine": r.engine, "elapsed": round(r.elapsed, 3), "nodes": r.node_count},
    )


def lower_bound_from_set(s: KingSet, k) -> DensityBound:
    if not s.board.toroidal:
        raise BoundError("lower bounds come from sets on tori")
    d = s.board.d
    ok = is_half_dependent(s) if k == "half" else is_k_dependent(s, int(k))
    if not ok:
        raise BoundError(f"set is not {'half' if k == 'half' else k}-dependent")
    return DensityBound("lower", (d, k), density(s), "construction", {"set": s})


# --- weight optimisation ----------------------------------------------------------


def window_orbits(window: BoardSpec) -> np.ndarray:
    """Orbit id per vertex under reflections and permutations of equal sides."""
    dims = window.dims
    grid = np.indices(dims).reshape(window.d, -1).T
    perms = [p for p in itertools.permutations(range(window.d)) if all(dims[p[i]] == dims[i] for i in range(window.d))]
    strides = np.array(window.strides)
    images = []
    for p in perms:
        for flips in itertools.product((False, True), repeat=window.d):
            g = grid[:, p]
            g = np.where(np.array(flips), np.array(dims) - 1 - g, g)
            images.append(g @ strides)
    orbit = np.full(window.size, -1)
    count = 0
    for v in range(window.size):
        if orbit[v] < 0:
            orbit[[img[v] for img in images]] = count
            count += 1
    return orbit


def default_seeds(window: BoardSpec, k: int, periods=range(2, 7)) -> list[KingSet]:
    """Empty set, singletons, clipped periodic congruence patterns and stripes."""
    seeds = [KingSet.empty(window)]
    seeds += [KingSet.from_indices(window, [v]) for v in range(window.size)]
    grid = np.indices(window.dims).reshape(window.d, -1).T
    seen = set()
    for p in periods:
        for c in itertools.product(range(p), repeat=window.d):
            val = (grid @ np.array(c)) % p
            for size in range(1, p):
                for R in itertools.combinations(range(p), size):
                    mask = np.isin(val, R)
                    key = mask.tobytes()
                    if key in seen:
                        continue
                    seen.add(key)
                    s = KingSet(window, mask)
                    if is_k_dependent(s, k):
                        seeds.append(s)
    for name in ("C", "D"):
        tile = constructions.fixture(name)
        if tile.board.d == window.d:
            reps = [-(-n // t) for n, t in zip(window.dims, tile.board.dims)]
            block = np.tile(tile.mask.reshape(tile.board.dims), reps)
            s = KingSet(window, block[tuple(slice(0, n) for n in window.dims)].ravel())
            if is_k_dependent(s, k):
                seeds.append(s)
    return seeds


@dataclass
class OptimizeResult:
    omega: WeightingFunction
    bound: DensityBound
    trace: list[dict]
    converged: bool


def optimize_weights(
    window: BoardSpec,
    k,
    seed_sets=None,
    budget: Budget | None = None,
    max_iter: int = 200,
    symmetric: bool = True,
    workers: int = 1,
) -> OptimizeResult:
    """Cutting-plane search for a weighting with a small bound M/W.

    The master LP is  min theta  s.t.  omega.x_S <= theta  for S in the pool,
    sum omega = 1, omega >= 0, solved exactly.  Separation is an exact
    weighted solve on the window.  With ``symmetric`` the weights are tied
    across symmetry orbits of the window, which loses nothing since the
    bound is convex in omega and invariant under the symmetries.

    Every separation that proves optimality certifies M(omega) as a bound;
    the trace records theta, M and the best certified bound so far.  The
    loop stops when M equals theta exactly.
    """
    if window.toroidal:
        raise BoundError("window must be non-toroidal")
    d = window.d
    kk = _resolve_k(d, k)
    if seed_sets is None:
        seed_sets = default_seeds(window, kk)
    orbit = window_orbits(window) if symmetric else np.arange(window.size)
    n_orb = int(orbit.max()) + 1
    sizes = np.bincount(orbit, minlength=n_orb)

    pool: list[tuple[int, ...]] = []
    seen = set()

    def add(mask) -> bool:
        row = tuple(int(x) for x in np.bincount(orbit, weights=np.asarray(mask, dtype=np.int64), minlength=n_orb))
        if row in seen:
            return False
        seen.add(row)
        pool.append(row)
        return True

    for s in seed_sets:
        if s.board != window:
            raise BoundError(f"seed set lives on {s.board}, not {window}")
        if not is_k_dependent(s, kk):
            raise BoundError(f"seed set of size {len(s)} is not {kk}-dependent")
        add(s.mask)

    trace = []
    best = None  # (M, omega, result)
    converged = False
    for it in range(1, max_iter + 1):
        lp = LinearProgram([0] * n_orb + [1], "min", [], [0] * n_orb + [None], [None] * (n_orb + 1))
        for row in pool:
            lp.add_constraint(list(row) + [-1], "<=", 0)
        lp.add_constraint([int(x) for x in sizes] + [0], "=", 1)
        sol = solve_lp(lp, guide=True)
        if not sol.optimal:
            raise BoundError(f"master LP ended with status {sol.status}")
        theta = sol.value
        w_orb = sol.primal[:n_orb]
        omega = WeightingFunction(window, tuple(w_orb[o] for o in orbit))
        res: SolveResult = solve_binary(build_kdep_model(window, kk, omega.weights), budget, workers=workers)
        M = res.value
        if res.proved and (best is None or M < best[0]):
            best = (M, omega, res)
        trace.append(
            {
                "iteration": it,
                "pool": len(pool),
                "theta": theta,
                "M": M if res.proved else None,
                "best": best[0] if best else None,
            }
        )
        log.info("iteration %d: theta=%s M=%s pool=%d", it, theta, M, len(pool))
        if not res.proved:
            log.info("separation not proved within budget; stopping")
            break
        if M == theta:
            converged = True
            break
        if M < theta or not add(res.witness.mask):
            raise AssertionError("separation returned a set that does not cut off the master solution")

    if best is None:
        raise BoundError("no separation finished within budget; nothing certified")
    M, omega, res = best
    bound = DensityBound(
        "upper",
        (d, k),
        M / omega.W,
        "weighted",
        {"omega": omega, "M": M, "W": omega.W, "witness": res.witness},
        certified=True,
        diagnostics={"iterations": len(trace), "converged": converged, "pool": len(pool)},
    )
    return OptimizeResult(omega, bound, trace, converged)

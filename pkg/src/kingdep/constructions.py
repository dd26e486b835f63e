"""Explicit k-dependent and half-dependent king arrangements (lower bounds)."""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from math import prod

import numpy as np

from .board import BoardSpec, degrees, offsets
from .rowdp import solve_rows
from .sets import KingSet, is_half_dependent, parse_pattern


class ConstructionError(ValueError):
    pass


# --- linear congruences --------------------------------------------------------


@dataclass(frozen=True)
class CongruenceSpec:
    n: int
    d: int
    c: tuple[int, ...]
    R: frozenset[int]

    def __post_init__(self):
        if self.n < 2:
            raise ConstructionError("modulus must be >= 2")
        if len(self.c) != self.d:
            raise ConstructionError("c must have d components")
        object.__setattr__(self, "c", tuple(int(x) % self.n for x in self.c))
        object.__setattr__(self, "R", frozenset(int(r) % self.n for r in self.R))
        if not self.R:
            raise ConstructionError("R must be nonempty")

    @property
    def board(self) -> BoardSpec:
        return BoardSpec((self.n,) * self.d, True)


def congruence_set(spec: CongruenceSpec) -> KingSet:
    """Vertices v of T^(d)[n] with c.v in R (mod n); coordinates as 1..n."""
    board = spec.board
    grid = np.indices(board.dims).reshape(spec.d, -1).T + 1
    residues = (grid @ np.array(spec.c)) % spec.n
    return KingSet(board, np.isin(residues, sorted(spec.R)))


def f_count(spec: CongruenceSpec, r: int) -> int:
    """Number of nonzero y in {-1,0,1}^d with c.y + r in R (mod n)."""
    return sum(1 for y in offsets(spec.d) if (np.dot(spec.c, y) + r) % spec.n in spec.R)


def congruence_dependence(spec: CongruenceSpec) -> int:
    return max(f_count(spec, r) for r in spec.R)


def balanced_ternary(m: int) -> tuple[int, tuple[int, ...]]:
    """Digits y in {-1,0,1}, most significant first, with m = sum y_i 3^(d-i)."""
    if m == 0:
        raise ValueError("0 has no balanced ternary representation with a nonzero lead digit")
    digits = []
    while m:
        r = m % 3
        if r == 2:
            r = -1
        digits.append(r)
        m = (m - r) // 3
    return len(digits), tuple(reversed(digits))


def power_congruence(d: int) -> KingSet:
    """The (3^d - 3)-dependent set on T^(d)[(3^d+1)/2] of density (3^d-1)/(3^d+1)."""
    if d < 2:
        raise ConstructionError("power congruence needs d >= 2 (d = 1 gives the multigraph T[2])")
    n = (3**d + 1) // 2
    spec = CongruenceSpec(n, d, tuple(3 ** (d - 1 - i) for i in range(d)), frozenset(range(1, n)))
    return congruence_set(spec)


def search_congruence(n: int, d: int, size: int, k: int):
    """First (c, R) in lexicographic order with |R| = size and f-bound <= k."""
    for c in itertools.product(range(n), repeat=d):
        offs = [int(np.dot(c, y)) % n for y in offsets(d)]
        for R in itertools.combinations(range(n), size):
            rs = set(R)
            if all(sum((o + r) % n in rs for o in offs) <= k for r in R):
                return CongruenceSpec(n, d, c, frozenset(R))
    return None


# --- stripes and the tau_1 pattern -----------------------------------------------


def stripes(n: int) -> KingSet:
    """Kings on T[n,n] exactly where the second coordinate is even."""
    if n < 3:
        raise ConstructionError("stripes need n >= 3")
    board = BoardSpec((n, n), True)
    grid = np.zeros((n, n), dtype=bool)
    grid[:, 1::2] = True  # 1-based column v2 even
    return KingSet(board, grid.ravel())


def tau1_pattern(dims) -> KingSet:
    dims = tuple(dims)
    if dims[0] % 3:
        raise ConstructionError("first side must be divisible by 3")
    if any(n % 2 or n < 4 for n in dims[1:]):
        raise ConstructionError("later sides must be even and >= 4")
    board = BoardSpec(dims, True)
    grid = np.indices(dims) + 1
    keep = grid[0] % 3 != 0
    for g in grid[1:]:
        keep &= g % 2 == 0
    return KingSet(board, keep.ravel())


# --- torus packing --------------------------------------------------------------


def pack_torus(big: BoardSpec, tile: BoardSpec, tile_set: KingSet) -> KingSet:
    """Copies of ``tile_set`` anchored at multiples of the tile sides.

    Copies start at vertex (1,...,1); the remainder strips stay empty.
    """
    if not (big.toroidal and tile.toroidal):
        raise ConstructionError("packing works on toroidal boards")
    if big.d != tile.d or tile_set.board != tile:
        raise ConstructionError("dimension mismatch between big board, tile and tile set")
    if any(n <= t for n, t in zip(big.dims, tile.dims)):
        raise ConstructionError(f"{big} must be strictly larger than {tile} in every side")
    copies = [n // t for n, t in zip(big.dims, tile.dims)]
    block = np.tile(tile_set.mask.reshape(tile.dims), copies)
    grid = np.zeros(big.dims, dtype=bool)
    grid[tuple(slice(0, s) for s in block.shape)] = block
    return KingSet(big, grid.ravel())


def pack_count(big: BoardSpec, tile: BoardSpec) -> int:
    return prod(n // t for n, t in zip(big.dims, tile.dims))


# --- fixtures and the half-dependent stacking ----------------------------------


@lru_cache(maxsize=None)
def fixture(name: str) -> KingSet:
    """Fixture C (6 kings on T[2,5]) or D (43 kings on T[6,12])."""
    if name not in ("C", "D"):
        raise ConstructionError(f"unknown fixture {name!r}")
    text = resources.files("kingdep").joinpath("data", f"fixture_{name}.txt").read_text()
    return parse_pattern(text)


def regenerate_fixture_c(max_n: int = 40) -> KingSet:
    """First 6-king 4-dependent set on T[2,5] with column 5 empty that stacks.

    Candidates are scanned in lexicographic order of their cells; one is
    kept when the half-dependent layout built from it (with B left empty)
    is half-dependent for every 3 <= n <= ``max_n``.
    """
    board = BoardSpec((2, 5), True)
    cells = [(i, j) for i in range(2) for j in range(4)]
    for combo in itertools.combinations(cells, 6):
        g = np.zeros((2, 5), dtype=bool)
        g[tuple(zip(*combo))] = True
        s = KingSet(board, g.ravel())
        if s.max_count() > 4:
            continue
        empty_d = np.zeros((6, 12), dtype=bool)
        if all(is_half_dependent(half_dependent_layout(n, g, empty_d).kings) for n in range(3, max_n + 1)):
            return s
    raise ConstructionError("no stackable fixture C found")


def regenerate_fixture_d(time_limit: float | None = None) -> KingSet:
    """Maximum 4-dependent set on T[6,12] with column 12 empty, by exact search."""
    from .ilp import Budget, build_kdep_model, solve_binary

    board = BoardSpec((6, 12), True)
    w = np.ones((6, 12), dtype=np.int64)
    w[:, 11] = 0
    res = solve_binary(build_kdep_model(board, 4, w.ravel()), Budget(time_limit=time_limit))
    if not res.proved:
        raise ConstructionError("search for fixture D ran out of budget")
    g = res.witness.mask.reshape(6, 12).copy()
    g[:, 11] = False  # zero-weight kings add nothing; dropping them keeps 4-dependence
    return KingSet(board, g.ravel())


def stack_a(n: int, c_grid: np.ndarray | None = None) -> np.ndarray:
    """Arrangement A in K[n,5]: 3n - 1 kings, column 5 empty."""
    c_grid = fixture("C").mask.reshape(2, 5) if c_grid is None else c_grid
    m = n // 2
    a = np.tile(c_grid, (m, 1))
    if m:
        a[2 * m - 1, 2] = False  # remove the king at (2m, 3)
    if n % 2:
        top = np.zeros((1, 5), dtype=bool)
        top[0, [0, 1, 3]] = True  # (1,1), (1,2), (1,4)
        a = np.vstack([top, a])
    return a


def stack_b(n: int, d_grid: np.ndarray | None = None) -> np.ndarray:
    """Arrangement B in K[n,12]: floor((n-2)/6) stacked copies of D from row 2."""
    d_grid = fixture("D").mask.reshape(6, 12) if d_grid is None else d_grid
    m = max((n - 2) // 6, 0)
    b = np.zeros((n, 12), dtype=bool)
    if m:
        b[1 : 6 * m + 1] = np.tile(d_grid, (m, 1))
    return b


@dataclass
class HalfDepLayout:
    n: int
    a_copies: int
    b_copies: int
    gap: int  # empty columns left before the last full column
    kings: KingSet

    @property
    def count(self) -> int:
        return len(self.kings)


# residue of n mod 5 -> number of B copies used by the stacking argument
_B_COPIES = {3: 0, 0: 1, 2: 2, 4: 3, 1: 4}


def half_dependent_layout(n: int, c_grid=None, d_grid=None) -> HalfDepLayout:
    """Columns 1 and n full, then A copies from column 3, then B copies.

    For n large enough the number of B copies follows the residue of n mod 5
    and no columns are left over.  Smaller n fall back to the layout with
    the most kings among those that fit, leaving leftover columns empty.
    """
    if n < 3:
        raise ConstructionError("half-dependent construction needs n >= 3")
    best = None
    for b in range(5):
        room = n - 3 - 12 * b
        if room < 0:
            break
        a = room // 5
        gap = room - 5 * a
        canonical = gap == 0 and b == _B_COPIES[n % 5]
        count = 2 * n + a * (3 * n - 1) + b * 43 * max((n - 2) // 6, 0)
        key = (canonical, count)
        if best is None or key > best[0]:
            best = (key, a, b, gap)
    _, a, b, gap = best
    grid = np.zeros((n, n), dtype=bool)
    grid[:, 0] = True
    grid[:, n - 1] = True
    col = 2
    if a:
        block = stack_a(n, c_grid)
        for _ in range(a):
            grid[:, col : col + 5] = block
            col += 5
    if b:
        block = stack_b(n, d_grid)
        for _ in range(b):
            grid[:, col : col + 12] = block
            col += 12
    return HalfDepLayout(n, a, b, gap, KingSet(BoardSpec((n, n)), grid.ravel()))


def half_dependent_construction(n: int, polish: int = 0) -> KingSet:
    """The stacking construction; ``polish`` rounds of band re-optimisation follow."""
    s = half_dependent_layout(n).kings
    for i in range(polish):
        s = polish_half_dependent(s, axis=1 - i % 2)
    return s


def polish_half_dependent(s: KingSet, band: int = 9, axis: int = 1) -> KingSet:
    """Re-solve strips of ``band`` columns (``axis=1``) or rows exactly.

    Each strip is optimised by the row engine with the two flanking lines
    frozen and everything outside fixed, so the result stays half-dependent
    and never shrinks.
    """
    b = s.board
    if b.toroidal or b.d != 2:
        raise ConstructionError("polishing works on 2-D kings boards")
    g = s.mask.reshape(b.dims).copy()
    cap = (degrees(b) // 2).reshape(b.dims)
    if axis == 0:
        g, cap = g.T.copy(), cap.T.copy()
    m, n = g.shape
    band = min(band, n)
    starts = list(range(0, n - band + 1, max(1, band // 3)))
    if starts[-1] != n - band:
        starts.append(n - band)
    for j in starts:
        lo, hi = max(j - 1, 0), min(j + band + 1, n)
        outside = g.astype(np.int64)
        outside[:, lo:hi] = 0
        pad = np.pad(outside, 1)
        ext = sum(
            pad[1 + di : 1 + di + m, 1 + dj : 1 + dj + n] for di in (-1, 0, 1) for dj in (-1, 0, 1) if di or dj
        )[:, lo:hi]
        cap1 = cap[:, lo:hi] - ext
        cap0 = np.full_like(cap1, 9)  # empty cells carry no constraint
        for col in {0, hi - 1 - lo}:
            if not j <= lo + col < j + band:
                fixed = g[:, lo + col]
                cap0[fixed, col] = -1
                cap1[~fixed, col] = -1
        _, x = solve_rows(np.ones_like(cap1), cap0, cap1)
        if x is not None and x.sum() > g[:, lo:hi].sum():
            g[:, lo:hi] = x.astype(bool)
    if axis == 0:
        g = g.T
    out = KingSet(b, g.ravel())
    if not is_half_dependent(out):
        raise AssertionError("polishing broke half-dependence")
    return out


def stacking_formula(n: int) -> float:
    """Leading terms (3/5) n^2 - t n / 30 of the lower bound for n's residue."""
    r = n % 5
    if r == 3:
        return 0.6 * n * n + 0.6
    t = {0: 1, 1: 4, 2: 2, 4: 3}[r]
    return 0.6 * n * n - t * n / 30


def measured_constant(n: int) -> float:
    """C such that the construction meets the lower bound formula with equality."""
    return stacking_formula(n) - len(half_dependent_construction(n))


def check_half_dependent_range(lo: int, hi: int) -> list[int]:
    """Sizes n in [lo, hi] whose construction fails half-dependence."""
    return [n for n in range(lo, hi + 1) if not is_half_dependent(half_dependent_construction(n))]

"""Money redistribution check for 3-dependent sets on 2-D tori.

Every vertex outside S starts with one unit, members start with nothing,
and three rounds of transfers move money toward members.  If every member
ends with at least one unit and no balance ever goes negative, then
|S| <= mn/2.

Step 1 splits a unit among 1 to 4 recipients and later steps only move
existing amounts, so all balances are multiples of 1/12.  Balances are
kept as exact integers in units of 1/12.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .board import BoardSpec
from .sets import KingSet, is_k_dependent

UNIT = 12
SIDE = ((1, 0), (-1, 0), (0, 1), (0, -1))
CORNER = ((1, 1), (1, -1), (-1, 1), (-1, -1))


class TaxationError(ValueError):
    pass


def _at(a: np.ndarray, off) -> np.ndarray:
    """a evaluated at v + off, for every v."""
    return np.roll(a, (-off[0], -off[1]), axis=(0, 1))


def _to(a: np.ndarray, off) -> np.ndarray:
    """Move a value held at v to v + off."""
    return np.roll(a, off, axis=(0, 1))


@dataclass
class TaxationTrace:
    board: BoardSpec
    S: KingSet
    balances: list[np.ndarray]  # r0..r3 in units of 1/UNIT
    target: np.ndarray  # 0/1 per vertex

    def r(self, i: int) -> np.ndarray:
        return np.vectorize(lambda x: Fraction(int(x), UNIT), otypes=[object])(self.balances[i])

    def totals(self) -> list[Fraction]:
        return [Fraction(int(b.sum()), UNIT) for b in self.balances]

    def conserved(self) -> bool:
        return len(set(int(b.sum()) for b in self.balances)) == 1

    def to_json(self) -> dict:
        def grid(b):
            out = []
            for row in b:
                out.append([[f.numerator, f.denominator] for f in (Fraction(int(x), UNIT) for x in row)])
            return out

        return {
            "board": str(self.board),
            "members": [list(v) for v in self.S.members],
            "target": self.target.astype(int).tolist(),
            "balances": [grid(b) for b in self.balances],
        }


def _check_board(board: BoardSpec):
    if not board.toroidal or board.d != 2:
        raise TaxationError("taxation works on 2-D toroidal boards only")
    if min(board.dims) < 3:
        raise TaxationError("sides must be >= 3 so side and corner neighbors are distinct")


def redistribute(S: KingSet) -> TaxationTrace:
    """Apply the three transfer steps; within a step all amounts use the pre-step balances."""
    board = S.board
    _check_board(board)
    member = S.mask.reshape(board.dims)
    t = member.astype(np.int64) * UNIT
    r0 = (~member).astype(np.int64) * UNIT

    # step 1: surplus split evenly among side neighbors short of target
    short0 = r0 < t
    surplus = np.maximum(r0 - t, 0)
    n_rec = sum(_at(short0, o).astype(np.int64) for o in SIDE)
    share = np.where(n_rec > 0, surplus // np.maximum(n_rec, 1), 0)
    r1 = r0.copy()
    for o in SIDE:
        amt = share * _at(short0, o)
        r1 -= amt
        r1 += _to(amt, o)

    # step 2: donors above target fill each corner neighbor's deficit
    donor = r1 > t
    deficit1 = np.maximum(t - r1, 0)
    r2 = r1.copy()
    for o in CORNER:
        amt = donor * _at(deficit1, o)
        r2 -= amt
        r2 += _to(amt, o)

    # step 3: the full surplus goes to each side neighbor short of target
    surplus2 = np.maximum(r2 - t, 0)
    short2 = r2 < t
    r3 = r2.copy()
    for o in SIDE:
        amt = surplus2 * _at(short2, o)
        r3 -= amt
        r3 += _to(amt, o)

    return TaxationTrace(board, S, [r0, r1, r2, r3], member.astype(np.int8))


def check(S: KingSet, require_3dep: bool = False) -> tuple[bool, list[dict]]:
    """Whether every balance stays nonnegative and every member reaches its target.

    Violations are dicts with a ``kind`` of ``not-3-dependent``,
    ``negative`` (with the step), ``short`` or ``not-conserved``.
    """
    problems = []
    if require_3dep and not is_k_dependent(S, 3):
        problems += [{"kind": "not-3-dependent", "vertex": v} for v in S.violations(3)]
    tr = redistribute(S)
    for i, b in enumerate(tr.balances):
        for idx in np.argwhere(b < 0):
            problems.append({"kind": "negative", "step": i, "vertex": tuple(int(x) + 1 for x in idx), "balance": str(Fraction(int(b[tuple(idx)]), UNIT))})
    r3 = tr.balances[3]
    for idx in np.argwhere(r3 < tr.target.astype(np.int64) * UNIT):
        problems.append({"kind": "short", "vertex": tuple(int(x) + 1 for x in idx), "balance": str(Fraction(int(r3[tuple(idx)]), UNIT))})
    if not tr.conserved():
        problems.append({"kind": "not-conserved", "totals": [str(x) for x in tr.totals()]})
    return not problems, problems


def random_3dependent(board: BoardSpec, rng: np.random.Generator) -> KingSet:
    """A maximal 3-dependent set grown in random order from a random prefix density.

    Not uniform over 3-dependent sets; it favours large ones, where the
    transfers are most constrained.
    """
    from .board import adjacency_matrix

    adj = adjacency_matrix(board).toarray()
    order = rng.permutation(board.size)
    stop = rng.integers(1, board.size + 1)
    mask = np.zeros(board.size, dtype=bool)
    counts = np.zeros(board.size, dtype=np.int64)
    for step, v in enumerate(order):
        if step >= stop:
            break
        nb = adj[v] > 0
        if counts[v] <= 3 and np.all(counts[nb & mask] + adj[v][nb & mask] <= 3):
            mask[v] = True
            counts += adj[v]
    return KingSet(board, mask)


def dependent_masks(board: BoardSpec, k: int, chunk: int = 1 << 16):
    """Yield every k-dependent subset of a small board as a bool mask."""
    from .board import adjacency_matrix

    n = board.size
    adj = adjacency_matrix(board).toarray().astype(np.int64)
    bit = np.arange(n)
    for lo in range(0, 1 << n, chunk):
        codes = np.arange(lo, min(lo + chunk, 1 << n))
        masks = ((codes[:, None] >> bit) & 1).astype(bool)
        counts = masks.astype(np.int64) @ adj
        ok = ~np.any(masks & (counts > k), axis=1)
        yield from masks[ok]


def exhaustive(board: BoardSpec):
    """Check every 3-dependent subset; returns (count, max size, failing sets)."""
    _check_board(board)
    if board.size > 20:
        raise TaxationError("exhaustive mode is limited to 20 vertices")
    total, best, failures = 0, 0, []
    for mask in dependent_masks(board, 3):
        s = KingSet(board, mask)
        total += 1
        best = max(best, len(s))
        ok, _ = check(s)
        if not ok:
            failures.append(s)
    return total, best, failures

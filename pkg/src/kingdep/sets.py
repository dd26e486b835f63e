"""King arrangements, dependence profiles, and the pattern text format."""
from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Iterable

import numpy as np

from .board import BoardError, BoardSpec, adjacency_matrix, degrees


class PatternError(ValueError):
    pass


@dataclass(frozen=True)
class DependenceProfile:
    counts: dict[tuple[int, ...], int]  # member -> neighbors in S, with multiplicity
    max_count: int


@dataclass(frozen=True, eq=False)
class KingSet:
    board: BoardSpec
    mask: np.ndarray  # bool per linear index, read-only

    def __post_init__(self):
        mask = np.asarray(self.mask, dtype=bool)
        if mask.shape != (self.board.size,):
            raise PatternError(f"mask of shape {mask.shape} does not fit {self.board}")
        mask = mask.copy()
        mask.flags.writeable = False
        object.__setattr__(self, "mask", mask)

    @classmethod
    def empty(cls, board: BoardSpec) -> "KingSet":
        return cls(board, np.zeros(board.size, dtype=bool))

    @classmethod
    def full(cls, board: BoardSpec) -> "KingSet":
        return cls(board, np.ones(board.size, dtype=bool))

    @classmethod
    def from_coords(cls, board: BoardSpec, coords: Iterable) -> "KingSet":
        mask = np.zeros(board.size, dtype=bool)
        for v in coords:
            mask[board.index(v)] = True
        return cls(board, mask)

    @classmethod
    def from_indices(cls, board: BoardSpec, indices: Iterable[int]) -> "KingSet":
        mask = np.zeros(board.size, dtype=bool)
        mask[list(indices)] = True
        return cls(board, mask)

    def __len__(self):
        return int(self.mask.sum())

    def __contains__(self, v):
        return bool(self.mask[self.board.index(v)])

    def __eq__(self, other):
        return isinstance(other, KingSet) and self.board == other.board and np.array_equal(self.mask, other.mask)

    def __hash__(self):
        return hash((self.board, self.mask.tobytes()))

    @property
    def indices(self) -> np.ndarray:
        return np.flatnonzero(self.mask)

    @property
    def members(self) -> list[tuple[int, ...]]:
        return [self.board.coords(int(i)) for i in self.indices]

    def with_mask(self, mask) -> "KingSet":
        return KingSet(self.board, mask)

    @cached_property
    def neighbor_counts(self) -> np.ndarray:
        """Multiplicity-weighted count of members adjacent to every vertex."""
        return adjacency_matrix(self.board) @ self.mask.astype(np.int64)

    @cached_property
    def profile(self) -> DependenceProfile:
        counts = self.neighbor_counts
        idx = self.indices
        prof = {self.board.coords(int(i)): int(counts[i]) for i in idx}
        return DependenceProfile(prof, int(counts[idx].max()) if len(idx) else 0)

    def max_count(self) -> int:
        idx = self.indices
        return int(self.neighbor_counts[idx].max()) if len(idx) else 0

    def violations(self, k: int | None = None) -> list[tuple[int, ...]]:
        """Members over the threshold: ``k`` if given, else half their degree."""
        counts = self.neighbor_counts
        cap = half_caps(self.board) if k is None else k
        bad = self.mask & (counts > cap)
        return [self.board.coords(int(i)) for i in np.flatnonzero(bad)]

    def to_json(self) -> dict:
        return {
            "board": str(self.board),
            "members": [list(v) for v in self.members],
            "size": len(self),
            "max_count": self.max_count(),
        }


def half_caps(board: BoardSpec) -> np.ndarray:
    return degrees(board) // 2


def profile(s: KingSet) -> DependenceProfile:
    return s.profile


def is_k_dependent(s: KingSet, k: int) -> bool:
    if k < 0:
        raise ValueError("k must be nonnegative")
    return s.max_count() <= k


def is_half_dependent(s: KingSet) -> bool:
    # floor(deg/2) is equivalent to |N(v)|/2 since counts are integers
    counts = s.neighbor_counts
    return not bool(np.any(s.mask & (counts > half_caps(s.board))))


def density(s: KingSet) -> Fraction:
    return Fraction(len(s), s.board.size)


def half_domination_number(board: BoardSpec, h_value: int) -> int:
    """Size of a minimum 1/2-dominating set given h(G) = ``h_value``."""
    if not 0 <= h_value <= board.size:
        raise ValueError(f"h value {h_value} outside [0, {board.size}]")
    return board.size - h_value


# --- pattern text format -----------------------------------------------------


def format_pattern(s: KingSet) -> str:
    """Header line with the board, then rows of ``#``/``.`` in matrix order.

    Three-dimensional boards are written as blank-line separated layers
    in coordinate-1 order.
    """
    b = s.board
    if b.d > 3:
        raise PatternError("pattern text is limited to d <= 3; use JSON coordinates")
    grid = s.mask.reshape(b.dims)
    lines = [str(b)]
    if b.d == 1:
        grid = grid.reshape(1, -1)
    if b.d <= 2:
        lines += ["".join("#" if x else "." for x in row) for row in grid]
    else:
        for i, layer in enumerate(grid):
            if i:
                lines.append("")
            lines += ["".join("#" if x else "." for x in row) for row in layer]
    return "\n".join(lines) + "\n"


def parse_pattern(text: str) -> KingSet:
    lines = [ln.rstrip() for ln in text.strip("\n").splitlines()]
    if not lines:
        raise PatternError("empty pattern")
    try:
        board = BoardSpec.parse(lines[0])
    except BoardError as exc:
        raise PatternError(str(exc)) from exc
    if board.d > 3:
        raise PatternError("pattern text is limited to d <= 3")
    body = lines[1:]
    if board.d == 3:
        layers, cur = [], []
        for ln in body:
            if ln.strip():
                cur.append(ln.strip())
            elif cur:
                layers.append(cur)
                cur = []
        if cur:
            layers.append(cur)
        rows = [r for layer in layers for r in layer]
        if len(layers) != board.dims[0]:
            raise PatternError(f"expected {board.dims[0]} layers, found {len(layers)}")
    else:
        rows = [ln.strip() for ln in body if ln.strip()]
    shape = board.dims if board.d > 1 else (1, board.dims[0])
    n_rows = int(np.prod(shape[:-1]))
    if len(rows) != n_rows or any(len(r) != shape[-1] for r in rows):
        raise PatternError(f"pattern body does not match {board}")
    bad = set("".join(rows)) - {"#", "."}
    if bad:
        raise PatternError(f"unexpected characters {sorted(bad)} in pattern")
    mask = np.array([[c == "#" for c in r] for r in rows], dtype=bool).ravel()
    return KingSet(board, mask)


def load_pattern(path) -> KingSet:
    with open(path) as fh:
        return parse_pattern(fh.read())


def save_pattern(s: KingSet, path) -> None:
    with open(path, "w") as fh:
        fh.write(format_pattern(s))


def kingset_from_json(data: dict | str) -> KingSet:
    if isinstance(data, str):
        data = json.loads(data)
    board = BoardSpec.parse(data["board"])
    return KingSet.from_coords(board, [tuple(v) for v in data["members"]])

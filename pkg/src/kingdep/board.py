"""Kings graphs K[n1,...,nd] and toroidal kings graphs T[n1,...,nd].

Vertices are addressed externally by 1-based coordinate tuples in matrix
order (coordinate 1 is the row).  Internally every vertex has a row-major
linear index, last coordinate fastest.
"""
from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from functools import cached_property, lru_cache
from math import prod

import numpy as np
from scipy import sparse


class BoardError(ValueError):
    """Raised for malformed board strings or out-of-range vertices."""


_BOARD_RE = re.compile(r"^\s*([KkTt])\s*\[\s*(\d+(?:\s*,\s*\d+)*)\s*\]\s*$")


@dataclass(frozen=True)
class BoardSpec:
    dims: tuple[int, ...]
    toroidal: bool = False

    def __post_init__(self):
        dims = tuple(int(n) for n in self.dims)
        object.__setattr__(self, "dims", dims)
        if not dims:
            raise BoardError("a board needs at least one dimension")
        lowest = 2 if self.toroidal else 1
        if any(n < lowest for n in dims):
            raise BoardError(f"every side of {self.kind}[...] must be >= {lowest}, got {dims}")

    @classmethod
    def parse(cls, text: str) -> "BoardSpec":
        m = _BOARD_RE.match(text)
        if not m:
            raise BoardError(f"cannot parse board {text!r}; expected K[n1,...] or T[n1,...]")
        dims = tuple(int(x) for x in m.group(2).split(","))
        return cls(dims, m.group(1).upper() == "T")

    @property
    def kind(self) -> str:
        return "T" if self.toroidal else "K"

    @property
    def d(self) -> int:
        return len(self.dims)

    @property
    def size(self) -> int:
        return prod(self.dims)

    def __str__(self):
        return f"{self.kind}[{','.join(map(str, self.dims))}]"

    @cached_property
    def strides(self) -> tuple[int, ...]:
        out = []
        step = 1
        for n in reversed(self.dims):
            out.append(step)
            step *= n
        return tuple(reversed(out))

    def check(self, v) -> tuple[int, ...]:
        v = tuple(int(x) for x in v)
        if len(v) != self.d or any(not 1 <= x <= n for x, n in zip(v, self.dims)):
            raise BoardError(f"vertex {v} is not on {self}")
        return v

    def index(self, v) -> int:
        v = self.check(v)
        return sum((x - 1) * s for x, s in zip(v, self.strides))

    def coords(self, idx: int) -> tuple[int, ...]:
        if not 0 <= idx < self.size:
            raise BoardError(f"index {idx} is not on {self}")
        out = []
        for s, n in zip(self.strides, self.dims):
            out.append(idx // s % n + 1)
        return tuple(out)

    def vertices(self):
        return itertools.product(*(range(1, n + 1) for n in self.dims))

    @property
    def is_uniform(self) -> bool:
        """True when every vertex has the full 3^d - 1 simple neighbors."""
        return self.toroidal and all(n >= 3 for n in self.dims)


def offsets(d: int):
    """All nonzero vectors in {-1,0,1}^d, lexicographic."""
    return [y for y in itertools.product((-1, 0, 1), repeat=d) if any(y)]


def neighbors(board: BoardSpec, v) -> list[tuple[tuple[int, ...], int]]:
    """Neighbors of ``v`` as ``(vertex, multiplicity)`` pairs in index order."""
    v = board.check(v)
    idx, mult = _adjacency(board)[board.index(v)]
    return [(board.coords(int(u)), int(m)) for u, m in zip(idx, mult)]


def degree(board: BoardSpec, v) -> int:
    v = board.check(v)
    return int(_adjacency(board)[board.index(v)][1].sum())


def neighbor_indices(board: BoardSpec, idx: int) -> tuple[np.ndarray, np.ndarray]:
    """Neighbor linear indices and multiplicities of the vertex at ``idx``."""
    return _adjacency(board)[idx]


@lru_cache(maxsize=64)
def _adjacency(board: BoardSpec) -> tuple[tuple[np.ndarray, np.ndarray], ...]:
    dims = np.array(board.dims)
    strides = np.array(board.strides)
    grid = np.indices(board.dims).reshape(board.d, -1).T  # zero-based coords, row-major
    hits: list[dict[int, int]] = [dict() for _ in range(board.size)]
    for y in offsets(board.d):
        target = grid + np.array(y)
        if board.toroidal:
            target %= dims
            ok = np.ones(len(grid), dtype=bool)
        else:
            ok = np.all((target >= 0) & (target < dims), axis=1)
        src = np.nonzero(ok)[0]
        dst = target[ok] @ strides
        for s, t in zip(src.tolist(), dst.tolist()):
            hits[s][t] = hits[s].get(t, 0) + 1
    out = []
    for h in hits:
        keys = sorted(h)
        out.append((np.array(keys, dtype=np.int64), np.array([h[k] for k in keys], dtype=np.int64)))
    return tuple(out)


@lru_cache(maxsize=64)
def adjacency_matrix(board: BoardSpec) -> sparse.csr_matrix:
    """Symmetric multiplicity-weighted adjacency matrix (CSR, int64)."""
    rows, cols, vals = [], [], []
    for i, (idx, mult) in enumerate(_adjacency(board)):
        rows.append(np.full(len(idx), i))
        cols.append(idx)
        vals.append(mult)
    n = board.size
    if not rows:
        return sparse.csr_matrix((n, n), dtype=np.int64)
    return sparse.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n), dtype=np.int64
    )


def degrees(board: BoardSpec) -> np.ndarray:
    return np.asarray(adjacency_matrix(board).sum(axis=1)).ravel()


@dataclass(frozen=True)
class InducedGraph:
    """Subgraph induced by ``vertices``; ``adjacency[i][j]`` is the multiplicity."""

    vertices: tuple[tuple[int, ...], ...]
    adjacency: tuple[tuple[int, ...], ...]

    def __len__(self):
        return len(self.vertices)

    def degree(self, i: int) -> int:
        return sum(self.adjacency[i])


def induced_subgraph(board: BoardSpec, vertices) -> InducedGraph:
    verts = tuple(board.check(v) for v in vertices)
    pos = {board.index(v): i for i, v in enumerate(verts)}
    if len(pos) != len(verts):
        raise BoardError("duplicate vertex in induced subgraph")
    adj = [[0] * len(verts) for _ in verts]
    for vi, i in pos.items():
        for u, m in zip(*_adjacency(board)[vi]):
            j = pos.get(int(u))
            if j is not None:
                adj[i][j] = int(m)
    return InducedGraph(verts, tuple(tuple(r) for r in adj))


def neighborhood_subgraph(board: BoardSpec, v) -> InducedGraph:
    return induced_subgraph(board, [u for u, _ in neighbors(board, v)])

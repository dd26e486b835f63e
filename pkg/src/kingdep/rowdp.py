"""Exact maximisation over 2-D kings boards by row transfer.

The constraints handled are per-cell neighbor-count caps: a cell with value
``x`` requires (number of occupied kings-neighbors) <= ``cap[x][cell]``.
Every binary program the builders in :mod:`kingdep.ilp` produce on K[m,n]
has this form.

The state after row ``i`` is the pair (row i-1, row i).  Appending row i+1
settles every constraint of row i.  For a fixed middle row only the
3-wide window sums of the outer rows matter, and only at positions whose
cap can bind, so the best predecessor for every successor row is read from a
prefix-maximum table indexed by those window sums.

Narrow tori are handled separately by :func:`solve_torus_rows`.
"""
from __future__ import annotations

import time

import numpy as np

NEG = np.int64(-(1 << 62))
MAX_WIDTH = 11


class DPBudgetExceeded(RuntimeError):
    pass


def _row_tables(n: int):
    xs = np.arange(1 << n)
    bits = ((xs[:, None] >> np.arange(n)) & 1).astype(np.int64)
    pad = np.pad(bits, ((0, 0), (1, 1)))
    window = pad[:, :-2] + pad[:, 1:-1] + pad[:, 2:]
    inner = pad[:, :-2] + pad[:, 2:]
    return bits, window, inner


def solve_rows(weights: np.ndarray, cap0: np.ndarray, cap1: np.ndarray, time_limit: float | None = None):
    """Maximise ``sum(weights * x)`` on an m-by-n grid; n is the row width.

    ``weights`` must be integer valued.  Returns ``(value, x)`` with ``x`` an
    m-by-n 0/1 array, or ``(None, None)`` if no assignment is feasible.
    """
    weights = np.asarray(weights, dtype=np.int64)
    m, n = weights.shape
    if n > MAX_WIDTH:
        raise ValueError(f"row width {n} exceeds {MAX_WIDTH}")
    shift = max(n, 1)
    if int(np.abs(weights).sum()) >= 1 << (61 - shift):
        raise OverflowError("weights too large for packed dynamic programming")
    full = 1 << n
    low = (1 << shift) - 1
    bits, window, inner = _row_tables(n)
    rowval = [bits @ weights[i] for i in range(m)]
    start = time.monotonic()

    # V[c, a]: best packed (value << shift | c) with rows i-1 = c, i = a
    V = np.full((full, full), NEG, dtype=np.int64)
    V[0, :] = rowval[0] << shift
    parents: list[np.ndarray] = []
    for i in range(m):
        last = i + 1 == m
        nb = 1 if last else full
        Vn = np.full((full, nb), NEG, dtype=np.int64)
        for a in range(full):
            col = V[:, a]
            live = np.flatnonzero(col > NEG)
            if live.size == 0:
                continue
            caps = np.where(bits[a] == 1, cap1[i], cap0[i]) - inner[a]
            if (caps < 0).any():
                continue
            pos = np.flatnonzero(caps < 6)
            lens = np.minimum(caps[pos], 3) + 1
            sc = window[live][:, pos]
            ok = (sc < lens).all(axis=1)
            cs = live[ok]
            if cs.size == 0:
                continue
            packed = ((col[cs] >> shift) << shift) | cs
            if pos.size:
                shape = tuple(int(x) for x in lens)
                table = np.full(int(np.prod(lens)), NEG, dtype=np.int64)
                np.maximum.at(table, np.ravel_multi_index(sc[ok].T, shape), packed)
                table = table.reshape(shape)
                for ax in range(pos.size):
                    table = np.maximum.accumulate(table, axis=ax)
                table = table.ravel()
            else:
                shape = ()
                table = np.array([packed.max()])
            if last:
                q = np.minimum(caps[pos], lens - 1)
                if (q >= 0).all():
                    Vn[a, 0] = table[np.ravel_multi_index(q, shape)] if pos.size else table[0]
                continue
            q = np.minimum(caps[pos][None, :] - window[:, pos], lens - 1)
            okb = (q >= 0).all(axis=1)
            if pos.size:
                best = np.where(okb, table[np.ravel_multi_index(np.maximum(q, 0).T, shape)], NEG)
            else:
                best = np.full(full, table[0])
            good = best > NEG
            Vn[a, good] = (((best[good] >> shift) + rowval[i + 1][good]) << shift) | (best[good] & low)
        parents.append(Vn & low)
        V = Vn
        if time_limit is not None and time.monotonic() - start > time_limit:
            raise DPBudgetExceeded(f"row {i + 1}/{m} after {time.monotonic() - start:.1f}s")

    a = int(np.argmax(V[:, 0]))
    if V[a, 0] <= NEG:
        return None, None
    value = int(V[a, 0] >> shift)
    rows = [0] * m
    rows[m - 1] = a
    b = 0
    for i in range(m - 1, 0, -1):
        c = int(parents[i][rows[i], b if i == m - 1 else rows[i + 1]])
        rows[i - 1] = c
    x = bits[rows].astype(np.int8)
    return value, x


MAX_TORUS_WIDTH = 6


def _cyclic_tables(n: int):
    xs = np.arange(1 << n)
    bits = ((xs[:, None] >> np.arange(n)) & 1).astype(np.int64)
    left = np.roll(bits, 1, axis=1)
    right = np.roll(bits, -1, axis=1)
    # for n == 2 left and right are the same cell: multiplicity 2, as on the torus
    return bits, left + bits + right, left + right


def solve_torus_rows(weights: np.ndarray, cap0: np.ndarray, cap1: np.ndarray, time_limit: float | None = None):
    """Like :func:`solve_rows` but wrapping in both directions.

    Rows (length n <= 6) wrap cyclically; the m >= 3 rows wrap as well, which
    is handled by fixing the first row and batching over the second, then
    closing the cycle once the last row is placed.
    """
    weights = np.asarray(weights, dtype=np.int64)
    m, n = weights.shape
    if n > MAX_TORUS_WIDTH or m < 3:
        raise ValueError("torus row engine needs row width <= 6 and at least 3 rows")
    shift = 2 * n
    if int(np.abs(weights).sum()) >= 1 << (60 - shift):
        raise OverflowError("weights too large for packed dynamic programming")
    full = 1 << n
    bits, window, inner = _cyclic_tables(n)
    start = time.monotonic()
    # feasible[i][c, a, b]: row i = a has all caps met given neighbours c above, b below
    feasible = []
    for i in range(m):
        caps = np.where(bits == 1, cap1[i], cap0[i]) - inner  # (a, j)
        cnt = window[:, None, None, :] + window[None, None, :, :]  # (c, 1, b, j)
        ok = (cnt <= caps[None, :, None, :]).all(axis=3)  # (c, a, b)
        feasible.append(ok)
    rowval = [bits @ weights[i] for i in range(m)]

    def run(r0: int, r1s: np.ndarray, keep_parents: bool):
        # V[t, c, a] for batch entry t (second row r1s[t])
        V = np.full((len(r1s), full, full), NEG, dtype=np.int64)
        V[np.arange(len(r1s)), r0, r1s] = rowval[0][r0] + rowval[1][r1s]
        parents = []
        for i in range(1, m - 1):
            cand = np.where(feasible[i][None, :, :, :], V[:, :, :, None], NEG)  # (t, c, a, b)
            arg = cand.argmax(axis=1)
            best = np.take_along_axis(cand, arg[:, None], axis=1)[:, 0]
            V = np.where(best > NEG, best + rowval[i + 1][None, None, :], NEG)
            if keep_parents:
                parents.append(arg)
        # close: row m-1 sees (m-2, m-1, r0); row 0 sees (m-1, r0, r1)
        close = feasible[m - 1][:, :, r0][None, :, :] & feasible[0][None, None, :, r0, r1s].transpose(3, 0, 1, 2)[:, 0]
        final = np.where(close, V, NEG)
        return final, parents

    best_val, best_key = None, None
    for r0 in range(full):
        final, _ = run(r0, np.arange(full), False)
        flat = int(final.argmax())
        val = final.ravel()[flat]
        if val > NEG and (best_val is None or val > best_val):
            best_val = int(val)
            best_key = (r0,) + np.unravel_index(flat, final.shape)
        if time_limit is not None and time.monotonic() - start > time_limit:
            raise DPBudgetExceeded(f"first-row value {r0 + 1}/{full} after {time.monotonic() - start:.1f}s")
    if best_val is None:
        return None, None
    r0, t, c, a = (int(x) for x in best_key)
    _, parents = run(r0, np.array([t]), True)
    rows = [0] * m
    rows[0], rows[1] = r0, t
    rows[m - 1], rows[m - 2] = a, c
    for i in range(m - 2, 1, -1):
        # parents[i-1][0, a, b] is row i-1 given rows i = a, i+1 = b
        rows[i - 1] = int(parents[i - 1][0, rows[i], rows[i + 1]])
    return best_val, bits[rows].astype(np.int8)

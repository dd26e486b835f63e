import itertools

import numpy as np
import pytest

ACCEPTANCE_LINES: list[str] = []


def brute_adjacency(dims, toroidal):
    """Multiplicity matrix built straight from coordinate arithmetic."""
    cells = list(itertools.product(*[range(n) for n in dims]))
    pos = {c: i for i, c in enumerate(cells)}
    adj = np.zeros((len(cells), len(cells)), dtype=np.int64)
    for c in cells:
        for y in itertools.product((-1, 0, 1), repeat=len(dims)):
            if not any(y):
                continue
            u = []
            for ci, yi, n in zip(c, y, dims):
                v = ci + yi
                if toroidal:
                    v %= n
                elif not 0 <= v < n:
                    break
                u.append(v)
            else:
                adj[pos[c], pos[tuple(u)]] += 1
    return adj


def brute_max(dims, toroidal, cap):
    """Largest subset whose members have at most cap(v) neighbors inside.

    ``cap`` is a per-vertex integer array.  Enumerates all 2^|V| subsets.
    """
    adj = brute_adjacency(dims, toroidal)
    n = len(adj)
    best = 0
    for lo in range(0, 1 << n, 1 << 14):
        codes = np.arange(lo, min(lo + (1 << 14), 1 << n))
        masks = ((codes[:, None] >> np.arange(n)) & 1).astype(np.int64)
        counts = masks @ adj
        ok = ~np.any((masks == 1) & (counts > cap[None, :]), axis=1)
        if ok.any():
            best = max(best, int(masks[ok].sum(axis=1).max()))
    return best


@pytest.fixture(scope="session")
def acceptance_log():
    return ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

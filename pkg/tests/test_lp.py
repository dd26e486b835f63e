from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import linprog

from kingdep.lp import LinearProgram, LpError, solve_lp, verify


def test_textbook_max():
    # max 3x + 5y, x <= 4, 2y <= 12, 3x + 2y <= 18 -> 36 at (2, 6)
    p = LinearProgram([3, 5], "max", [([1, 0], "<=", 4), ([0, 2], "<=", 12), ([3, 2], "<=", 18)])
    sol = solve_lp(p)
    assert sol.optimal and sol.value == 36
    assert sol.primal == [2, 6]
    assert sol.dual == [0, Fraction(3, 2), 1]
    assert verify(p, sol)


def test_fractional_optimum_is_exact():
    p = LinearProgram([1, 1], "max", [([3, 1], "<=", 1), ([1, 3], "<=", 1)])
    sol = solve_lp(p)
    assert sol.value == Fraction(1, 2)
    assert verify(p, sol)


def test_infeasible_and_unbounded():
    assert solve_lp(LinearProgram([1], "min", [([1], ">=", 2), ([1], "<=", 1)])).status == "infeasible"
    assert solve_lp(LinearProgram([1, 0], "max", [([1, -1], "<=", 1)])).status == "unbounded"


def test_free_and_bounded_variables():
    # min x + y with x free >= ... , y in [1, 3], x - y >= -5
    p = LinearProgram([1, 1], "min", [([1, -1], ">=", -5)], lower=[None, 1], upper=[None, 3])
    sol = solve_lp(p)
    assert sol.value == -3  # y = 1, x = -4
    assert verify(p, sol)


def test_equality_rows():
    p = LinearProgram([1, 2, 3], "min", [([1, 1, 1], "=", 1), ([1, -1, 0], ">=", 0)])
    sol = solve_lp(p)
    assert sol.value == 1 and verify(p, sol)


def test_degenerate_cycling_example():
    # Beale's example: Dantzig pricing without safeguards cycles
    p = LinearProgram(
        [Fraction(-3, 4), 150, Fraction(-1, 50), 6],
        "min",
        [
            ([Fraction(1, 4), -60, Fraction(-1, 25), 9], "<=", 0),
            ([Fraction(1, 2), -90, Fraction(-1, 50), 3], "<=", 0),
            ([0, 0, 1, 0], "<=", 1),
        ],
    )
    sol = solve_lp(p)
    assert sol.optimal and sol.value == Fraction(-1, 20)
    assert verify(p, sol)


def test_validation():
    with pytest.raises(LpError):
        LinearProgram([1, 2], "min", [([1], "<=", 1)])
    with pytest.raises(LpError):
        LinearProgram([1], "min", [([1], "<", 1)])
    with pytest.raises(LpError):
        LinearProgram([1], "sideways")


def test_guide_gives_same_answer():
    p = LinearProgram([2, 3, 1], "max", [([1, 1, 1], "<=", 4), ([1, 3, 0], "<=", 6), ([0, 1, 2], "<=", 5)])
    a, b = solve_lp(p), solve_lp(p, guide=True)
    assert a.value == b.value and verify(p, b)


small = st.integers(-4, 4)


@given(
    st.integers(1, 4).flatmap(
        lambda n: st.tuples(
            st.lists(small, min_size=n, max_size=n),
            st.lists(st.tuples(st.lists(small, min_size=n, max_size=n), st.sampled_from(["<=", ">=", "="]), st.integers(-6, 6)), min_size=1, max_size=4),
            st.sampled_from(["min", "max"]),
        )
    )
)
@settings(max_examples=150, deadline=None)
def test_matches_highs_on_random_boxes(data):
    c, rows, sense = data
    n = len(c)
    p = LinearProgram(c, sense, [(r, rel, b) for r, rel, b in rows], lower=[0] * n, upper=[5] * n)
    sol = solve_lp(p)
    a_ub, b_ub, a_eq, b_eq = [], [], [], []
    for r, rel, b in rows:
        if rel == "<=":
            a_ub.append(r); b_ub.append(b)
        elif rel == ">=":
            a_ub.append([-x for x in r]); b_ub.append(-b)
        else:
            a_eq.append(r); b_eq.append(b)
    sign = -1 if sense == "max" else 1
    ref = linprog(
        sign * np.array(c, dtype=float),
        A_ub=np.array(a_ub) if a_ub else None,
        b_ub=b_ub or None,
        A_eq=np.array(a_eq) if a_eq else None,
        b_eq=b_eq or None,
        bounds=[(0, 5)] * n,
        method="highs",
    )
    if ref.status == 2:
        assert sol.status == "infeasible"
    else:
        assert ref.status == 0
        assert sol.optimal
        assert abs(float(sol.value) - sign * ref.fun) < 1e-7
        assert verify(p, sol)

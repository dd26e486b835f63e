from fractions import Fraction

import numpy as np
import pytest

from kingdep.board import BoardSpec, degrees
from kingdep.ilp import (
    Budget,
    ModelError,
    beta_star,
    build_halfdep_model,
    build_kdep_model,
    lagrangian_bound,
    root_bound,
    solve_binary,
    tighten,
)
from kingdep.sets import is_half_dependent, is_k_dependent

from .conftest import brute_max

SMALL = [((3, 3), False), ((2, 4), False), ((3, 4), True), ((2, 5), True), ((3, 3), True), ((2, 2), True), ((2, 3, 2), False)]


@pytest.mark.parametrize("dims,tor", SMALL)
@pytest.mark.parametrize("k", [0, 1, 3, 4, 7])
def test_bnb_matches_bruteforce(dims, tor, k):
    b = BoardSpec(dims, tor)
    want = brute_max(dims, tor, np.full(b.size, k))
    res = solve_binary(build_kdep_model(b, k), method="bnb")
    assert res.proved and res.value == want
    assert is_k_dependent(res.witness, k)


@pytest.mark.parametrize("dims,tor", SMALL)
def test_half_bnb_matches_bruteforce(dims, tor):
    b = BoardSpec(dims, tor)
    want = brute_max(dims, tor, degrees(b) // 2)
    res = solve_binary(build_halfdep_model(b), method="bnb")
    assert res.value == want and is_half_dependent(res.witness)


@pytest.mark.parametrize("dims,tor", [((4, 4), False), ((3, 5), False), ((4, 4), True), ((3, 5), True), ((2, 6), True)])
@pytest.mark.parametrize("k", [0, 2, 4, 5])
def test_engines_agree(dims, tor, k):
    m = build_kdep_model(BoardSpec(dims, tor), k)
    a = solve_binary(m, method="rows")
    b = solve_binary(m, method="bnb")
    assert a.value == b.value
    assert a.engine == "rows" and b.engine == "bnb"


def test_weighted_objective_engines_agree():
    rng = np.random.default_rng(3)
    for tor in (False, True):
        b = BoardSpec((4, 5), tor)
        w = rng.integers(0, 7, size=b.size)
        m = build_kdep_model(b, 3, w)
        a, c = solve_binary(m, method="rows"), solve_binary(m, method="bnb")
        assert a.value == c.value
        assert m.objective(a.witness.mask.astype(int)) == a.value


def test_rational_weights():
    b = BoardSpec((3, 3))
    w = [Fraction(1, 3)] * 9
    res = solve_binary(build_kdep_model(b, 8, w))
    assert res.value == 3


def test_beta_star_values():
    assert [beta_star(BoardSpec((5, 5), True), k) for k in range(9)] == [4, 4, 6, 6, 8, 8, 8, 8, 8]
    # on T[3,3] the neighborhood wraps onto itself and is complete
    assert [beta_star(BoardSpec((3, 3), True), k) for k in range(9)] == [1, 2, 3, 4, 5, 6, 7, 8, 8]


def test_beta_star_three_dimensions():
    vals = [beta_star(BoardSpec((4, 4, 4), True), k) for k in (0, 6, 12, 24, 26)]
    assert vals == [8, 20, 22, 26, 26]


@pytest.mark.parametrize("dims", [(3, 4), (4, 4), (3, 5), (4, 5)])
@pytest.mark.parametrize("k", [1, 2, 3, 4])
def test_tightening_preserves_optimum(dims, k):
    b = BoardSpec(dims, True)
    m = build_kdep_model(b, k)
    t = tighten(m, b, k)
    assert solve_binary(m).value == solve_binary(t, method="bnb").value
    assert root_bound(t) <= root_bound(m)


def test_tighten_rejects_kings_board():
    b = BoardSpec((4, 4))
    with pytest.raises(ModelError):
        tighten(build_kdep_model(b, 2), b, 2)


def test_lagrangian_bound_is_valid_for_any_multipliers():
    b = BoardSpec((3, 4), True)
    m = build_kdep_model(b, 2)
    opt = solve_binary(m).value
    rng = np.random.default_rng(0)
    for _ in range(20):
        y = rng.random(m.n) * 0.3
        assert lagrangian_bound(m, y, exact=True) >= opt


def test_budget_exhaustion_reports_bounds_only():
    b = BoardSpec((6, 7), True)
    res = solve_binary(build_kdep_model(b, 4), Budget(node_limit=3), method="bnb")
    assert res.status == "bounds-only"
    assert res.best_upper >= res.value
    assert is_k_dependent(res.witness, 4)


def test_deterministic_single_worker():
    b = BoardSpec((3, 5), True)
    m = build_kdep_model(b, 3)
    r1, r2 = solve_binary(m, method="bnb"), solve_binary(m, method="bnb")
    assert r1.value == r2.value and r1.witness == r2.witness and r1.node_count == r2.node_count


def test_rows_engine_refuses_wide_torus():
    with pytest.raises(ModelError):
        solve_binary(build_kdep_model(BoardSpec((7, 7), True), 4), method="rows")


def test_json_report():
    res = solve_binary(build_halfdep_model(BoardSpec((4, 4))))
    js = res.to_json()
    assert js["value"]["exact"] == "9/1" and js["status"] == "proved-optimal"
    assert js["pattern"].startswith("K[4,4]")

from fractions import Fraction

import numpy as np
import pytest

from kingdep.board import BoardSpec
from kingdep.constructions import (
    ConstructionError,
    CongruenceSpec,
    balanced_ternary,
    congruence_dependence,
    congruence_set,
    fixture,
    half_dependent_construction,
    half_dependent_layout,
    pack_count,
    pack_torus,
    power_congruence,
    regenerate_fixture_c,
    search_congruence,
    stack_a,
    stack_b,
    stacking_formula,
    stripes,
    tau1_pattern,
)
from kingdep.sets import density, is_half_dependent, is_k_dependent


@pytest.mark.parametrize("m", [1, -1, 2, 5, 19, -19, 40, 121, 1000])
def test_balanced_ternary(m):
    d, digits = balanced_ternary(m)
    assert len(digits) == d and digits[0] != 0
    assert set(digits) <= {-1, 0, 1}
    assert sum(y * 3 ** (d - 1 - i) for i, y in enumerate(digits)) == m


def test_balanced_ternary_nineteen():
    assert balanced_ternary(19) == (4, (1, -1, 0, 1))
    with pytest.raises(ValueError):
        balanced_ternary(0)


@pytest.mark.parametrize("n,d", [(5, 2), (7, 2), (4, 3)])
def test_congruence_dependence_matches_counts(n, d):
    rng = np.random.default_rng(n * d)
    for _ in range(10):
        c = tuple(int(x) for x in rng.integers(0, n, d))
        R = frozenset(int(x) for x in rng.choice(n, size=rng.integers(1, n), replace=False))
        spec = CongruenceSpec(n, d, c, R)
        s = congruence_set(spec)
        assert s.max_count() == congruence_dependence(spec)


def test_power_congruence_two_dims():
    s = power_congruence(2)
    assert s.board == BoardSpec((5, 5), True)
    assert len(s) == 20 and density(s) == Fraction(4, 5)
    assert is_k_dependent(s, 6) and not is_k_dependent(s, 5)


def test_power_congruence_rejects_d1():
    with pytest.raises(ConstructionError):
        power_congruence(1)


def test_search_congruence_t13():
    spec = search_congruence(13, 2, 9, 5)
    assert spec is not None
    s = congruence_set(spec)
    assert len(s) == 117 and density(s) == Fraction(9, 13) and is_k_dependent(s, 5)


def test_stripes_and_tau1():
    s = stripes(6)
    assert len(s) == 18 and is_k_dependent(s, 2) and not is_k_dependent(s, 1)
    t = tau1_pattern((6, 4))
    assert density(t) == Fraction(1, 3) and is_k_dependent(t, 1)
    with pytest.raises(ConstructionError):
        tau1_pattern((4, 4))


def test_pack_torus():
    tile = BoardSpec((2, 5), True)
    big = BoardSpec((10, 10), True)
    s = pack_torus(big, tile, fixture("C"))
    assert len(s) == 60 and is_k_dependent(s, 4) and density(s) == Fraction(3, 5)
    assert pack_count(BoardSpec((23, 23), True), BoardSpec((3, 4), True)) == 35
    with pytest.raises(ConstructionError):
        pack_torus(BoardSpec((4, 5), True), tile, fixture("C"))


def test_fixtures():
    c, d = fixture("C"), fixture("D")
    assert len(c) == 6 and is_k_dependent(c, 4)
    assert not c.mask.reshape(2, 5)[:, 4].any()
    assert len(d) == 43 and is_k_dependent(d, 4)
    assert not d.mask.reshape(6, 12)[:, 11].any()


def test_fixture_c_regenerates():
    assert regenerate_fixture_c() == fixture("C")


@pytest.mark.slow
def test_fixture_d_regenerates():
    from kingdep.constructions import regenerate_fixture_d

    assert regenerate_fixture_d() == fixture("D")


@pytest.mark.parametrize("n", range(1, 12))
def test_stack_pieces(n):
    a = stack_a(n)
    assert a.shape == (n, 5) and a.sum() == (3 * n - 1 if n > 1 else 3)
    assert not a[:, 4].any()
    b = stack_b(n)
    assert b.sum() == 43 * max((n - 2) // 6, 0)


@pytest.mark.parametrize("n", [8, 13, 18, 23, 28, 33, 38])
def test_residue_three_count(n):
    s = half_dependent_construction(n)
    assert len(s) == (3 * n * n + 3) // 5
    assert half_dependent_layout(n).b_copies == 0


def test_layout_uses_residue_b_copies_when_wide():
    for n, b in [(30, 1), (32, 2), (39, 3)]:
        assert half_dependent_layout(n).b_copies == b
        assert half_dependent_layout(n).gap == 0


def test_stacking_formula_at_eight():
    assert stacking_formula(8) == pytest.approx(39)


@pytest.mark.slow
def test_polished_n34_reaches_694():
    s = half_dependent_construction(34, polish=2)
    assert is_half_dependent(s) and len(s) >= 694

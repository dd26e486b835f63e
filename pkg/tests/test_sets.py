import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kingdep.board import BoardSpec
from kingdep.sets import (
    KingSet,
    PatternError,
    density,
    format_pattern,
    half_domination_number,
    is_half_dependent,
    is_k_dependent,
    kingset_from_json,
    parse_pattern,
)

from .conftest import brute_adjacency

boards = st.sampled_from(
    [BoardSpec((4, 5)), BoardSpec((3, 3), True), BoardSpec((2, 5), True), BoardSpec((1, 6)), BoardSpec((2, 3, 3), True)]
)


@st.composite
def kingsets(draw):
    b = draw(boards)
    bits = draw(st.lists(st.booleans(), min_size=b.size, max_size=b.size))
    return KingSet(b, np.array(bits))


@given(kingsets())
@settings(max_examples=80, deadline=None)
def test_pattern_roundtrip(s):
    assert parse_pattern(format_pattern(s)) == s
    assert kingset_from_json(s.to_json()) == s


@given(kingsets())
@settings(max_examples=80, deadline=None)
def test_counts_match_bruteforce(s):
    adj = brute_adjacency(s.board.dims, s.board.toroidal)
    counts = adj @ s.mask.astype(int)
    assert np.array_equal(s.neighbor_counts, counts)
    top = int(counts[s.mask].max()) if s.mask.any() else 0
    assert s.max_count() == top
    assert is_k_dependent(s, top)
    if top:
        assert not is_k_dependent(s, top - 1)


def test_fixture_c_counts():
    s = parse_pattern("T[2,5]\n#..#.\n####.\n")
    assert len(s) == 6
    assert is_k_dependent(s, 4)
    assert sorted(s.profile.counts.values()) == [3, 3, 4, 4, 4, 4]


def test_no_six_king_set_on_t25_has_all_counts_four():
    # exhaustive over all 6-subsets of the 10 cells
    b = BoardSpec((2, 5), True)
    hits = 0
    for combo in itertools.combinations(range(10), 6):
        s = KingSet.from_indices(b, combo)
        if all(c == 4 for c in s.profile.counts.values()):
            hits += 1
    assert hits == 0


@pytest.mark.xfail(strict=True, reason="no 6-king set on T[2,5] has every count equal to 4; see decisions ledger")
def test_claimed_all_counts_four():
    s = parse_pattern("T[2,5]\n#..#.\n####.\n")
    assert set(s.profile.counts.values()) == {4}


def test_half_dependence_edges():
    b = BoardSpec((3, 3))
    assert is_half_dependent(KingSet.empty(b))
    assert not is_half_dependent(KingSet.full(b))
    corner_pair = KingSet.from_coords(b, [(1, 1), (1, 2)])
    # corner has degree 3 so may keep one neighbor
    assert is_half_dependent(corner_pair)


def test_violations_and_density():
    b = BoardSpec((4, 4), True)
    s = KingSet.full(b)
    assert len(s.violations(7)) == 16
    assert s.violations(8) == []
    assert density(s) == 1
    assert density(KingSet.from_coords(b, [(1, 1)])) == Fraction(1, 16)


def test_half_domination_number():
    assert half_domination_number(BoardSpec((4, 4)), 9) == 7
    with pytest.raises(ValueError):
        half_domination_number(BoardSpec((2, 2)), 5)


@pytest.mark.parametrize(
    "text",
    ["", "K[2,2]\n#.\n", "K[2,2]\n#.\n#x\n", "K[2,2]\n#..\n##\n", "Z[2]\n##\n", "K[2,2,2]\n##\n##\n"],
)
def test_bad_patterns(text):
    with pytest.raises(PatternError):
        parse_pattern(text)


def test_three_dimensional_layers():
    b = BoardSpec((2, 2, 3), True)
    s = KingSet.from_coords(b, [(1, 1, 1), (2, 2, 3)])
    text = format_pattern(s)
    assert text.count("\n\n") == 1
    assert parse_pattern(text) == s

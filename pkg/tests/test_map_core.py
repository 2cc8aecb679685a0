from fractions import Fraction as Fr

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cantor_extremes.errors import (
    AdjacencyViolation,
    BranchTooWide,
    ComponentCapExceeded,
    ConfigError,
    DepthTooLarge,
    OutOfDomain,
    OverlapOrGap,
)
from cantor_extremes.intervals import IntervalUnion
from cantor_extremes.map_core import (
    TERNARY,
    apply_map,
    cylinder_of,
    cylinders,
    encode,
    eventual_orbit,
    lambda_n,
    map_from_json,
    parse_rational,
    pattern_set,
    preimage,
    sample_symbol_stream,
    validate_map,
)

from _maps import MAPS, SKEWED, SLOPE4

rationals01 = st.fractions(min_value=0, max_value=1, max_denominator=10**6)


# --- validate_map -----------------------------------------------------------


def test_ternary_lambda_and_slopes():
    assert TERNARY.lam == Fr(2, 3)
    assert TERNARY.slopes == (3, 3, 3)
    assert TERNARY.i_indices == (1, 3) and TERNARY.j_indices == (2,)


def test_two_branch_map():
    spec = validate_map([("0", "1/2", "I"), ("1/2", "1", "J")])
    assert spec.lam == Fr(1, 2)


def test_slope4_map():
    assert SLOPE4.lam == Fr(1, 2)
    assert SLOPE4.slopes == (4, 4, 4, 4)


def test_skewed_map_starts_with_gap():
    assert SKEWED.branches[0].label == "J"
    assert SKEWED.lam == Fr(7, 12)


@pytest.mark.parametrize("spec", list(MAPS.values()), ids=list(MAPS))
def test_slopes_sum_to_one(spec):
    assert sum(1 / s for s in spec.slopes) == 1


def test_gap_in_tiling():
    with pytest.raises(OverlapOrGap):
        validate_map([("0", "1/3", "I"), ("1/2", "2/3", "J"), ("2/3", "1", "I")])


def test_overlap_in_tiling():
    with pytest.raises(OverlapOrGap):
        validate_map([("0", "1/2", "I"), ("1/3", "2/3", "J"), ("2/3", "1", "I")])


def test_branch_too_wide():
    with pytest.raises(BranchTooWide):
        validate_map([("0", "2/3", "I"), ("2/3", "1", "J")])


def test_adjacent_same_label():
    with pytest.raises(AdjacencyViolation):
        validate_map([("0", "1/3", "I"), ("1/3", "2/3", "I"), ("2/3", "1", "J")])


def test_malformed_rational():
    with pytest.raises(ConfigError):
        parse_rational("1/0")
    with pytest.raises(ConfigError):
        parse_rational("one third")
    assert parse_rational("2/6") == Fr(1, 3)


def test_json_roundtrip():
    assert map_from_json(TERNARY.to_json()) == TERNARY


def test_json_rejects_unknown_keys():
    doc = TERNARY.to_json()
    doc["branches"][0]["slope"] = "3"
    with pytest.raises(ConfigError):
        map_from_json(doc)


# --- apply_map / encode ------------------------------------------------------


def test_apply_map_examples():
    assert apply_map(TERNARY, Fr(1, 9)) == Fr(1, 3)
    assert apply_map(TERNARY, Fr(1, 2)) == Fr(1, 2)
    assert apply_map(TERNARY, Fr(2, 3)) == 0


def test_apply_map_out_of_domain():
    with pytest.raises(OutOfDomain):
        apply_map(TERNARY, Fr(3, 2))


def test_encode_examples():
    # orbit 1/4 -> 3/4 -> 1/4: oracle is repeated apply_map
    assert encode(TERNARY, Fr(1, 4), 4).as_tuple() == (1, 3, 1, 3)
    assert encode(TERNARY, 0, 7).as_tuple() == (1,) * 7
    assert encode(TERNARY, Fr(1, 2), 3).as_tuple() == (2, 2, 2)


def test_shared_endpoint_goes_right():
    assert encode(TERNARY, Fr(1, 3), 1).as_tuple() == (2,)
    assert encode(TERNARY, 1, 2).as_tuple() == (3, 3)


@given(rationals01, st.integers(1, 30))
def test_encode_prefix_property(x, d):
    assert encode(TERNARY, x, d).is_prefix_of(encode(TERNARY, x, d + 1))


@given(rationals01)
def test_encode_matches_orbit(x):
    for spec in MAPS.values():
        word = encode(spec, x, 20).as_tuple()
        y, orbit = x, []
        for _ in range(20):
            k = next(i for i, b in enumerate(spec.branches) if b.left <= y < b.right or (y == 1 and b.right == 1))
            orbit.append(k + 1)
            y = apply_map(spec, y)
        assert word == tuple(orbit)


def test_eventual_orbit_of_rational():
    prefix, cycle = eventual_orbit(TERNARY, Fr(1, 4))
    assert prefix == () and cycle == (1, 3)


# --- symbol streams -----------------------------------------------------------


def test_stream_frequencies():
    w = sample_symbol_stream(TERNARY, 123, 10**6)
    freq = np.mean(w.symbols == 2)
    # 4 sigma of a binomial(1e6, 1/3) proportion is about 0.0019
    assert abs(freq - 1 / 3) < 0.002


def test_stream_empty_and_deterministic():
    assert len(sample_symbol_stream(TERNARY, 1, 0)) == 0
    assert sample_symbol_stream(SKEWED, 9, 1000) == sample_symbol_stream(SKEWED, 9, 1000)


def test_stream_prefix_property():
    a = sample_symbol_stream(TERNARY, 5, 100)
    b = sample_symbol_stream(TERNARY, 5, 300)
    assert a.is_prefix_of(b)


# --- Λ_n and preimages --------------------------------------------------------


def test_lambda_1_ternary():
    assert lambda_n(TERNARY, 1) == IntervalUnion([(0, Fr(1, 3)), (Fr(2, 3), 1)])
    assert lambda_n(TERNARY, 1).measure == Fr(2, 3)


def test_lambda_0_is_everything():
    for spec in MAPS.values():
        assert lambda_n(spec, 0) == IntervalUnion.full()


def test_lambda_3_ternary():
    L = lambda_n(TERNARY, 3)
    assert len(L) == 8
    assert all(b - a == Fr(1, 27) for a, b in L.intervals)
    assert L.measure == Fr(8, 27)


@pytest.mark.parametrize("name", sorted(MAPS))
def test_lambda_nested(name):
    spec = MAPS[name]
    prev = lambda_n(spec, 0)
    for n in range(1, 7):
        cur = lambda_n(spec, n)
        assert cur <= prev
        assert cur.measure == spec.lam * prev.measure
        prev = cur


def test_lambda_cap():
    with pytest.raises(DepthTooLarge):
        lambda_n(TERNARY, 30, cap=2**20)


def test_preimage_examples():
    assert preimage(TERNARY, IntervalUnion.full()) == IntervalUnion.full()
    P = preimage(TERNARY, IntervalUnion([(0, Fr(1, 3))]))
    # per-branch pullback oracle: x/3 + k/3
    assert P == IntervalUnion([(0, Fr(1, 9)), (Fr(1, 3), Fr(4, 9)), (Fr(2, 3), Fr(7, 9))])
    assert P.measure == Fr(1, 3)


@given(st.lists(st.tuples(st.integers(0, 256), st.integers(0, 256)), max_size=6))
def test_preimage_preserves_measure(raw):
    A = IntervalUnion([(Fr(min(a, b), 256), Fr(max(a, b), 256)) for a, b in raw])
    for spec in MAPS.values():
        assert preimage(spec, A).measure == A.measure


def test_preimage_cap():
    A = lambda_n(TERNARY, 6)
    with pytest.raises(ComponentCapExceeded):
        preimage(TERNARY, A, cap=100)


# --- cylinders and patterns ---------------------------------------------------


@pytest.mark.parametrize("name", sorted(MAPS))
def test_cylinders_tile(name):
    spec = MAPS[name]
    cyl = cylinders(spec, 3)
    assert cyl[0].left == 0 and cyl[-1].right == 1
    assert all(a.right == b.left for a, b in zip(cyl, cyl[1:]))


@given(st.fractions(min_value=0, max_value=Fr(499, 500), max_denominator=500), st.integers(1, 6))
def test_cylinder_of_contains_point(x, d):
    for spec in MAPS.values():
        c = cylinder_of(spec, x, d)
        assert c.left <= x < c.right
        assert c.word == encode(spec, x, d).as_tuple()
        assert x == c.left + c.width * c.offset


def test_pattern_set_measure(any_map):
    lam = any_map.lam
    bits = (0, 1, 1, 0, 1)
    assert pattern_set(any_map, bits).measure == lam**2 * (1 - lam) ** 3


def test_pattern_zero_word_is_lambda_n(any_map):
    assert pattern_set(any_map, (0, 0, 0)) == lambda_n(any_map, 3)

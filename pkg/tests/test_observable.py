import itertools
import math
from fractions import Fraction as Fr

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from _maps import MAPS, SLOPE4
from cantor_extremes.errors import AlphaOne, DepthExhausted, IndeterminateOnPrefix
from cantor_extremes.map_core import TERNARY, SymbolWord, cylinders, encode
from cantor_extremes.observable import (
    F_exact,
    F_inverse,
    F_log,
    GapWord,
    Scales,
    centering_cn,
    centering_quadrature,
    cylinder_weight,
    default_scales,
    exceedance_bracket,
    exceedance_test,
    j_n_tau,
    phi_alpha,
    psi_exact,
    psi_of_word,
    shift_psi,
    words_of_depth,
)

bit_words = st.lists(st.integers(0, 1), min_size=2, max_size=40).map(tuple)


def lex_measure_oracle(u_bits, lam, depth):
    """P(b < u) by summing every depth-d binary word strictly below u's prefix."""
    total = Fr(0)
    u = tuple(u_bits) + (0,) * (depth - len(u_bits))
    for w in itertools.product((0, 1), repeat=depth):
        if w < u:
            z = w.count(0)
            total += lam**z * (1 - lam) ** (depth - z)
    return total


def cylinder_oracle(spec, u_bits, depth):
    """Lebesgue measure of map cylinders whose gap prefix lies strictly below u."""
    mask = spec.gap_mask()
    u = tuple(u_bits) + (0,) * (depth - len(u_bits))
    return sum((c.width for c in cylinders(spec, depth) if tuple(int(mask[s]) for s in c.word) < u), Fr(0))


# --- ψ -----------------------------------------------------------------------


def test_psi_on_cantor_word_is_zero():
    w = psi_of_word(SymbolWord([1, 3, 1, 3, 1, 3]), TERNARY)
    assert w.bits == (0,) * 6 and w.value == 0


def test_psi_single_gap():
    assert psi_of_word(SymbolWord([2, 1, 1, 1]), TERNARY).value == Fr(1, 2)


def test_psi_gaps_at_two_and_three():
    assert psi_of_word(SymbolWord([1, 2, 2, 3, 1]), TERNARY).value == Fr(3, 8)


def test_shift_examples():
    w = GapWord((1, 0, 1), tail=0)
    assert w.value == Fr(5, 8)
    assert shift_psi(w).bits == (0, 1) and shift_psi(w).value == Fr(1, 4)
    assert shift_psi(GapWord((0,) * 5, tail=0)).value == 0


@given(bit_words, st.sampled_from([0, 1]))
def test_shift_identity(bits, tail):
    w = GapWord(bits, tail)
    assert shift_psi(w).value == 2 * w.value - bits[0]


def test_psi_exact_matches_truncated_coding():
    for x in (Fr(1, 4), Fr(1, 2), Fr(5, 7), Fr(2, 9), Fr(13, 81)):
        exact = psi_exact(TERNARY, x)
        prefix = psi_of_word(encode(TERNARY, x, 60), TERNARY).value
        assert 0 <= exact - prefix <= Fr(1, 2**60)


def test_from_dyadic_roundtrip():
    assert GapWord.from_dyadic(Fr(3, 4)).bits == (1, 1)
    assert GapWord.from_dyadic(Fr(5, 16)).value == Fr(5, 16)


# --- F -------------------------------------------------------------------------


def test_F_of_dyadic_powers():
    for n in range(1, 41):
        assert F_exact(GapWord.from_dyadic(Fr(1, 2**n)), TERNARY) == Fr(2, 3) ** n


def test_F_endpoints(any_map):
    assert F_exact(GapWord((), tail=1), any_map) == 1
    assert F_exact(GapWord((), tail=0), any_map) == 0


def test_F_three_quarters_ternary():
    # frozen from the depth-8 cylinder enumeration below
    assert F_exact(GapWord.from_dyadic(Fr(3, 4)), TERNARY) == Fr(8, 9)
    assert cylinder_oracle(TERNARY, (1, 1), 8) == Fr(8, 9)


@pytest.mark.parametrize("name", sorted(MAPS))
def test_F_matches_cylinder_enumeration(name):
    spec = MAPS[name]
    for bits in [(1,), (0, 1), (1, 0, 1), (0, 1, 1, 0, 1), (1, 1, 0, 0, 1)]:
        assert F_exact(GapWord(bits, 0), spec) == cylinder_oracle(spec, bits, 5)


@given(st.lists(st.integers(0, 1), min_size=1, max_size=10).map(tuple))
def test_F_matches_lexicographic_oracle(bits):
    for spec in MAPS.values():
        assert F_exact(GapWord(bits, 0), spec) == lex_measure_oracle(bits, spec.lam, len(bits))


@pytest.mark.parametrize("name", sorted(MAPS))
def test_F_strictly_increasing_exhaustive(name):
    spec = MAPS[name]
    for d in (1, 4, 8, 12):
        vals = [F_exact(w, spec) for w in words_of_depth(d)]
        assert all(a < b for a, b in zip(vals, vals[1:]))


def test_F_with_tail_one():
    # 0111... equals 1000... as a number, and F agrees
    assert F_exact(GapWord((0,), tail=1), TERNARY) == F_exact(GapWord((1,), tail=0), TERNARY)


@given(bit_words)
def test_F_log_matches_exact(bits):
    w = GapWord(bits, 0)
    f = F_exact(w, TERNARY)
    if f > 0:
        assert math.isclose(F_log(w, TERNARY), math.log(f), rel_tol=1e-12, abs_tol=1e-12)


def test_F_log_deep_word_does_not_underflow():
    w = GapWord((0,) * 10**6 + (1,), tail=0)
    assert math.isclose(F_log(w, TERNARY), (10**6 + 1) * math.log(2 / 3), rel_tol=1e-12)


# --- F^{-1} --------------------------------------------------------------------


def test_F_inverse_examples():
    for n in (1, 5, 17):
        w = F_inverse(Fr(2, 3) ** n, TERNARY)
        assert w.tail == 0 and w.value == Fr(1, 2**n)
    assert F_inverse(1, TERNARY).tail == 1 and F_inverse(1, TERNARY).value == 1
    assert F_inverse(Fr(8, 9), TERNARY).value == Fr(3, 4)


def test_F_inverse_roundtrip_and_bracketing():
    rng = np.random.default_rng(0)
    for _ in range(1000):
        q = int(rng.integers(1, 10**6))
        s = Fr(int(rng.integers(0, q + 1)), q)
        for spec in MAPS.values():
            w = F_inverse(s, spec, 64)
            lo = F_exact(w, spec)
            if w.tail is not None:
                assert lo == s
            else:
                assert lo <= s < lo + cylinder_weight(w, spec)


def test_F_inverse_strict_depth():
    with pytest.raises(DepthExhausted):
        F_inverse(Fr(1, 10), TERNARY, 32, strict=True)


@given(st.lists(st.integers(0, 1), min_size=1, max_size=30).map(tuple))
def test_F_inverse_recovers_finite_words(bits):
    bits = bits + (1,)
    spec = SLOPE4
    assert F_inverse(F_exact(GapWord(bits, 0), spec), spec, 64).bits == bits


# --- φ_α -------------------------------------------------------------------------


def test_phi_alpha_examples():
    # F((0,1)) = 1/4 on the slope-4 map, so φ_1 = 4
    assert math.isclose(phi_alpha(GapWord((0, 1), 0), 1, SLOPE4).value, 4.0)
    assert math.isclose(phi_alpha(GapWord((1,), 0), 0.5, TERNARY).value, 9 / 4)
    assert phi_alpha(GapWord((0,) * 8, 0), 0.5, TERNARY).is_infinite


def test_phi_alpha_indeterminate_prefix():
    with pytest.raises(IndeterminateOnPrefix):
        phi_alpha(GapWord((0,) * 8, None), 0.5, TERNARY)


def test_logvalue_covers_deep_cantor_points():
    v = phi_alpha(GapWord((0,) * 10**6 + (1,), 0), 0.5, TERNARY)
    assert v.sign == "positive" and math.isfinite(v.log_magnitude) and v.log_magnitude > 1e5


# --- exceedances and levels --------------------------------------------------------


def test_exceedance_inside_lambda_k():
    k = 6
    sc = Scales(3**k, Fr(2**k), 0.5, 27, 27, 26)
    assert sc.threshold == Fr(2, 3) ** k
    assert exceedance_test(GapWord((0,) * k + (1, 0), None), sc, TERNARY)


def test_coarse_gap_is_not_exceedance():
    sc = Scales(16, Fr(4), 0.5, 4, 4, 3)
    thr = GapWord.from_dyadic(Fr(1, 4))
    assert not exceedance_test(GapWord((1, 0, 0), 0), sc, TERNARY, threshold=thr)


def test_tie_is_not_exceedance():
    thr = GapWord((0, 1), 0)
    sc = Scales(16, Fr(4), 0.5, 4, 4, 3)
    assert not exceedance_test(GapWord((0, 1, 0, 0), 0), sc, TERNARY, threshold=thr)


def test_unresolved_tie_raises():
    thr = GapWord((0, 1, 1), None)
    sc = Scales(16, Fr(4), 0.5, 4, 4, 3)
    with pytest.raises(DepthExhausted):
        exceedance_test(GapWord((0, 1, 1), None), sc, TERNARY, threshold=thr)


def test_symbolic_exceedance_agrees_with_float_path():
    rng = np.random.default_rng(11)
    sc = default_scales(100, 3, 0.5)
    u_n = float(sc.n / sc.tau) ** (1 / sc.alpha)
    thr = F_inverse(sc.threshold, TERNARY, 256)
    agree = 0
    for _ in range(10**4):
        # bias toward leading zeros so that exceedances actually occur
        lead = int(rng.geometric(0.15))
        bits = tuple([0] * lead + rng.integers(0, 2, 64 - lead).tolist())[:64]
        w = GapWord(bits, None)
        symbolic = exceedance_test(w, sc, TERNARY, threshold=thr)
        phi = math.exp(-F_log(w, TERNARY) / sc.alpha)
        agree += symbolic == (phi > u_n)
    assert agree == 10**4


def test_j_levels_examples():
    sc = Scales(3**5, Fr(2**5), 0.5, 15, 16, 15)
    assert j_n_tau(sc, TERNARY, 3) == [5, math.inf, math.inf]
    sc = Scales(9, Fr(8), 0.5, 3, 3, 2)
    assert j_n_tau(sc, TERNARY, 3) == [1, 2, math.inf]


def test_j_grows_logarithmically():
    for e in range(2, 13):
        n = 10**e
        j = j_n_tau(default_scales(n, 1, 0.5), TERNARY, 1)[0]
        # λ^j <= τ/n < λ^{j-1}
        assert j <= 1 + math.log(n) / math.log(1.5)
        assert j <= 3 * math.log(n)


# --- scales -------------------------------------------------------------------


def test_centering_examples():
    assert centering_cn(12345, 0.5) == 0
    assert math.isclose(centering_cn(8, 1.5), 3.0, rel_tol=0, abs_tol=1e-12)
    assert centering_cn(1, 1.5) == 0


def test_centering_matches_quadrature():
    for n in (1, 2, 8, 100, 10**4, 10**6):
        for a in (1.1, 1.3, 1.5, 1.7, 1.9):
            assert abs(centering_cn(n, a) - centering_quadrature(n, a)) < 1e-10


def test_alpha_one_rejected():
    with pytest.raises(AlphaOne):
        centering_cn(10, 1)
    with pytest.raises(AlphaOne):
        default_scales(100, 1, 1.0)


def test_default_scales_examples():
    s = default_scales(10**4, 1, 0.5)
    assert (s.k_n, s.r_n, s.q_n) == (100, 100, 1)
    s = default_scales(10**6, 1, 0.5)
    assert (s.k_n, s.r_n, s.t_n) == (1000, 1000, math.ceil(math.log(10**6) ** 2))
    assert s.c_n == 0


def test_default_scales_block_constraints():
    ratios = []
    for e in range(10, 31):
        s = default_scales(2**e, 1, 1.5)
        assert s.k_n * s.r_n <= s.n < (s.k_n + 1) * s.r_n
        assert s.t_n < s.r_n
        ratios.append(s.k_n * s.t_n / s.n)
    # k_n t_n = o(n): the ratio falls along the grid once t_n is no longer capped
    tail = ratios[8:]
    assert all(a > b for a, b in zip(tail, tail[1:]))
    assert ratios[-1] < 0.02


def test_scales_threshold_and_un():
    s = default_scales(10**4, 2, 0.5)
    assert s.threshold == Fr(1, 5000)
    assert math.isclose(s.u_n, 5000.0**2)
    assert math.isclose(s.a_n, 10**8)


# --- distributional identities -----------------------------------------------------


def test_pushforward_is_uniform():
    # independent oracle path: numpy Horner over a fresh matrix of gap bits
    rng = np.random.default_rng(2024)
    m, depth = 10**6, 64
    lam = 2 / 3
    f = np.zeros(m)
    for _ in range(depth):
        b = rng.random(m) >= lam
        f = np.where(b, lam + (1 - lam) * f, lam * f)
    f.sort()
    grid = np.arange(1, m + 1) / m
    ks = max(np.max(grid - f), np.max(f - (grid - 1 / m)))
    assert ks <= 0.002


def test_tail_identity_exact():
    # n P(X > y a_n) = y^{-α} with P(X > y a_n) = m{F∘ψ < y^{-α}/n}; measured in map coordinates
    from cantor_extremes.geometry import lower_set

    for bits in [(1,), (0, 1), (0, 0, 1, 1), (0, 1, 0, 1, 1)]:
        s = F_exact(GapWord(bits, 0), TERNARY)
        for n, alpha in ((10, 0.5), (1000, 1.5)):
            y = float(n * s) ** (-1 / alpha)
            level = lower_set(TERNARY, s).measure
            assert level == s
            assert math.isclose(n * float(level), y ** (-alpha), rel_tol=1e-12)
    for s in (Fr(1, 10**6), Fr(3, 7000)):
        lo, hi = exceedance_bracket(s, TERNARY)
        assert lo <= s < hi and hi - lo < Fr(1, 10**20)


def test_tail_identity_monte_carlo():
    from cantor_extremes.estimators import simulate_observable_stream

    n, alpha, y = 1000, 0.8, 2.0
    sc = default_scales(n, 1, alpha)
    st_ = simulate_observable_stream(TERNARY, sc, 77, 10**6)
    x_over_an = np.exp(st_.log_x - math.log(n) / alpha)
    p = y ** (-alpha) / n
    count = int(np.sum(x_over_an > y))
    mean = 10**6 * p
    assert abs(count - mean) <= 4 * math.sqrt(mean * (1 - p))

"""The symbolic distance ψ, its distribution function F, and φ_α.

ψ only sees the gap-indicator word ``b_i = 1{symbol i is a J-branch}``.  Under
Lebesgue measure those bits are i.i.d. with ``P(b=0) = λ``, so F is the
lexicographic measure of the lower set of a word::

    F(u) = sum_{i : u_i = 1} λ * prod_{j < i} p(u_j),   p(0) = λ, p(1) = 1 - λ

Everything here is exact (``Fraction``) except :class:`LogValue`, which carries
φ_α in log space.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from scipy import integrate

from .errors import AlphaOne, DepthExhausted, IndeterminateOnPrefix, OutOfDomain
from .intervals import as_fraction
from .map_core import MapSpec, SymbolWord, eventual_orbit

DEFAULT_DEPTH = 64
MAX_DEPTH = 4096


@dataclass(frozen=True)
class GapWord:
    """Binary word ``b_1 b_2 ... b_d`` followed by ``tail`` repeated forever.

    ``tail=None`` means nothing is known past depth ``d``; the word then only
    names a cylinder, and :attr:`value` is the left end of that cylinder.
    """

    bits: tuple[int, ...]
    tail: Optional[int] = None

    @classmethod
    def from_dyadic(cls, x) -> "GapWord":
        """Finite binary expansion of a dyadic rational in [0, 1)."""
        x = as_fraction(x)
        if not 0 <= x < 1 or (x.denominator & (x.denominator - 1)):
            raise ValueError(f"{x} is not a dyadic rational in [0, 1)")
        bits = []
        while x:
            x *= 2
            bits.append(int(x >= 1))
            x -= bits[-1]
        return cls(tuple(bits), tail=0)

    @property
    def depth(self) -> int:
        return len(self.bits)

    @property
    def exact_tail_known(self) -> bool:
        return self.tail is not None

    @property
    def value(self) -> Fraction:
        v = sum((Fraction(1, 2 ** (i + 1)) for i, b in enumerate(self.bits) if b), Fraction(0))
        if self.tail == 1:
            v += Fraction(1, 2**self.depth)
        return v

    def bit(self, i: int) -> Optional[int]:
        """1-based digit ``i``, extended by the tail; None when unknown."""
        if i <= self.depth:
            return self.bits[i - 1]
        return self.tail

    def one_positions(self) -> list[int]:
        return [i + 1 for i, b in enumerate(self.bits) if b]

    def truncate(self, depth: int) -> "GapWord":
        if depth >= self.depth:
            return self
        return GapWord(self.bits[:depth], tail=None)


@dataclass(frozen=True, order=True)
class LogValue:
    """A non-negative extended real stored as its natural log.

    ``log_magnitude = -inf`` encodes 0 and ``+inf`` encodes +∞.
    """

    log_magnitude: float

    @classmethod
    def of(cls, x: float) -> "LogValue":
        return cls(math.log(x) if x > 0 else -math.inf)

    @property
    def sign(self) -> str:
        return "zero" if self.log_magnitude == -math.inf else "positive"

    @property
    def is_infinite(self) -> bool:
        return self.log_magnitude == math.inf

    @property
    def value(self) -> float:
        try:
            return math.exp(self.log_magnitude)
        except OverflowError:
            return math.inf


def _log_fraction(x: Fraction) -> float:
    if x <= 0:
        return -math.inf
    # math.log accepts arbitrarily large ints, so tiny rationals do not underflow
    return math.log(x.numerator) - math.log(x.denominator)


def check_alpha(alpha) -> float:
    a = float(alpha)
    if not 0 < a < 2:
        raise ValueError(f"alpha must lie in (0, 2), got {alpha}")
    if a == 1:
        raise AlphaOne("alpha = 1 is not supported")
    return a


# ---------------------------------------------------------------------------
# ψ and its shift identity


def psi_of_word(word: SymbolWord, spec: MapSpec, tail: Optional[int] = None) -> GapWord:
    if len(word) == 0:
        raise ValueError("word must be nonempty")
    mask = spec.gap_mask()
    return GapWord(tuple(int(b) for b in mask[word.symbols]), tail=tail)


def shift_psi(word: GapWord) -> GapWord:
    """Gap word of ``G(x)``; its value is ``2 * value - b_1``."""
    if word.depth < 2:
        raise ValueError("shift needs depth >= 2")
    return GapWord(word.bits[1:], word.tail)


def psi_exact(spec: MapSpec, x, max_steps: int = 4096) -> Fraction:
    """Exact ψ(x) for a rational point whose orbit is eventually periodic."""
    orbit = eventual_orbit(spec, x, max_steps)
    if orbit is None:
        raise DepthExhausted(f"orbit of {x} has no cycle within {max_steps} steps")
    prefix, cycle = orbit
    mask = spec.gap_mask()
    pre = [int(mask[s]) for s in prefix]
    cyc = [int(mask[s]) for s in cycle]
    head = sum((Fraction(1, 2 ** (i + 1)) for i, b in enumerate(pre) if b), Fraction(0))
    block = sum((Fraction(1, 2 ** (i + 1)) for i, b in enumerate(cyc) if b), Fraction(0))
    period = len(cyc)
    # block repeats every `period` digits after the prefix
    return head + Fraction(1, 2 ** len(pre)) * block * Fraction(2**period, 2**period - 1)


# ---------------------------------------------------------------------------
# distribution function


def F_exact(u: GapWord, spec: MapSpec) -> Fraction:
    """Lexicographic measure ``P(b < u)`` as an exact rational.

    With ``tail=None`` this is the value at the finite prefix (its zero
    extension), i.e. a lower bracket for every word sharing that prefix.
    """
    lam = spec.lam
    f = Fraction(1) if u.tail == 1 else Fraction(0)
    for bit in reversed(u.bits):
        f = lam + (1 - lam) * f if bit else lam * f
    return f


def F_log(u: GapWord, spec: MapSpec) -> float:
    """``log F(u)`` without forming the rational, for words of any depth."""
    log_lam = _log_fraction(spec.lam)
    log_gap = _log_fraction(1 - spec.lam)
    # count digits instead of accumulating logs, so deep words keep full precision
    terms = []
    zeros = ones = 0
    for bit in u.bits:
        if bit:
            terms.append((zeros + 1) * log_lam + ones * log_gap)
            ones += 1
        else:
            zeros += 1
    if u.tail == 1:
        terms.append(zeros * log_lam + ones * log_gap)
    if not terms:
        return -math.inf
    top = max(terms)
    return top + math.log(math.fsum(math.exp(t - top) for t in terms))


def F_inverse(s, spec: MapSpec, depth: int = DEFAULT_DEPTH, *, strict: bool = False) -> GapWord:
    """Greedy digits of ``F^{-1}(s)``.

    The expansion stops early with ``tail=0`` when the residual vanishes (an
    exact finite word) and with ``tail=1`` for ``s = 1``.  Otherwise the word
    is cut at ``depth`` with ``tail=None``; then ``F(word) <= s < F(word) +
    prod p(bits)``.  ``strict=True`` raises :class:`DepthExhausted` instead.
    """
    s = as_fraction(s)
    if not 0 <= s <= 1:
        raise OutOfDomain(f"F_inverse needs s in [0, 1], got {s}")
    lam = spec.lam
    if s == 1:
        return GapWord((), tail=1)
    r = s
    bits = []
    while r and len(bits) < depth:
        if r >= lam:
            bits.append(1)
            r = (r - lam) / (1 - lam)
        else:
            bits.append(0)
            r = r / lam
    if r == 0:
        return GapWord(tuple(bits), tail=0)
    if strict:
        raise DepthExhausted(f"F^-1({s}) does not terminate within {depth} digits")
    return GapWord(tuple(bits), tail=None)


def cylinder_weight(u: GapWord, spec: MapSpec) -> Fraction:
    """Lebesgue measure of the gap cylinder named by the finite bits of ``u``."""
    lam = spec.lam
    zeros = u.bits.count(0)
    return lam**zeros * (1 - lam) ** (u.depth - zeros)


def phi_alpha(u: GapWord, alpha, spec: MapSpec) -> LogValue:
    """``φ_α = (F∘ψ)^{-1/α}`` in log space.

    Infinite exactly for the all-zero word with known zero tail.  For a word
    with unknown tail the prefix value of F is used, which overstates φ by a
    relative amount below ``prod p(bits) / F``.
    """
    a = float(alpha)
    if not 0 < a < 2:
        raise ValueError(f"alpha must lie in (0, 2), got {alpha}")
    if not any(u.bits) and u.tail != 1:
        if u.tail == 0:
            return LogValue(math.inf)
        raise IndeterminateOnPrefix("all observed gap bits are 0 and the tail is unknown")
    return LogValue(-F_log(u, spec) / a)


# ---------------------------------------------------------------------------
# scales


@dataclass(frozen=True)
class Scales:
    """Normalising constants for sample size ``n`` and level ``tau``."""

    n: int
    tau: Fraction
    alpha: float
    k_n: int
    r_n: int
    t_n: int
    q_n: int = 1

    def __post_init__(self):
        check_alpha(self.alpha)
        if self.tau <= 0:
            raise ValueError("tau must be positive")
        if not self.k_n * self.r_n <= self.n < (self.k_n + 1) * self.r_n:
            raise ValueError("block sizes must satisfy k_n r_n <= n < (k_n + 1) r_n")
        if not self.t_n < self.r_n:
            raise ValueError("gap t_n must be shorter than the block length r_n")

    @property
    def a_n(self) -> float:
        return self.n ** (1 / self.alpha)

    @property
    def u_n(self) -> float:
        return float(self.n / self.tau) ** (1 / self.alpha)

    @property
    def c_n(self) -> float:
        return centering_cn(self.n, self.alpha)

    @property
    def threshold(self) -> Fraction:
        """``τ / n = F(u_{n,τ})``, the exceedance probability."""
        return self.tau / self.n

    def with_tau(self, tau) -> "Scales":
        return Scales(self.n, as_tau(tau), self.alpha, self.k_n, self.r_n, self.t_n, self.q_n)


def as_tau(tau) -> Fraction:
    if isinstance(tau, float):
        return Fraction(repr(tau))
    if isinstance(tau, str):
        return Fraction(tau)
    return as_fraction(tau)


def default_scales(n: int, tau=1, alpha=0.5) -> Scales:
    """``k_n = floor(sqrt n)``, ``r_n = floor(n / k_n)``, ``t_n = ceil(log^2 n)``, ``q_n = 1``.

    ``t_n`` is capped at ``r_n - 1`` for the moderate n where ``log^2 n``
    exceeds the block length.
    """
    if n < 16:
        raise ValueError("n must be >= 16")
    k = math.isqrt(n)
    r = n // k
    t = min(math.ceil(math.log(n) ** 2), r - 1)
    return Scales(n=n, tau=as_tau(tau), alpha=float(alpha), k_n=k, r_n=r, t_n=t, q_n=1)


def centering_cn(n: int, alpha) -> float:
    """``c_n = (n / a_n) E(X 1{X <= a_n})`` for the exact Pareto marginal."""
    a = check_alpha(alpha)
    if a < 1:
        return 0.0
    return a / (a - 1) * (n ** (1 - 1 / a) - 1)


def centering_quadrature(n: int, alpha) -> float:
    """``c_n`` by quadrature of ``(n / a_n) ∫_{1/n}^{1} w^{-1/α} dw`` (X = W^{-1/α})."""
    a = check_alpha(alpha)
    if a < 1:
        return 0.0
    # w = e^{-v} removes the singularity at 0: ∫_0^{log n} e^{-v (1 - 1/α)} dv
    val, _ = integrate.quad(lambda v: math.exp(-v * (1 - 1 / a)), 0.0, math.log(n), epsabs=0, epsrel=1e-13, limit=200)
    return n / n ** (1 / a) * val


def threshold_word(scales: Scales, spec: MapSpec, depth: int = DEFAULT_DEPTH) -> GapWord:
    return F_inverse(scales.threshold, spec, depth)


def j_n_tau(scales: Scales, spec: MapSpec, max_levels: int = 8, depth: int = DEFAULT_DEPTH) -> list:
    """Positions ``j^1 < j^2 < ...`` of the 1-digits of ``F^{-1}(τ/n)``.

    Padded with ``math.inf`` once the expansion terminates.  The working depth
    doubles until ``max_levels`` entries are settled, up to ``MAX_DEPTH``.
    """
    if not 0 < scales.threshold < 1:
        raise ValueError("need 0 < tau/n < 1")
    while True:
        word = F_inverse(scales.threshold, spec, depth)
        ones = word.one_positions()
        if word.tail == 0 or len(ones) >= max_levels:
            levels = ones[:max_levels]
            return levels + [math.inf] * (max_levels - len(levels))
        if depth >= MAX_DEPTH:
            raise DepthExhausted(f"fewer than {max_levels} threshold digits within {MAX_DEPTH} bits")
        depth *= 2


def first_level(scales: Scales, spec: MapSpec) -> int:
    """``j_{n,τ}``: position of the first 1-digit of the threshold word."""
    return j_n_tau(scales, spec, max_levels=1)[0]


def exceedance_test(word: GapWord, scales: Scales, spec: MapSpec, threshold: Optional[GapWord] = None) -> bool:
    """Symbolic ``X > u_n(τ)``, i.e. ``ψ-word < threshold word``.

    Ties (measure zero) count as non-exceedances.  Raises
    :class:`DepthExhausted` when the two words agree on every known digit.
    """
    thr = threshold if threshold is not None else F_inverse(scales.threshold, spec, MAX_DEPTH)
    return lex_less(word, thr)


def lex_less(w: GapWord, t: GapWord) -> bool:
    limit = max(w.depth, t.depth) + 1
    for i in range(1, limit + 1):
        a, b = w.bit(i), t.bit(i)
        if a is None or b is None:
            raise DepthExhausted(f"words agree on the first {i - 1} digits", position=i)
        if a != b:
            return a < b
        if i > w.depth and i > t.depth:
            # both sides are now constant tails of the same digit
            return False
    return False


def words_of_depth(d: int) -> list[GapWord]:
    """All binary words of length d in lexicographic order (finite, zero tail)."""
    return [GapWord(tuple((k >> (d - 1 - i)) & 1 for i in range(d)), tail=0) for k in range(2**d)]


def exceedance_bracket(s, spec: MapSpec, depth: int = 256) -> tuple[Fraction, Fraction]:
    """``(lower, upper)`` for ``m{F∘ψ < s}`` via the threshold word.

    Exact equality ``lower == upper == s`` when the expansion terminates.
    """
    word = F_inverse(as_fraction(s), spec, depth)
    lo = F_exact(word, spec)
    hi = lo if word.tail is not None else lo + cylinder_weight(word, spec)
    return lo, hi


__all__: Sequence[str] = [
    "GapWord",
    "LogValue",
    "Scales",
    "psi_of_word",
    "shift_psi",
    "psi_exact",
    "F_exact",
    "F_log",
    "F_inverse",
    "cylinder_weight",
    "phi_alpha",
    "exceedance_test",
    "lex_less",
    "j_n_tau",
    "first_level",
    "centering_cn",
    "centering_quadrature",
    "default_scales",
    "threshold_word",
    "words_of_depth",
    "exceedance_bracket",
]

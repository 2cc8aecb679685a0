"""Exact geometry of exceedance sets, q-runs, and cylinder approximations.

Every set here is determined by the gap-indicator word, so it can be built in
two coordinate systems:

``map``
    subsets of the map's own phase space, built from pattern-set pullbacks.
    Only possible when the threshold word terminates at moderate depth.
``gap``
    the same sets pushed forward by ``F∘ψ`` onto the two-branch gap factor
    (``MapSpec.gap_factor``).  Lebesgue measure is preserved, the exceedance
    set becomes the single interval ``[0, τ/n)``, and large ``n`` is cheap.

Results carry the working :class:`MapSpec` so downstream algebra (preimages,
cylinders) stays in the coordinates the set was built in.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .errors import ComponentCapExceeded, DepthExhausted
from .intervals import DEFAULT_COMPONENT_CAP, IntervalUnion
from .map_core import MapSpec, cylinder_of, pattern_set, preimage
from .observable import F_inverse, Scales, as_tau, first_level, j_n_tau

# map-space pattern sets grow like k_hat^depth; above this we switch to gap coordinates
MAP_DEPTH_LIMIT = 18


@dataclass(frozen=True)
class ExceedanceDecomposition:
    """``U_n(τ) = Λ_j ∪ H`` with ``j = j_{n,τ}`` and fringe ``H ⊂ Λ_{j-1} ∖ Λ_j``."""

    full_set: IntervalUnion
    core: IntervalUnion
    fringe: IntervalUnion
    j_levels: tuple
    kappa: Fraction
    space: MapSpec
    threshold: Fraction

    @property
    def coordinates(self) -> str:
        return "gap" if self.space.is_gap_factor else "map"


@dataclass(frozen=True)
class ApproxPair:
    outer: IntervalUnion
    inner: IntervalUnion
    target: IntervalUnion
    depth: int
    rho: Fraction
    space: MapSpec


@dataclass(frozen=True)
class ShortReturnResult:
    value: float
    terms: tuple[Fraction, ...]
    j_min: int
    j_max: int
    depth: int
    coarsened: bool = False


def _working_space(spec: MapSpec, s: Fraction, coords: str) -> MapSpec:
    if coords == "gap":
        return spec.gap_factor()
    if coords == "map":
        return spec
    if coords != "auto":
        raise ValueError(f"coords must be auto, map or gap, got {coords!r}")
    word = F_inverse(s, spec, MAP_DEPTH_LIMIT)
    if spec.is_gap_factor or word.tail is None:
        return spec.gap_factor()
    return spec


def lower_set(space: MapSpec, s: Fraction, cap=DEFAULT_COMPONENT_CAP) -> IntervalUnion:
    """``{F∘ψ < s}`` in the given coordinates.

    In map coordinates this is the union over 1-digits ``i`` of the threshold
    word of the pattern sets ``u_1 ... u_{i-1} 0``; it needs a terminating word.
    """
    if s <= 0:
        return IntervalUnion.empty()
    if s >= 1:
        return IntervalUnion.full()
    if space.is_gap_factor:
        return IntervalUnion(((Fraction(0), s),))
    word = F_inverse(s, space, MAP_DEPTH_LIMIT * 4)
    if word.tail is None:
        raise DepthExhausted(f"threshold {s} has no finite gap word; use gap coordinates")
    pieces = []
    for i in word.one_positions():
        pieces.extend(pattern_set(space, word.bits[: i - 1] + (0,), cap=cap).intervals)
    return IntervalUnion(pieces, cap=cap)


def lambda_set(space: MapSpec, j: int, cap=DEFAULT_COMPONENT_CAP) -> IntervalUnion:
    if space.is_gap_factor:
        return IntervalUnion(((Fraction(0), space.lam**j),))
    return pattern_set(space, (0,) * j, cap=cap)


def exceedance_set(scales: Scales, spec: MapSpec, coords: str = "auto", cap=DEFAULT_COMPONENT_CAP) -> ExceedanceDecomposition:
    """Decompose ``U_n(τ) = {F∘ψ < τ/n}`` into the core ``Λ_j`` and the fringe."""
    s = scales.threshold
    if not 0 < s <= 1:
        raise ValueError(f"need 0 < tau/n <= 1, got {s}")
    space = _working_space(spec, s, coords)
    lam = space.lam
    full = lower_set(space, s, cap)
    if s == 1:
        j, levels = 1, (1,)
    else:
        levels = tuple(j_n_tau(scales, spec, max_levels=8))
        j = levels[0]
    core = lambda_set(space, j, cap)
    fringe = full - core
    shell = lam ** (j - 1) * (1 - lam)
    return ExceedanceDecomposition(full, core, fringe, levels, fringe.measure / shell, space, s)


def q_run_set(U: ExceedanceDecomposition, q: int, cap=DEFAULT_COMPONENT_CAP) -> IntervalUnion:
    """``U ∩ G^{-1}U^c ∩ ... ∩ G^{-q}U^c``: exceedances that end a q-run."""
    if q < 0:
        raise ValueError("q must be >= 0")
    return q_run_of(U.full_set, q, U.space, cap)


def q_run_of(B: IntervalUnion, q: int, space: MapSpec, cap=DEFAULT_COMPONENT_CAP) -> IntervalUnion:
    out = B
    back = B.complement()
    for _ in range(q):
        back = preimage(space, back, cap=cap)
        out = out & back
    return out


def theta_exact(scales: Scales, spec: MapSpec, coords: str = "auto") -> Fraction:
    """``m(U^{(1)}) / m(U)``, the finite-n extremal index."""
    U = exceedance_set(scales, spec, coords)
    return q_run_set(U, 1).measure / U.full_set.measure


# ---------------------------------------------------------------------------
# cylinder approximations


def _left_end(space: MapSpec, x: Fraction, depth: int):
    """(left end, right end, x is a cylinder boundary) for the cylinder at x."""
    c = cylinder_of(space, x, depth)
    return c.left, c.right, c.offset == 0


def cylinder_approx(A: IntervalUnion, depth: int, side: str, spec: MapSpec) -> IntervalUnion:
    """Union of depth-``depth`` cylinders meeting A (outer) or inside A (inner).

    Cylinders tile [0, 1) in order, so each component ``[a, b)`` only needs the
    cylinders at ``a`` and just left of ``b``.
    """
    if depth < 1:
        raise ValueError("depth must be >= 1")
    if side not in ("outer", "inner"):
        raise ValueError("side must be 'outer' or 'inner'")
    pieces = []
    for a, b in A.intervals:
        a_left, a_right, a_edge = _left_end(spec, a, depth)
        if b == 1:
            b_left, b_right, b_edge = Fraction(1), Fraction(1), True
        else:
            b_left, b_right, b_edge = _left_end(spec, b, depth)
        if side == "outer":
            pieces.append((a_left, b if b_edge else b_right))
        else:
            lo = a if a_edge else a_right
            hi = b if b_edge else b_left
            if lo < hi:
                pieces.append((lo, hi))
    return IntervalUnion(pieces, cap=None)


def boundary_cylinders(A: IntervalUnion, depth: int, spec: MapSpec) -> list:
    """Depth-``depth`` cylinders that meet A without being contained in it."""
    seen = {}
    for x in A.boundary_points():
        if x == 1:
            continue
        c = cylinder_of(spec, x, depth)
        if c.offset != 0:
            seen[c.left] = c
    out = []
    for c in seen.values():
        part = A & IntervalUnion(((c.left, c.right),), cap=None)
        if 0 < part.measure < c.width:
            out.append((c, part))
    return sorted(out, key=lambda cp: cp[0].left)


def return_measure(A: IntervalUnion, B: IntervalUnion, j: int, spec: MapSpec) -> Fraction:
    """Exact ``m(A ∩ G^{-j} B)`` without forming ``G^{-j} B``.

    On a depth-j cylinder ``c`` the map ``G^j`` is affine onto [0, 1).  Full
    cylinders inside A contribute ``m(c) m(B)``; a partial cylinder contributes
    ``m(c) m(B ∩ G^j(A ∩ c))``.
    """
    if j == 0:
        return (A & B).measure
    inner = cylinder_approx(A, j, "inner", spec)
    total = inner.measure * B.measure
    for c, part in boundary_cylinders(A, j, spec):
        image = IntervalUnion((((a - c.left) / c.width, (b - c.left) / c.width) for a, b in part.intervals), cap=None)
        total += c.width * (image & B).measure
    return total


def band_target(scales: Scales, tau_lo, tau_hi, spec: MapSpec, coords: str = "auto"):
    """``B^{(1)}`` for ``B = U_n(τ_hi) ∖ U_n(τ_lo)`` and the space it lives in."""
    lo, hi = as_tau(tau_lo), as_tau(tau_hi)
    if not lo < hi:
        raise ValueError("need tau_lo < tau_hi")
    s_lo, s_hi = lo / scales.n, hi / scales.n
    space = spec.gap_factor() if coords == "gap" else _band_space(spec, s_lo, s_hi, coords)
    band = lower_set(space, s_hi) - lower_set(space, s_lo)
    return q_run_of(band, 1, space), space


def _band_space(spec, s_lo, s_hi, coords):
    a = _working_space(spec, s_lo, coords)
    b = _working_space(spec, s_hi, coords)
    return a if a is b else spec.gap_factor()


def approximation_depth(scales: Scales, tau_hi, spec: MapSpec) -> int:
    return 2 * first_level(scales.with_tau(tau_hi), spec)


def approx_pair(scales: Scales, tau_lo, tau_hi, spec: MapSpec, coords: str = "auto", depth: Optional[int] = None) -> ApproxPair:
    target, space = band_target(scales, tau_lo, tau_hi, spec, coords)
    d = approximation_depth(scales, tau_hi, spec) if depth is None else depth
    outer = cylinder_approx(target, d, "outer", space)
    inner = cylinder_approx(target, d, "inner", space)
    rho = (outer - inner).measure / target.measure if target.measure else Fraction(0)
    return ApproxPair(outer, inner, target, d, rho, space)


def rho_ratio(scales: Scales, tau_lo, tau_hi, spec: MapSpec, coords: str = "auto") -> Fraction:
    """``m(Γ⁺ ∖ Γ⁻) / m(target)`` at depth ``2 j_{n,τ_hi}``."""
    return approx_pair(scales, tau_lo, tau_hi, spec, coords).rho


def short_return_sum(
    scales: Scales,
    tau_lo,
    tau_hi,
    spec: MapSpec,
    j_max: int,
    j_min: int = 2,
    coords: str = "auto",
) -> ShortReturnResult:
    """``n Σ_{j=j_min}^{j_max} m(Γ⁺ ∩ G^{-j} Γ⁺)`` with exact terms."""
    if j_max > scales.r_n:
        raise ValueError(f"j_max={j_max} exceeds the block length r_n={scales.r_n}")
    coarsened = False
    try:
        pair = approx_pair(scales, tau_lo, tau_hi, spec, coords)
    except ComponentCapExceeded:
        pair = approx_pair(scales, tau_lo, tau_hi, spec, "gap")
        coarsened = True
    terms = tuple(return_measure(pair.outer, pair.outer, j, pair.space) for j in range(j_min, j_max + 1))
    value = scales.n * math.fsum(float(t) for t in terms)
    return ShortReturnResult(value, terms, j_min, j_max, pair.depth, coarsened)

"""Rare-events point processes, partial-sum paths and their decorated limits.

The limit decoration of this system is geometric: a cluster with minimal
normalised entry ``U`` has entries ``U (1-θ)^{-j}`` for ``j >= 0`` and nothing
before its anchor.  In the jump scale that is ``U^{-1/α} r^j`` with
``r = (1-θ)^{1/α}``.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy import integrate

from .errors import QuadratureDisagreement
from .observable import Scales, check_alpha

DEFAULT_MARK_MAX = 1e4
SNAP = 1e-9


# ---------------------------------------------------------------------------
# paths


@dataclass(frozen=True, eq=False)
class StepPath:
    """``t -> Σ_{T_i <= t} size_i - slope * t`` on ``[0, horizon]``."""

    times: np.ndarray
    sizes: np.ndarray
    slope: float = 0.0
    horizon: float = 1.0
    _cum: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        t = np.asarray(self.times, dtype=np.float64)
        z = np.asarray(self.sizes, dtype=np.float64)
        if t.shape != z.shape:
            raise ValueError("times and sizes must have the same length")
        if t.size > 1 and np.any(np.diff(t) <= 0):
            raise ValueError("jump times must be strictly increasing")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "sizes", z)
        object.__setattr__(self, "_cum", np.concatenate([[0.0], np.cumsum(z)]))

    def __call__(self, t):
        t = np.asarray(t, dtype=np.float64)
        k = np.searchsorted(self.times, t, side="right")
        return self._cum[k] - self.slope * t

    def left_limit(self, t):
        k = np.searchsorted(self.times, np.asarray(t, dtype=np.float64), side="left")
        return self._cum[k] - self.slope * np.asarray(t, dtype=np.float64)

    @property
    def terminal(self) -> float:
        return float(self(self.horizon))

    def grid(self, points: int = 201) -> tuple[np.ndarray, np.ndarray]:
        t = np.linspace(0.0, self.horizon, points)
        return t, self(t)

    def to_csv(self, path, points: int = 201) -> None:
        t, v = self.grid(points)
        write_csv(path, ("t", "value"), zip(t.tolist(), v.tolist()))


def write_csv(path, header: Sequence[str], rows: Iterable) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\r\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(x) if isinstance(x, float) else x for x in row])


def partial_sum_path(stream, scales: Scales) -> StepPath:
    """``S_n(t) = Σ_{i < nt} X_i / a_n - t c_n`` from the first n values of a stream."""
    n = scales.n
    if len(stream) < n:
        raise ValueError(f"stream has {len(stream)} values, need n={n}")
    log_an = math.log(n) / scales.alpha
    sizes = np.exp(stream.log_x[:n] - log_an)
    times = np.arange(1, n + 1) / n
    return StepPath(times, sizes, slope=scales.c_n, horizon=1.0)


def partial_sum_terminal(log_x: np.ndarray, scales: Scales) -> float:
    """``S_n(1)`` without building the path."""
    n = scales.n
    return float(np.exp(log_x[:n] - math.log(n) / scales.alpha).sum()) - scales.c_n


# ---------------------------------------------------------------------------
# rare events point process


@dataclass(frozen=True)
class ReppPoint:
    """Block time, cluster mark (minimal entry) and the aligned profile."""

    block_time: float
    mark: float
    offsets: tuple[int, ...]
    profile: tuple[float, ...]

    def to_json(self) -> str:
        return json.dumps({"block_time": self.block_time, "mark": self.mark, "offsets": list(self.offsets), "profile": list(self.profile)})


@dataclass(frozen=True)
class ReppMeasure:
    points: tuple[ReppPoint, ...]
    n: int
    k_n: int
    r_n: int
    cutoff: float
    horizon: float

    def count_below(self, tau: float) -> int:
        return sum(1 for p in self.points if p.mark <= tau)

    def write_jsonl(self, path) -> None:
        with open(path, "w") as fh:
            for p in self.points:
                fh.write(p.to_json() + "\n")


def build_repp(stream, scales: Scales, cutoff: float) -> ReppMeasure:
    """One point per block of length ``r_n`` that has an entry ``n s_t <= cutoff``.

    A profile keeps the entries below the cutoff, divided by the block minimum
    and indexed by their offset from the argmin.
    """
    k, r = scales.k_n, scales.r_n
    if len(stream) < k * r:
        raise ValueError(f"stream shorter than k_n r_n = {k * r}")
    blocks = len(stream) // r
    vals = stream.normalised[: blocks * r].reshape(blocks, r)
    points = []
    for i in np.flatnonzero(vals.min(axis=1) <= cutoff):
        row = vals[i]
        idx = np.flatnonzero(row <= cutoff)
        m = int(idx[np.argmin(row[idx])])
        points.append(ReppPoint((i + 1) / k, float(row[m]), tuple(int(j - m) for j in idx), tuple(float(row[j] / row[m]) for j in idx)))
    return ReppMeasure(tuple(points), scales.n, k, r, float(cutoff), blocks / k)


def profile_is_geometric(point: ReppPoint, lam: float, tol: float = 1e-6) -> bool:
    """Every profile entry is ``λ^{-j}`` for some integer ``j >= 0``."""
    j = np.log(np.asarray(point.profile)) / -math.log(lam)
    return bool(np.all(np.abs(j - np.round(j)) <= tol) and np.all(np.round(j) >= 0))


# ---------------------------------------------------------------------------
# decorated Poisson process


@dataclass(frozen=True)
class DecoratedPoint:
    """Limit point ``(T, U)``; with ``profile=None`` the decoration is ``(1-θ)^{-j}``."""

    time: float
    mark: float
    theta: float
    profile: Optional[tuple[float, ...]] = None

    def decoration(self, terms: int) -> np.ndarray:
        if self.profile is not None:
            return np.asarray(self.profile[:terms])
        if self.theta >= 1:
            # a single entry; the rest sit at infinity
            return np.concatenate([[1.0], np.full(max(terms - 1, 0), np.inf)])
        return (1 - self.theta) ** -np.arange(terms, dtype=np.float64)

    def count_below(self, tau: float) -> int:
        """Decoration entries ``U (1-θ)^{-j} <= τ``."""
        if self.mark > tau:
            return 0
        if self.theta >= 1:
            return 1
        return int(math.floor(math.log(tau / self.mark) / -math.log(1 - self.theta) + SNAP)) + 1


def simulate_limit_N(theta, horizon: float, mark_max: float, seed) -> list[DecoratedPoint]:
    """Poisson points of intensity ``θ dt du`` on ``[0, horizon] × [0, mark_max]``."""
    theta = float(theta)
    if not 0 < theta <= 1:
        raise ValueError("theta must lie in (0, 1]")
    rng = np.random.default_rng(seed)
    if horizon <= 0:
        return []
    count = rng.poisson(theta * horizon * mark_max)
    t = np.sort(rng.uniform(0.0, horizon, count))
    u = rng.uniform(0.0, mark_max, count)
    return [DecoratedPoint(float(a), float(b), theta) for a, b in zip(t, u)]


def decoration_ratio(theta, alpha) -> float:
    """``(1-θ)^{1/α}``, the per-step factor of the jump-scale decoration."""
    return float(1 - theta) ** (1 / float(alpha))


def cluster_factor(theta, alpha) -> float:
    """``Σ_{j>=0} (1-θ)^{j/α} = 1 / (1 - (1-θ)^{1/α})``."""
    return 1.0 / (1.0 - decoration_ratio(theta, alpha))


def decoration_moment(theta, alpha) -> float:
    """``E((Σ_j Q_j)^α)`` for the deterministic geometric decoration."""
    a = float(alpha)
    if not 0 < a < 2:
        raise ValueError("alpha must lie in (0, 2)")
    if not 0 < float(theta) <= 1:
        raise ValueError("theta must lie in (0, 1]")
    return cluster_factor(theta, a) ** a


@dataclass(frozen=True, eq=False)
class LimitPath:
    path: StepPath
    points: tuple[DecoratedPoint, ...]
    truncation_mean: float          # expected mass dropped by the mark window
    epsilon: Optional[float] = None


def simulate_V(theta, alpha, horizon: float, seed, mark_max: float = DEFAULT_MARK_MAX) -> LimitPath:
    """``V(t) = Σ_{T_i <= t} U_i^{-1/α} / (1 - (1-θ)^{1/α})`` for ``0 < α < 1``."""
    a = check_alpha(alpha)
    if a >= 1:
        raise ValueError("simulate_V needs alpha < 1; use simulate_V_compensated")
    pts = simulate_limit_N(theta, horizon, mark_max, seed)
    c = cluster_factor(theta, a)
    times = np.array([p.time for p in pts])
    sizes = np.array([p.mark ** (-1 / a) * c for p in pts])
    # θ c ∫_{M}^{∞} u^{-1/α} du per unit time
    tail = float(theta) * c * mark_max ** (1 - 1 / a) / (1 / a - 1) * max(horizon, 0.0)
    return LimitPath(StepPath(times, sizes, 0.0, max(horizon, 0.0)), tuple(pts), tail)


def V_terminal_samples(theta, alpha, count: int, seed, mark_max: float = DEFAULT_MARK_MAX) -> np.ndarray:
    """``count`` independent draws of ``V(1)`` (α < 1), vectorised."""
    a = check_alpha(alpha)
    rng = np.random.default_rng(seed)
    k = rng.poisson(float(theta) * mark_max, count)
    u = rng.uniform(0.0, mark_max, int(k.sum()))
    owner = np.repeat(np.arange(count), k)
    return np.bincount(owner, weights=u ** (-1 / a), minlength=count) * cluster_factor(theta, a)


def compensator_closed_form(theta, alpha, epsilon) -> float:
    """``θ ∫ E(y Σ_j Q_j 1{ε < y Q_j <= 1}) d(-y^{-α})`` for ``Q_j = (1-θ)^{j/α}``.

    Each j contributes ``α/(α-1) Q_j^α (ε^{1-α} - 1)`` and ``Σ_j Q_j^α = 1/θ``,
    so θ cancels.
    """
    a = float(alpha)
    if not 1 < a < 2:
        raise ValueError("compensator needs alpha in (1, 2)")
    if epsilon >= 1:
        return 0.0
    return a / (a - 1) * (epsilon ** (1 - a) - 1)


def compensator_quadrature(theta, alpha, epsilon, terms: Optional[int] = None) -> float:
    """Same drift by per-j quadrature of ``y α y^{-α-1}`` over ``ε/Q_j < y <= 1/Q_j``."""
    a, th = float(alpha), float(theta)
    if epsilon >= 1:
        return 0.0
    r = decoration_ratio(th, a)
    if terms is None:
        # Q_j^α = (1-θ)^j; stop once the neglected tail is below 1e-16 of the total
        terms = 1 if th >= 1 else int(math.ceil(math.log(1e-16 * th) / math.log(1 - th))) + 1
    total = 0.0
    for j in range(terms):
        q = r**j
        val, _ = integrate.quad(lambda y: y * a * y ** (-a - 1), epsilon / q, 1 / q, epsabs=0, epsrel=1e-13, limit=200)
        total += q * val
    return th * total


def check_compensator(theta, alpha, epsilon, tol: float = 1e-8) -> float:
    closed = compensator_closed_form(theta, alpha, epsilon)
    quad = compensator_quadrature(theta, alpha, epsilon)
    if abs(closed - quad) > tol * max(1.0, abs(closed)):
        raise QuadratureDisagreement(f"closed form {closed!r} vs quadrature {quad!r}")
    return closed


def simulate_V_compensated(theta, alpha, horizon: float, epsilon: float, seed, mark_max: Optional[float] = None) -> LimitPath:
    """``Σ_{T_i <= t} Σ_j U_i^{-1/α} Q_j 1{· > ε} - t · drift(ε)`` for ``1 < α < 2``.

    Jumps above ε need ``U < ε^{-α}``, which is the default mark window.
    """
    a = check_alpha(alpha)
    if a <= 1:
        raise ValueError("simulate_V_compensated needs alpha in (1, 2)")
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    M = epsilon ** (-a) if mark_max is None else mark_max
    drift = check_compensator(theta, a, epsilon)
    pts = simulate_limit_N(theta, horizon, M, seed)
    r = decoration_ratio(theta, a)
    sizes = []
    for p in pts:
        base = p.mark ** (-1 / a)
        # number of decoration terms base * r^j above ε
        m = int(math.floor(math.log(epsilon / base) / math.log(r))) + 1 if float(theta) < 1 else 1
        m = max(m, 0)
        sizes.append(base * (1 - r**m) / (1 - r) if float(theta) < 1 else base)
    times = np.array([p.time for p in pts])
    return LimitPath(StepPath(times, np.array(sizes), drift, max(horizon, 0.0)), tuple(pts), 0.0, epsilon)


# ---------------------------------------------------------------------------
# excursions


def excursion_terms(t) -> Optional[int]:
    """``⌊tan(π t / 2)⌋`` with floating noise snapped; None at t = 1 (all terms)."""
    t = float(t)
    if not 0 <= t <= 1:
        raise ValueError("t must lie in [0, 1]")
    if t == 1:
        return None
    x = math.tan(math.pi * t / 2)
    if abs(x - round(x)) < SNAP:
        x = round(x)
    return int(math.floor(x))


def _exact_reciprocal(alpha):
    inv = 1 / Fraction(alpha).limit_denominator(10**6)
    if inv.denominator == 1 and abs(float(1 / inv) - float(alpha)) < 1e-15:
        return int(inv)
    return None


def excursion(v_pre, U, theta, alpha, t):
    """``v_pre + U^{-1/α} Σ_{0 <= j <= ⌊tan(πt/2)⌋} (1-θ)^{j/α}``.

    Rational inputs with ``1/α`` an integer give an exact ``Fraction``.
    """
    m = excursion_terms(t)
    k = _exact_reciprocal(alpha)
    exact = k is not None and all(isinstance(v, (int, Fraction)) for v in (v_pre, U, theta))
    if exact:
        r = (1 - Fraction(theta)) ** k
        base = Fraction(U) ** -k
        geo = 1 / (1 - r) if m is None else (1 - r ** (m + 1)) / (1 - r)
        return Fraction(v_pre) + base * geo
    a = float(alpha)
    r = decoration_ratio(theta, a)
    base = float(U) ** (-1 / a)
    geo = 1 / (1 - r) if m is None else (1 - r ** (m + 1)) / (1 - r)
    return float(v_pre) + base * geo


def excursion_grid(v_pre, U, theta, alpha, points: int = 101) -> tuple[np.ndarray, np.ndarray]:
    t = np.linspace(0.0, 1.0, points)
    return t, np.array([float(excursion(v_pre, U, theta, alpha, float(s))) for s in t])


# ---------------------------------------------------------------------------
# distribution comparison


def ks_distance(sample_a, sample_b) -> float:
    """Two-sample Kolmogorov–Smirnov statistic ``sup |F_a - F_b|``."""
    a = np.sort(np.asarray(sample_a, dtype=np.float64))
    b = np.sort(np.asarray(sample_b, dtype=np.float64))
    if a.size == 0 or b.size == 0:
        raise ValueError("both samples must be nonempty")
    grid = np.concatenate([a, b])
    fa = np.searchsorted(a, grid, side="right") / a.size
    fb = np.searchsorted(b, grid, side="right") / b.size
    return float(np.max(np.abs(fa - fb)))

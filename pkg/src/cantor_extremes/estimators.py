"""Monte Carlo estimators over symbol streams.

A stream of i.i.d. symbols is reduced to its gap bits; a single backward pass
then gives ``s_t = F∘ψ(G^t x)`` for every t.  From ``s_t``:

* the normalised value ``u_n^{-1}(X_t) = n s_t`` (small means extreme),
* ``log X_t = -log(s_t) / α``,
* the exceedance flag, decided symbolically against the threshold word.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import _kernels
from .errors import DepthExhausted, InsufficientSample
from .map_core import MapSpec, sample_symbol_stream
from .observable import DEFAULT_DEPTH, MAX_DEPTH, F_exact, F_inverse, GapWord, Scales, cylinder_weight

DEFAULT_PAD = 256
DIVERGENCE_CUTOFF = 1e6


@dataclass(frozen=True, eq=False)
class ObservableStream:
    """Observable along one orbit segment of ``length`` steps.

    ``bits`` holds ``length + pad`` gap bits; the extra lookahead is what the
    values near the end of the window depend on.
    """

    bits: np.ndarray
    normalised: np.ndarray
    log_x: np.ndarray
    flags: np.ndarray
    scales: Scales
    threshold: GapWord
    seed: Optional[int] = None

    def __len__(self):
        return len(self.flags)

    @property
    def exceedances(self) -> int:
        return int(self.flags.sum())

    def x_over_an(self) -> np.ndarray:
        """``X_t / a_n = (n s_t)^{-1/α}``."""
        return np.exp(-np.log(self.normalised) / self.scales.alpha)


def _threshold_arrays(word: GapWord):
    bits = np.asarray(word.bits, dtype=np.uint8)
    tail = -1 if word.tail is None else int(word.tail)
    return bits, tail


def stream_from_bits(bits: np.ndarray, scales: Scales, spec: MapSpec, length: int, depth: int = DEFAULT_DEPTH, seed=None) -> ObservableStream:
    """Evaluate the observable at positions ``0..length-1`` of a gap-bit stream.

    The threshold word is deepened (doubling up to ``MAX_DEPTH``) until every
    exceedance comparison is decided.
    """
    lam = float(spec.lam)
    bits = np.ascontiguousarray(bits, dtype=np.uint8)
    s = _kernels.backward_F(bits, lam, 0.5)[:length]
    while True:
        word = F_inverse(scales.threshold, spec, depth)
        thr_bits, thr_tail = _threshold_arrays(word)
        flags, bad = _kernels.lex_flags(bits, length, thr_bits, thr_tail)
        if bad < 0:
            break
        if word.tail is None and depth < MAX_DEPTH:
            depth *= 2
            continue
        raise DepthExhausted(f"exceedance at stream position {bad} unresolved", position=bad)
    with np.errstate(divide="ignore"):
        log_x = -np.log(s) / scales.alpha
    return ObservableStream(bits, scales.n * s, log_x, flags, scales, word, seed)


def simulate_observable_stream(spec: MapSpec, scales: Scales, seed: int, length: int, pad: int = DEFAULT_PAD) -> ObservableStream:
    """Sample symbols and evaluate the observable along the orbit.

    Streams for one seed are prefixes of each other, so a longer ``pad``
    reproduces the same symbols with more lookahead.
    """
    if length < scales.r_n:
        raise ValueError(f"length {length} shorter than the block length r_n={scales.r_n}")
    while True:
        symbols = sample_symbol_stream(spec, seed, length + pad)
        bits = spec.gap_mask()[symbols.symbols].astype(np.uint8)
        try:
            return stream_from_bits(bits, scales, spec, length, seed=seed)
        except DepthExhausted:
            # a comparison may have run off the end of the lookahead
            if pad >= 8 * MAX_DEPTH:
                raise
            pad *= 2


# ---------------------------------------------------------------------------
# tail index


def hill_estimator(values=None, k: int = 0, *, log_values=None) -> float:
    """Hill estimate ``1 / mean_{i<=k} log(X_(i) / X_(k+1))``.

    Pass ``log_values`` directly when the sample overflows doubles.
    """
    if log_values is None:
        if values is None:
            raise ValueError("give values or log_values")
        v = np.asarray(values, dtype=np.float64)
        if np.any(v <= 0):
            raise ValueError("Hill estimator needs positive values")
        log_values = np.log(v)
    lv = np.asarray(log_values, dtype=np.float64)
    if not 1 <= k < lv.size:
        raise InsufficientSample(f"need 1 <= k < sample size, got k={k}, size={lv.size}")
    top = np.partition(lv, lv.size - k - 1)[lv.size - k - 1 :]
    base = top.min()
    spacing = float(np.mean(top - base)) * (k + 1) / k
    if spacing <= 0:
        raise InsufficientSample("all top order statistics are tied")
    return 1.0 / spacing


# ---------------------------------------------------------------------------
# declustering


@dataclass(frozen=True)
class ClusterRecord:
    """One run of exceedances.  ``entries`` are ``n s_t`` at exceedance times."""

    anchor_time: int
    times: tuple[int, ...]
    entries: tuple[float, ...]
    block_index: int = 0

    @property
    def size(self) -> int:
        return len(self.times)


def decluster_runs(flags, q: int = 1, normalised=None, block_length: Optional[int] = None) -> list[ClusterRecord]:
    """Group exceedances separated by fewer than ``q`` non-exceedances."""
    if q < 1:
        raise ValueError("q must be >= 1")
    flags = np.asarray(flags, dtype=bool)
    idx = np.flatnonzero(flags)
    if idx.size == 0:
        return []
    gaps = np.diff(idx) - 1
    cuts = np.flatnonzero(gaps >= q) + 1
    out = []
    for group in np.split(idx, cuts):
        times = tuple(int(t) for t in group)
        entries = tuple(float(normalised[t]) for t in group) if normalised is not None else ()
        block = times[0] // block_length if block_length else 0
        out.append(ClusterRecord(times[0], times, entries, block))
    return out


def extremal_index_runs(clusters: Sequence[ClusterRecord], total_exceedances: int) -> float:
    if total_exceedances < 100:
        raise InsufficientSample(f"{total_exceedances} exceedances, need at least 100")
    return len(clusters) / total_exceedances


def cluster_agreement(flags, q_a: int, q_b: int) -> float:
    """Fraction of q_a-clusters that are also q_b-clusters (same exceedance times)."""
    a = {c.times for c in decluster_runs(flags, q_a)}
    b = {c.times for c in decluster_runs(flags, q_b)}
    if not a:
        return 1.0
    return len(a & b) / len(a)


@dataclass(frozen=True)
class ClusterSizeReport:
    counts: np.ndarray        # counts[k-1] = number of clusters of size k, k <= kmax; last entry lumps > kmax
    empirical: np.ndarray
    geometric: np.ndarray
    tv_distance: float
    mean_size: float
    target_mean: float
    n_clusters: int


def geometric_pmf(theta: float, kmax: int) -> np.ndarray:
    """``θ(1-θ)^{k-1}`` for k = 1..kmax followed by the lumped tail ``P(size > kmax)``."""
    k = np.arange(1, kmax + 1)
    p = theta * (1 - theta) ** (k - 1)
    return np.append(p, (1 - theta) ** kmax)


def cluster_size_distribution(clusters: Sequence[ClusterRecord], theta, kmax: int = 10, min_clusters: int = 1000) -> ClusterSizeReport:
    """Histogram of cluster sizes against geometric(θ), truncated at ``kmax``."""
    if len(clusters) < min_clusters:
        raise InsufficientSample(f"{len(clusters)} clusters, need at least {min_clusters}")
    sizes = np.array([c.size for c in clusters])
    counts = np.bincount(np.minimum(sizes, kmax + 1), minlength=kmax + 2)[1:]
    emp = counts / sizes.size
    geo = geometric_pmf(float(theta), kmax)
    tv = 0.5 * float(np.abs(emp - geo).sum())
    return ClusterSizeReport(counts, emp, geo, tv, float(sizes.mean()), 1 / float(theta), int(sizes.size))


# ---------------------------------------------------------------------------
# anchored tail process


@dataclass(frozen=True)
class PolarPair:
    l_z: float
    q_profile: tuple[float, ...]


def polar_decompose(cluster: ClusterRecord) -> PolarPair:
    e = np.asarray(cluster.entries, dtype=np.float64)
    if e.size == 0 or np.any(e <= 0):
        raise ValueError("entries must be nonempty and positive")
    m = float(e.min())
    return PolarPair(m, tuple(float(v) for v in e / m))


@dataclass(frozen=True)
class TailProcessReport:
    lags: tuple[int, ...]
    ratios: dict = field(repr=False)            # lag -> array of ratios
    match_fraction: dict                        # forward lag -> fraction equal to λ^{-j}
    divergent_fraction: dict                    # backward lag -> fraction above the cutoff
    n_anchors: int
    tolerance: float
    cutoff: float


def anchor_times(flags, window: int) -> np.ndarray:
    """Exceedances with no exceedance in the preceding ``window`` indices."""
    idx = np.flatnonzero(np.asarray(flags, dtype=bool))
    if idx.size == 0:
        return idx
    prev_gap = np.diff(idx, prepend=-(window + 1))
    ok = (prev_gap > window) & (idx >= window)
    return idx[ok]


def anchored_ratios(normalised: np.ndarray, anchors: np.ndarray, lags: Sequence[int]) -> dict:
    out = {}
    for j in lags:
        pos = anchors + j
        keep = (pos >= 0) & (pos < normalised.size)
        out[j] = normalised[pos[keep]] / normalised[anchors[keep]]
    return out


def tail_report_from_ratios(ratios: dict, lam: float, n_anchors: int, tolerance=1e-9, cutoff=DIVERGENCE_CUTOFF) -> TailProcessReport:
    match, diverge = {}, {}
    for j, r in ratios.items():
        if r.size == 0:
            continue
        if j > 0:
            target = lam ** (-j)
            match[j] = float(np.mean(np.abs(r - target) <= tolerance * target))
        elif j < 0:
            diverge[j] = float(np.mean(r > cutoff))
    return TailProcessReport(tuple(sorted(ratios)), ratios, match, diverge, n_anchors, tolerance, cutoff)


def anchored_tail_report(
    stream: ObservableStream,
    spec: MapSpec,
    lags: Sequence[int] = (-3, -2, -1, 1, 2, 3),
    window: Optional[int] = None,
    tolerance: float = 1e-9,
    cutoff: float = DIVERGENCE_CUTOFF,
    min_anchors: int = 50,
) -> TailProcessReport:
    """Ratios ``n s_{t+j} / n s_t`` around anchored exceedances of a stream.

    An anchor is an exceedance with none in the previous ``window`` indices
    (default ``r_n``).
    """
    W = stream.scales.r_n if window is None else window
    if max(abs(j) for j in lags) > stream.scales.r_n:
        raise ValueError("lags must stay within the block length r_n")
    anchors = anchor_times(stream.flags, W)
    if anchors.size < min_anchors:
        raise InsufficientSample(f"{anchors.size} anchored clusters, need {min_anchors}")
    ratios = anchored_ratios(stream.normalised, anchors, lags)
    return tail_report_from_ratios(ratios, float(spec.lam), int(anchors.size), tolerance, cutoff)


class ExceedanceSuffixSampler:
    """Gap bits ``b_t b_{t+1} ...`` drawn from the law conditioned on ``b < threshold``.

    ``{b < u}`` is the disjoint union over 1-digits i of ``u`` of the patterns
    ``u_1 ... u_{i-1} 0``; a pattern is picked with probability proportional
    to its measure and the remaining bits are i.i.d.  A non-terminating
    threshold is cut where the unlisted patterns carry relative mass below
    ``1e-12``.
    """

    def __init__(self, spec: MapSpec, threshold: GapWord):
        if threshold.tail == 1:
            raise ValueError("threshold 1 is not a rare event")
        if threshold.tail is None and float(cylinder_weight(threshold, spec) / F_exact(threshold, spec)) > 1e-12:
            raise DepthExhausted("threshold word too short for conditioned sampling")
        self.lam = float(spec.lam)
        self.threshold = threshold
        self.ones = np.asarray(threshold.one_positions(), dtype=np.int64)
        log_lam, log_gap = math.log(self.lam), math.log1p(-self.lam)
        bits = np.asarray(threshold.bits, dtype=np.int64)
        ones_before = np.concatenate([[0], np.cumsum(bits)])[self.ones - 1]
        zeros_before = (self.ones - 1) - ones_before
        logw = (zeros_before + 1) * log_lam + ones_before * log_gap
        w = np.exp(logw - logw.max())
        self.prob = w / w.sum()

    def sample(self, length: int, rng: np.random.Generator) -> np.ndarray:
        i = int(self.ones[rng.choice(self.ones.size, p=self.prob)])
        head = np.append(np.asarray(self.threshold.bits[: i - 1], dtype=np.uint8), np.uint8(0))
        rest = (rng.random(max(length - head.size, 0)) >= self.lam).astype(np.uint8)
        return np.concatenate([head, rest])


@dataclass(frozen=True)
class ConditionedWindows:
    """Normalised values around anchored exceedances sampled by conditioning."""

    normalised: np.ndarray       # shape (count, before + after + 1); column `before` is the anchor
    before: int
    attempts: int


def sample_anchored_windows(
    spec: MapSpec,
    scales: Scales,
    count: int,
    seed: int,
    before: int = 3,
    after: int = 3,
    window: Optional[int] = None,
    pad: int = DEFAULT_PAD,
    depth: int = 512,
) -> ConditionedWindows:
    """Exact samples of the stream around an anchored exceedance at large n.

    The past is i.i.d. (the exceedance event only constrains the future), the
    future is drawn from the conditioned law, and windows with an earlier
    exceedance inside the anchoring window are rejected.
    """
    W = max(min(scales.r_n, 4096) if window is None else window, before)
    rng = np.random.default_rng(seed)
    threshold = F_inverse(scales.threshold, spec, depth)
    sampler = ExceedanceSuffixSampler(spec, threshold)
    thr_bits, thr_tail = _threshold_arrays(threshold)
    lam = float(spec.lam)
    rows, attempts = [], 0
    while len(rows) < count:
        attempts += 1
        past = (rng.random(W) >= lam).astype(np.uint8)
        future = sampler.sample(after + 1 + pad + depth, rng)
        bits = np.concatenate([past, future])
        flags, bad = _kernels.lex_flags(bits, W + after + 1, thr_bits, thr_tail)
        if bad >= 0:
            raise DepthExhausted(f"window comparison unresolved at offset {bad}", position=bad)
        if flags[:W].any() or not flags[W]:
            continue
        s = _kernels.backward_F(bits[W - before :], lam, 0.5)[: before + after + 1]
        rows.append(scales.n * s)
    return ConditionedWindows(np.array(rows), before, attempts)


def windows_tail_report(win: ConditionedWindows, spec: MapSpec, tolerance=1e-9, cutoff=DIVERGENCE_CUTOFF) -> TailProcessReport:
    anchor = win.normalised[:, win.before]
    width = win.normalised.shape[1]
    ratios = {j - win.before: win.normalised[:, j] / anchor for j in range(width) if j != win.before}
    return tail_report_from_ratios(ratios, float(spec.lam), win.normalised.shape[0], tolerance, cutoff)


def symbolic_forward_exact(bits: np.ndarray, anchor: int, j: int) -> bool:
    """Forward ratio is exactly ``λ^{-j}`` iff ``b_t ... b_{t+j-1}`` are all 0."""
    return not bits[anchor : anchor + j].any()


# ---------------------------------------------------------------------------
# small jumps


@dataclass(frozen=True)
class SmallJumpsReport:
    epsilons: tuple[float, ...]
    values: tuple[float, ...]
    lag_max: int
    length: int


def smalljumps_from_x(x: np.ndarray, n: int, alpha: float, epsilons: Sequence[float], lag_max: int) -> SmallJumpsReport:
    """``(n / a_n^2) Σ_{j=1}^{lag_max} max(0, Ê(Y_1 Y_j))`` per ε.

    ``Y_j = X_j 1{X_j <= ε a_n} - mean`` with the mean taken along the sample
    (an ergodic average).  Lag j = 1 is the variance term.
    """
    if x.size < 10 * lag_max:
        raise InsufficientSample(f"stream of {x.size} values is too short for lag_max={lag_max}")
    a_n = n ** (1 / alpha)
    vals = []
    for eps in epsilons:
        cut = eps * a_n
        mean = float(np.mean(np.where(x <= cut, x, 0.0)))
        cov = _kernels.truncated_lag_products(x, cut, mean, lag_max)
        vals.append(n / a_n**2 * float(np.maximum(cov, 0.0).sum()))
    return SmallJumpsReport(tuple(float(e) for e in epsilons), tuple(vals), lag_max, int(x.size))


def smalljumps_diagnostic(
    spec: MapSpec,
    scales: Scales,
    epsilons: Sequence[float],
    lag_max: Optional[int] = None,
    seed: int = 0,
    length: int = 10**6,
    b: float = 2.0,
) -> SmallJumpsReport:
    alpha = scales.alpha
    if not 1 < alpha < 2:
        raise ValueError("small-jumps diagnostic needs alpha in (1, 2)")
    limit = int(b * math.log(scales.n))
    lag = limit if lag_max is None else lag_max
    if lag > limit:
        raise ValueError(f"lag_max={lag} exceeds b log n = {limit}")
    stream = simulate_observable_stream(spec, scales, seed, max(length, scales.r_n))
    return smalljumps_from_x(np.exp(stream.log_x), scales.n, alpha, epsilons, lag)

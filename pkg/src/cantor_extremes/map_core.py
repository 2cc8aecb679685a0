"""Full-branched piecewise-linear Markov maps, their coding, and Λ_n.

Branch domains follow one boundary convention: every branch is ``[left, right)``
except the last, which is ``[left, 1]``.  A shared endpoint therefore belongs
to the right-hand branch, which makes :func:`encode` total.

Branches are orientation preserving, ``x -> (x - left) * slope``.
"""
from __future__ import annotations

import bisect
import json
import re
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    AdjacencyViolation,
    BranchTooWide,
    ComponentCapExceeded,
    ConfigError,
    DepthTooLarge,
    MapSpecError,
    OutOfDomain,
    OverlapOrGap,
)
from .intervals import DEFAULT_COMPONENT_CAP, IntervalUnion, as_fraction

LABELS = ("I", "J")


@dataclass(frozen=True)
class Branch:
    left: Fraction
    right: Fraction
    label: str

    @property
    def length(self) -> Fraction:
        return self.right - self.left

    @property
    def slope(self) -> Fraction:
        return 1 / self.length


@dataclass(frozen=True)
class MapSpec:
    """Validated description of the map G.  Build it with :func:`validate_map`.

    Symbols are 1-based branch indices, as in the coding ``x_i = k`` when
    ``G^{i-1}(x)`` lies in the k-th branch interval.
    """

    branches: tuple[Branch, ...]
    is_gap_factor: bool = False
    _lefts: tuple[Fraction, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_lefts", tuple(b.left for b in self.branches))

    @property
    def k_hat(self) -> int:
        return len(self.branches)

    @property
    def slopes(self) -> tuple[Fraction, ...]:
        return tuple(b.slope for b in self.branches)

    @property
    def lam(self) -> Fraction:
        """Total length of the I-branches."""
        return sum((b.length for b in self.branches if b.label == "I"), Fraction(0))

    @property
    def theta(self) -> Fraction:
        return 1 - self.lam

    @property
    def i_indices(self) -> tuple[int, ...]:
        return tuple(k + 1 for k, b in enumerate(self.branches) if b.label == "I")

    @property
    def j_indices(self) -> tuple[int, ...]:
        return tuple(k + 1 for k, b in enumerate(self.branches) if b.label == "J")

    @property
    def k_i(self) -> int:
        return len(self.i_indices)

    @property
    def k_j(self) -> int:
        return len(self.j_indices)

    def gap_mask(self) -> np.ndarray:
        """Boolean lookup ``mask[symbol]`` that is True on J-branch symbols."""
        mask = np.zeros(self.k_hat + 1, dtype=bool)
        mask[list(self.j_indices)] = True
        return mask

    def branch_index(self, x: Fraction) -> int:
        """0-based index of the branch containing ``x`` (half-open convention)."""
        if x < 0 or x > 1:
            raise OutOfDomain(f"x={x} is outside [0, 1]")
        return bisect.bisect_right(self._lefts, x) - 1

    def gap_factor(self) -> "MapSpec":
        """Two-branch map ``[0, λ) -> I``, ``[λ, 1] -> J`` on the gap-word factor.

        ``F∘ψ`` semiconjugates ``G`` to this map and pushes Lebesgue measure to
        Lebesgue measure, so every set determined by the gap-indicator word has
        the same measure in both coordinates.
        """
        if self.is_gap_factor:
            return self
        lam = self.lam
        return MapSpec(
            (Branch(Fraction(0), lam, "I"), Branch(lam, Fraction(1), "J")),
            is_gap_factor=True,
        )

    def to_json(self) -> dict:
        return {
            "branches": [
                {"left": _frac_str(b.left), "right": _frac_str(b.right), "label": b.label}
                for b in self.branches
            ]
        }


def _frac_str(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}"


_RATIONAL_RE = re.compile(r"^\s*(-?\d+)\s*(?:/\s*(\d+)\s*)?$")


def parse_rational(text) -> Fraction:
    """Parse ``"p/q"`` (or a bare integer).  Raises ConfigError otherwise."""
    if isinstance(text, Fraction):
        return text
    if isinstance(text, int) and not isinstance(text, bool):
        return Fraction(text)
    if not isinstance(text, str):
        raise ConfigError(f"rational must be a 'p/q' string, got {text!r}")
    m = _RATIONAL_RE.match(text)
    if not m:
        raise ConfigError(f"malformed rational {text!r}")
    num, den = m.group(1), m.group(2)
    if den is not None and int(den) == 0:
        raise ConfigError(f"malformed rational {text!r}: zero denominator")
    return Fraction(int(num), int(den) if den is not None else 1)


def validate_map(raw: Sequence, *, max_width=Fraction(1, 2)) -> MapSpec:
    """Check a raw branch list and build a :class:`MapSpec`.

    ``raw`` holds ``(left, right, label)`` triples or mappings with those keys.
    Pass ``max_width=None`` to skip the slope >= 2 requirement.
    """
    if not raw:
        raise MapSpecError("branch list is empty")
    branches = []
    for item in raw:
        if isinstance(item, dict):
            left, right, label = item["left"], item["right"], item["label"]
        else:
            left, right, label = item
        left = parse_rational(left) if isinstance(left, str) else as_fraction(left)
        right = parse_rational(right) if isinstance(right, str) else as_fraction(right)
        label = str(label).upper()
        if label not in LABELS:
            raise MapSpecError(f"unknown branch label {label!r}")
        branches.append(Branch(left, right, label))

    if branches[0].left != 0 or branches[-1].right != 1:
        raise OverlapOrGap("branches must start at 0 and end at 1")
    for prev, nxt in zip(branches, branches[1:]):
        if prev.right != nxt.left:
            raise OverlapOrGap(f"branches [{prev.left},{prev.right}] and [{nxt.left},{nxt.right}] do not tile")
    for b in branches:
        if b.length <= 0:
            raise OverlapOrGap(f"branch [{b.left},{b.right}] is empty or reversed")
        if max_width is not None and b.length > max_width:
            raise BranchTooWide(f"branch [{b.left},{b.right}] is wider than {max_width}")
    for prev, nxt in zip(branches, branches[1:]):
        if prev.label == nxt.label:
            raise AdjacencyViolation(f"two adjacent {prev.label}-branches at {prev.right}")

    spec = MapSpec(tuple(branches))
    total = sum((1 / s for s in spec.slopes), Fraction(0))
    assert total == 1
    if not 0 < spec.lam < 1:
        raise MapSpecError("need at least one I-branch and one J-branch")
    return spec


def load_map(path) -> MapSpec:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read map spec {path}: {exc}") from exc
    return map_from_json(doc)


def map_from_json(doc: dict) -> MapSpec:
    if not isinstance(doc, dict) or set(doc) != {"branches"}:
        raise ConfigError("map spec must be an object with a single 'branches' key")
    raw = []
    for i, b in enumerate(doc["branches"]):
        if not isinstance(b, dict) or set(b) != {"left", "right", "label"}:
            raise ConfigError(f"branches[{i}] must have exactly left/right/label")
        try:
            raw.append((parse_rational(b["left"]), parse_rational(b["right"]), b["label"]))
        except ConfigError as exc:
            raise ConfigError(f"branches[{i}]: {exc}") from exc
    return validate_map(raw)


TERNARY = validate_map([("0", "1/3", "I"), ("1/3", "2/3", "J"), ("2/3", "1", "I")])


# ---------------------------------------------------------------------------
# dynamics and coding


@dataclass(frozen=True, eq=False)
class SymbolWord:
    """Finite coding word; entries are 1-based branch indices."""

    symbols: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.symbols, dtype=np.uint8)
        arr.setflags(write=False)
        object.__setattr__(self, "symbols", arr)

    def __len__(self):
        return len(self.symbols)

    def __eq__(self, other):
        return isinstance(other, SymbolWord) and np.array_equal(self.symbols, other.symbols)

    def __repr__(self):
        if len(self) <= 16:
            return f"SymbolWord({tuple(int(s) for s in self.symbols)})"
        return f"SymbolWord(<{len(self)} symbols>)"

    def as_tuple(self) -> tuple[int, ...]:
        return tuple(int(s) for s in self.symbols)

    def shift(self, k: int = 1) -> "SymbolWord":
        return SymbolWord(self.symbols[k:])

    def is_prefix_of(self, other: "SymbolWord") -> bool:
        return len(self) <= len(other) and np.array_equal(self.symbols, other.symbols[: len(self)])


def apply_map(spec: MapSpec, x) -> Fraction:
    x = as_fraction(x)
    b = spec.branches[spec.branch_index(x)]
    return (x - b.left) * b.slope


def encode(spec: MapSpec, x, depth: int) -> SymbolWord:
    if depth < 1:
        raise ValueError("depth must be >= 1")
    x = as_fraction(x)
    out = []
    for _ in range(depth):
        k = spec.branch_index(x)
        out.append(k + 1)
        b = spec.branches[k]
        x = (x - b.left) * b.slope
    return SymbolWord(out)


def eventual_orbit(spec: MapSpec, x, max_steps: int = 4096):
    """Exact symbolic orbit of a rational point as ``(prefix, cycle)``.

    Rational orbits either enter a cycle or grow their denominators; ``None``
    is returned when no cycle appears within ``max_steps`` iterates.
    """
    x = as_fraction(x)
    seen = {}
    symbols = []
    for step in range(max_steps):
        if x in seen:
            start = seen[x]
            return tuple(symbols[:start]), tuple(symbols[start:])
        seen[x] = step
        k = spec.branch_index(x)
        symbols.append(k + 1)
        b = spec.branches[k]
        x = (x - b.left) * b.slope
    return None


def sample_symbol_stream(spec: MapSpec, seed: int, length: int) -> SymbolWord:
    """I.i.d. symbols with P(k) = |branch k|, the Lebesgue law of the coding.

    One uniform double is consumed per symbol, so streams for the same seed are
    prefixes of one another.
    """
    if length <= 0:
        return SymbolWord(np.zeros(0, dtype=np.uint8))
    rng = np.random.default_rng(seed)
    cum = np.cumsum([float(b.length) for b in spec.branches])[:-1]
    idx = np.searchsorted(cum, rng.random(length), side="right") + 1
    return SymbolWord(idx.astype(np.uint8))


# ---------------------------------------------------------------------------
# set geometry


def pullback(spec: MapSpec, A: IntervalUnion, labels=LABELS, cap=DEFAULT_COMPONENT_CAP) -> IntervalUnion:
    """Union over branches with the given labels of ``branch^{-1}(A)``."""
    n_branches = sum(1 for b in spec.branches if b.label in labels)
    if cap is not None and len(A) * n_branches > cap:
        raise ComponentCapExceeded(f"pullback would create {len(A) * n_branches} components (cap {cap})")
    pieces = []
    for b in spec.branches:
        if b.label in labels:
            pieces.extend(A.affine_image(b.left, b.length))
    return IntervalUnion._from_sorted(pieces, cap=cap)


def preimage(spec: MapSpec, A: IntervalUnion, cap=DEFAULT_COMPONENT_CAP) -> IntervalUnion:
    return pullback(spec, A, LABELS, cap=cap)


def lambda_n(spec: MapSpec, n: int, cap=DEFAULT_COMPONENT_CAP) -> IntervalUnion:
    if n < 0:
        raise ValueError("n must be >= 0")
    if cap is not None and spec.k_i**n > cap:
        raise DepthTooLarge(f"Λ_{n} has {spec.k_i}^{n} components, above cap {cap}")
    A = IntervalUnion.full()
    for _ in range(n):
        A = pullback(spec, A, ("I",), cap=cap)
    return A


def pattern_set(spec: MapSpec, bits: Iterable[int], cap=DEFAULT_COMPONENT_CAP) -> IntervalUnion:
    """Points whose first gap-indicator bits equal ``bits`` (1 = J-branch)."""
    A = IntervalUnion.full()
    for bit in reversed(list(bits)):
        A = pullback(spec, A, ("J",) if bit else ("I",), cap=cap)
    return A


@dataclass(frozen=True)
class Cylinder:
    """Depth-``depth`` cylinder ``[left, left + width)`` containing a point.

    ``offset`` is ``G^depth`` of that point, so the point equals
    ``left + width * offset``; it sits on the cylinder's left end iff offset==0.
    """

    left: Fraction
    width: Fraction
    word: tuple[int, ...]
    offset: Fraction

    @property
    def right(self) -> Fraction:
        return self.left + self.width


def cylinder_of(spec: MapSpec, x, depth: int) -> Cylinder:
    x = as_fraction(x)
    if not 0 <= x < 1:
        raise OutOfDomain(f"cylinder lookup needs x in [0, 1), got {x}")
    left, width, y = Fraction(0), Fraction(1), x
    word = []
    for _ in range(depth):
        k = spec.branch_index(y)
        b = spec.branches[k]
        word.append(k + 1)
        left += width * b.left
        width *= b.length
        y = (y - b.left) * b.slope
    return Cylinder(left, width, tuple(word), y)


def cylinders(spec: MapSpec, depth: int, cap=DEFAULT_COMPONENT_CAP) -> list[Cylinder]:
    """Every depth-``depth`` cylinder, left to right (small depths only)."""
    if cap is not None and spec.k_hat**depth > cap:
        raise DepthTooLarge(f"{spec.k_hat}^{depth} cylinders exceed cap {cap}")
    cur = [Cylinder(Fraction(0), Fraction(1), (), Fraction(0))]
    for _ in range(depth):
        nxt = []
        for c in cur:
            for k, b in enumerate(spec.branches):
                nxt.append(Cylinder(c.left + c.width * b.left, c.width * b.length, c.word + (k + 1,), Fraction(0)))
        cur = nxt
    return cur

"""Finite unions of half-open rational intervals inside [0, 1).

All endpoints are :class:`fractions.Fraction`; nothing here touches floating
point.  Sets are kept in a normal form (sorted, disjoint, non-adjacent,
non-empty components) so structural equality is set equality.
"""
from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Sequence

from .errors import ComponentCapExceeded

DEFAULT_COMPONENT_CAP = 2**20

Rational = Fraction


def as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        return Fraction(x)
    return Fraction(x)


def _normalise(pairs: Iterable[tuple[Fraction, Fraction]]) -> tuple[tuple[Fraction, Fraction], ...]:
    """Sort, drop empties, and merge overlapping or touching pieces."""
    items = sorted((a, b) for a, b in pairs if a < b)
    out: list[list[Fraction]] = []
    for a, b in items:
        if out and a <= out[-1][1]:
            if b > out[-1][1]:
                out[-1][1] = b
        else:
            out.append([a, b])
    return tuple((a, b) for a, b in out)


def _merge_sorted(pairs: Sequence[tuple[Fraction, Fraction]]) -> tuple[tuple[Fraction, Fraction], ...]:
    # caller guarantees sorted, disjoint input; only touching pieces are fused
    out: list[list[Fraction]] = []
    for a, b in pairs:
        if a >= b:
            continue
        if out and a == out[-1][1]:
            out[-1][1] = b
        else:
            out.append([a, b])
    return tuple((a, b) for a, b in out)


class IntervalUnion:
    """Disjoint union of half-open intervals ``[p, q)`` with rational ends.

    Parameters
    ----------
    pairs : iterable of (p, q)
        Arbitrary (possibly overlapping, unsorted) pieces; they are merged.
    cap : int, optional
        Maximum number of components.  Exceeding it raises
        :class:`ComponentCapExceeded` instead of truncating.
    """

    __slots__ = ("intervals", "_measure")

    def __init__(self, pairs: Iterable = (), cap: int | None = DEFAULT_COMPONENT_CAP, *, _trusted=False):
        if _trusted:
            ivs = tuple(pairs)
        else:
            ivs = _normalise((as_fraction(a), as_fraction(b)) for a, b in pairs)
            for a, b in ivs:
                if a < 0 or b > 1:
                    raise ValueError(f"interval [{a}, {b}) leaves [0, 1]")
        if cap is not None and len(ivs) > cap:
            raise ComponentCapExceeded(f"{len(ivs)} components exceed cap {cap}")
        self.intervals = ivs
        self._measure = None

    @classmethod
    def _from_sorted(cls, pairs, cap=DEFAULT_COMPONENT_CAP):
        return cls(_merge_sorted(pairs), cap=cap, _trusted=True)

    @classmethod
    def empty(cls) -> "IntervalUnion":
        return cls((), _trusted=True)

    @classmethod
    def full(cls) -> "IntervalUnion":
        return cls(((Fraction(0), Fraction(1)),), _trusted=True)

    @property
    def measure(self) -> Fraction:
        if self._measure is None:
            self._measure = sum((b - a for a, b in self.intervals), Fraction(0))
        return self._measure

    def __len__(self):
        return len(self.intervals)

    def __iter__(self):
        return iter(self.intervals)

    def __bool__(self):
        return bool(self.intervals)

    def __eq__(self, other):
        if not isinstance(other, IntervalUnion):
            return NotImplemented
        return self.intervals == other.intervals

    def __hash__(self):
        return hash(self.intervals)

    def __repr__(self):
        if len(self.intervals) > 6:
            head = ", ".join(f"[{a}, {b})" for a, b in self.intervals[:3])
            return f"IntervalUnion({head}, ... {len(self.intervals)} components, measure={self.measure})"
        body = ", ".join(f"[{a}, {b})" for a, b in self.intervals)
        return f"IntervalUnion({body})"

    def contains(self, x) -> bool:
        x = as_fraction(x)
        lo, hi = 0, len(self.intervals)
        while lo < hi:
            mid = (lo + hi) // 2
            a, b = self.intervals[mid]
            if x < a:
                hi = mid
            elif x >= b:
                lo = mid + 1
            else:
                return True
        return False

    def _sweep(self, other: "IntervalUnion", keep) -> "IntervalUnion":
        points = sorted({p for iv in self.intervals for p in iv} | {p for iv in other.intervals for p in iv})
        out = []
        i = j = 0
        A, B = self.intervals, other.intervals
        for lo, hi in zip(points, points[1:]):
            while i < len(A) and A[i][1] <= lo:
                i += 1
            while j < len(B) and B[j][1] <= lo:
                j += 1
            in_a = i < len(A) and A[i][0] <= lo
            in_b = j < len(B) and B[j][0] <= lo
            if keep(in_a, in_b):
                out.append((lo, hi))
        return IntervalUnion._from_sorted(out, cap=None)

    def union(self, other):
        return self._sweep(other, lambda a, b: a or b)

    def intersection(self, other):
        return self._sweep(other, lambda a, b: a and b)

    def difference(self, other):
        return self._sweep(other, lambda a, b: a and not b)

    def symmetric_difference(self, other):
        return self._sweep(other, lambda a, b: a != b)

    __or__ = union
    __and__ = intersection
    __sub__ = difference
    __xor__ = symmetric_difference

    def complement(self) -> "IntervalUnion":
        return IntervalUnion.full().difference(self)

    def issubset(self, other: "IntervalUnion") -> bool:
        return not self.difference(other)

    def __le__(self, other):
        return self.issubset(other)

    def affine_image(self, offset: Fraction, scale: Fraction) -> list[tuple[Fraction, Fraction]]:
        """Pieces of ``offset + scale * self`` (scale > 0), sorted."""
        return [(offset + scale * a, offset + scale * b) for a, b in self.intervals]

    def boundary_points(self) -> list[Fraction]:
        return [p for iv in self.intervals for p in iv]


def union_all(sets: Iterable[IntervalUnion], cap=DEFAULT_COMPONENT_CAP) -> IntervalUnion:
    pairs = [iv for s in sets for iv in s.intervals]
    return IntervalUnion(pairs, cap=cap)

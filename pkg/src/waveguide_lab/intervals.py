"""Finite unions of closed intervals, scalar and row-vectorized.

``IntervalSet`` is the user-facing value type. ``IntervalRows`` holds one
union per lattice line as padded ``(n_lines, width)`` endpoint arrays so a
whole family of lines can be intersected at once; empty slots carry
``lo = +inf, hi = -inf``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np


def _normalize(pairs):
    iv = sorted((float(a), float(b)) for a, b in pairs if b >= a)
    out = []
    for a, b in iv:
        if out and a <= out[-1][1]:
            out[-1] = (out[-1][0], max(out[-1][1], b))
        else:
            out.append((a, b))
    return tuple(out)


@dataclass(frozen=True)
class IntervalSet:
    """Sorted, disjoint closed intervals ``[a_i, b_i]``."""

    intervals: tuple = ()

    @classmethod
    def of(cls, pairs: Iterable) -> "IntervalSet":
        return cls(_normalize(pairs))

    @classmethod
    def empty(cls) -> "IntervalSet":
        return cls(())

    def __post_init__(self):
        object.__setattr__(self, "intervals", _normalize(self.intervals))

    def __iter__(self):
        return iter(self.intervals)

    def __len__(self):
        return len(self.intervals)

    def __bool__(self):
        return bool(self.intervals)

    def length(self) -> float:
        return float(sum(b - a for a, b in self.intervals))

    def union(self, other: "IntervalSet") -> "IntervalSet":
        return IntervalSet.of(self.intervals + other.intervals)

    def intersect(self, other: "IntervalSet") -> "IntervalSet":
        out = []
        i = j = 0
        A, B = self.intervals, other.intervals
        while i < len(A) and j < len(B):
            lo = max(A[i][0], B[j][0])
            hi = min(A[i][1], B[j][1])
            if hi >= lo:
                out.append((lo, hi))
            if A[i][1] < B[j][1]:
                i += 1
            else:
                j += 1
        return IntervalSet.of(out)

    def complement_within(self, window) -> "IntervalSet":
        w0, w1 = window
        out = []
        cur = w0
        for a, b in self.intervals:
            if b < w0 or a > w1:
                continue
            if a > cur:
                out.append((cur, min(a, w1)))
            cur = max(cur, b)
        if cur < w1:
            out.append((cur, w1))
        return IntervalSet.of(out)

    def contains(self, x) -> np.ndarray:
        x = np.asarray(x, float)
        m = np.zeros(x.shape, bool)
        for a, b in self.intervals:
            m |= (x >= a) & (x <= b)
        return m

    def widened(self, eps: float = 1e-12) -> "IntervalSet":
        return IntervalSet.of((a - eps * max(1.0, abs(a)), b + eps * max(1.0, abs(b))) for a, b in self.intervals)


class IntervalRows:
    """One interval union per row, stored as padded endpoint arrays."""

    def __init__(self, lo: np.ndarray, hi: np.ndarray):
        lo = np.atleast_2d(np.asarray(lo, float))
        hi = np.atleast_2d(np.asarray(hi, float))
        empty = ~(hi >= lo)
        self.lo = np.where(empty, np.inf, lo)
        self.hi = np.where(empty, -np.inf, hi)

    @property
    def n(self) -> int:
        return self.lo.shape[0]

    @classmethod
    def full(cls, n: int) -> "IntervalRows":
        return cls(np.full((n, 1), -np.inf), np.full((n, 1), np.inf))

    @classmethod
    def from_columns(cls, *cols):
        """Build from ``(lo, hi)`` column pairs, each an array of length ``n``."""
        lo = np.stack([c[0] for c in cols], axis=1)
        hi = np.stack([c[1] for c in cols], axis=1)
        return cls(lo, hi)

    def intersect(self, other: "IntervalRows") -> "IntervalRows":
        lo = np.maximum(self.lo[:, :, None], other.lo[:, None, :]).reshape(self.n, -1)
        hi = np.minimum(self.hi[:, :, None], other.hi[:, None, :]).reshape(self.n, -1)
        return IntervalRows(lo, hi).compact()

    def compact(self) -> "IntervalRows":
        """Sort slots by left endpoint, merge overlaps, drop all-empty columns."""
        order = np.argsort(self.lo, axis=1, kind="stable")
        lo = np.take_along_axis(self.lo, order, 1)
        hi = np.take_along_axis(self.hi, order, 1)
        # merge overlapping neighbours (inputs from intersecting disjoint families rarely overlap)
        if lo.shape[1] > 1:
            run_hi = np.maximum.accumulate(hi, axis=1)
            overlap = np.zeros(lo.shape, bool)
            overlap[:, 1:] = lo[:, 1:] <= run_hi[:, :-1]
            if overlap.any():
                return IntervalRows._merge_rows(lo, hi)
        ok = np.isfinite(lo) | np.isfinite(hi)
        ok &= hi >= lo
        width = int(ok.sum(axis=1).max()) if ok.size else 0
        width = max(width, 1)
        return IntervalRows(lo[:, :width], hi[:, :width])

    @staticmethod
    def _merge_rows(lo, hi):
        rows = []
        for a_row, b_row in zip(lo, hi):
            rows.append(_normalize(zip(a_row, b_row)))
        width = max(1, max(len(r) for r in rows))
        L = np.full((len(rows), width), np.inf)
        H = np.full((len(rows), width), -np.inf)
        for i, r in enumerate(rows):
            for c, (a, b) in enumerate(r):
                L[i, c], H[i, c] = a, b
        return IntervalRows(L, H)

    def widened(self, eps: float = 1e-12) -> "IntervalRows":
        ok = self.hi >= self.lo
        with np.errstate(invalid="ignore"):
            lo = np.where(ok, self.lo - eps * np.maximum(1.0, np.abs(self.lo)), self.lo)
            hi = np.where(ok, self.hi + eps * np.maximum(1.0, np.abs(self.hi)), self.hi)
        return IntervalRows(lo, hi)

    def lengths(self) -> np.ndarray:
        d = self.hi - self.lo
        return np.where(self.hi >= self.lo, d, 0.0).sum(axis=1)

    def nonempty(self) -> np.ndarray:
        return np.any(self.hi >= self.lo, axis=1)

    def row(self, i: int) -> IntervalSet:
        return IntervalSet.of(zip(self.lo[i], self.hi[i]))

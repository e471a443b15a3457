"""Integer-lattice geometry: points, finite windows, shifts and orders.

Everything downstream works on finite axis-aligned boxes of Z^d.  Field
values outside the stored window are treated as absent; consumers that
approximate infinite-lattice quantities must declare their own truncation
policy (see the boundary flags in :mod:`maxstable.functionals`).
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from typing import Iterable, Optional

import numpy as np

LatticePoint = tuple  # d-tuple of ints; d is constant within one computation


class LatticeOrder(Enum):
    """Translation-invariant total orders on Z^d."""

    LEXICOGRAPHIC = "lexicographic"
    REVERSED_LEXICOGRAPHIC = "reversed-lexicographic"


def as_point(p: Iterable[int]) -> LatticePoint:
    """Coerce an iterable of integers to a lattice point tuple."""
    pt = tuple(int(c) for c in p)
    if len(pt) == 0:
        raise ValueError("lattice points must have dimension >= 1")
    return pt


def add(a: LatticePoint, b: LatticePoint) -> LatticePoint:
    return tuple(x + y for x, y in zip(a, b))


def neg(a: LatticePoint) -> LatticePoint:
    return tuple(-x for x in a)


def order_compare(order: LatticeOrder, a: LatticePoint, b: LatticePoint) -> int:
    """Compare two lattice points; returns -1, 0 or 1.

    Both orders are total and translation-invariant: the reversed order is
    the exact reversal of the lexicographic one.
    """
    if len(a) != len(b):
        raise ValueError(f"dimension mismatch: {len(a)} vs {len(b)}")
    if a == b:
        return 0
    less = tuple(a) < tuple(b)
    if order is LatticeOrder.REVERSED_LEXICOGRAPHIC:
        less = not less
    return -1 if less else 1


@dataclass(frozen=True)
class Window:
    """Inclusive box [lower, upper] in Z^d with per-coordinate lower <= upper."""

    lower: LatticePoint
    upper: LatticePoint

    def __post_init__(self):
        lo = as_point(self.lower)
        hi = as_point(self.upper)
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)
        if len(lo) != len(hi):
            raise ValueError("window bounds must share a dimension")
        if any(l > u for l, u in zip(lo, hi)):
            raise ValueError(f"empty window: lower={lo} upper={hi}")

    @property
    def dim(self) -> int:
        return len(self.lower)

    @property
    def shape(self) -> tuple:
        return tuple(u - l + 1 for l, u in zip(self.lower, self.upper))

    @property
    def npoints(self) -> int:
        n = 1
        for s in self.shape:
            n *= s
        return n

    def contains(self, p: LatticePoint) -> bool:
        return all(l <= c <= u for l, c, u in zip(self.lower, p, self.upper))

    @cached_property
    def points(self) -> np.ndarray:
        """All window points as an (npoints, dim) int array, lexicographic order."""
        axes = [np.arange(l, u + 1) for l, u in zip(self.lower, self.upper)]
        grid = np.meshgrid(*axes, indexing="ij")
        return np.stack([g.ravel() for g in grid], axis=-1)

    @cached_property
    def _index(self) -> dict:
        return {tuple(int(c) for c in p): i for i, p in enumerate(self.points)}

    def index_of(self, p: LatticePoint) -> int:
        """Flat (lexicographic) index of a point; KeyError if outside."""
        try:
            return self._index[tuple(int(c) for c in p)]
        except KeyError:
            raise KeyError(f"point {tuple(p)} outside window {self}") from None

    @cached_property
    def origin_index(self) -> int:
        return self.index_of((0,) * self.dim)

    @cached_property
    def shell_mask(self) -> np.ndarray:
        """Boolean mask of points on the outer shell of the box."""
        pts = self.points
        lo = np.asarray(self.lower)
        hi = np.asarray(self.upper)
        return ((pts == lo) | (pts == hi)).any(axis=1)

    def enlarged(self, margin) -> "Window":
        """Box grown by `margin` in every direction (int or per-dim iterable)."""
        if np.isscalar(margin):
            margin = (int(margin),) * self.dim
        m = as_point(margin)
        if any(v < 0 for v in m):
            raise ValueError("margin must be non-negative")
        return Window(
            tuple(l - v for l, v in zip(self.lower, m)),
            tuple(u + v for u, v in zip(self.upper, m)),
        )

    def shifted(self, h: LatticePoint) -> "Window":
        return Window(add(self.lower, h), add(self.upper, h))

    @staticmethod
    def hull(*windows: "Window") -> "Window":
        lo = tuple(min(w.lower[j] for w in windows) for j in range(windows[0].dim))
        hi = tuple(max(w.upper[j] for w in windows) for j in range(windows[0].dim))
        return Window(lo, hi)

    def __str__(self):
        return "x".join(f"[{l},{u}]" for l, u in zip(self.lower, self.upper))


def lex_strides(shape: tuple) -> np.ndarray:
    """Flat-index strides of the lexicographic layout of a box of `shape`."""
    strides = np.ones(len(shape), dtype=int)
    for j in range(len(shape) - 2, -1, -1):
        strides[j] = strides[j + 1] * shape[j + 1]
    return strides


def window_points(w: Window, order: LatticeOrder = LatticeOrder.LEXICOGRAPHIC) -> np.ndarray:
    """Enumerate every point of the box exactly once, ascending in `order`."""
    pts = w.points
    if order is LatticeOrder.REVERSED_LEXICOGRAPHIC:
        return pts[::-1]
    return pts


class FieldTag(Enum):
    """Which random object a sample realizes."""

    Z = "Z"
    THETA = "Theta"
    Y = "Y"
    X = "X"


@dataclass
class FieldSample:
    """One realization of a field on a finite window.

    `values` is flat in the window's lexicographic point order.  Theta
    samples carry value 1 at the origin exactly; Y samples carry a value
    > 1 there (the Pareto factor).
    """

    window: Window
    values: np.ndarray
    tag: FieldTag
    weight: Optional[float] = None

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float).ravel()
        if vals.shape[0] != self.window.npoints:
            raise ValueError(
                f"values length {vals.shape[0]} != window size {self.window.npoints}"
            )
        if np.any(vals < 0):
            raise ValueError("field values must be non-negative")
        self.values = vals
        if self.weight is not None and not self.weight >= 0:
            raise ValueError("weight must be non-negative")

    def check_tag_invariant(self) -> "FieldSample":
        """Assert the tag-specific origin constraint (Theta(0)=1, Y(0)>1).

        Samplers call this before returning; shifted samples are exempt
        because the shift moves the anchoring point away from the origin.
        """
        if self.tag is FieldTag.THETA:
            if self.value(origin(self.window.dim)) != 1.0:
                raise AssertionError("Theta samples must equal 1 at the origin")
        elif self.tag is FieldTag.Y:
            if not self.value(origin(self.window.dim)) > 1.0:
                raise AssertionError("Y samples must exceed 1 at the origin")
        return self

    def value(self, p: LatticePoint) -> float:
        return float(self.values[self.window.index_of(p)])

    def items(self):
        for p, v in zip(self.window.points, self.values):
            yield tuple(int(c) for c in p), float(v)


def origin(dim: int) -> LatticePoint:
    return (0,) * dim


def shift_field(f: FieldSample, h: LatticePoint) -> FieldSample:
    """Shift operator on samples: result(t) = f(t - h), domain translated by h."""
    return FieldSample(f.window.shifted(h), f.values.copy(), f.tag, f.weight)

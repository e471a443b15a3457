"""Anchoring functionals and path statistics on field samples.

All functionals operate on window truncations of conceptually infinite
fields.  Each result carries a boundary flag raised when the deciding
point (or a material share of the mass) sits on the window's outer shell,
so estimators can treat the sample as potentially divergent.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Callable, Iterable, Optional, Union

import numpy as np

from .lattice import (
    FieldSample,
    FieldTag,
    LatticeOrder,
    LatticePoint,
    Window,
    add,
    lex_strides,
    origin,
    shift_field,
)

SHELL_FRACTION = 0.05


class AnchorKind(Enum):
    FIRST_MAX = "first_max"
    LAST_MAX = "last_max"
    FIRST_EXCEED = "first_exceed"
    LAST_EXCEED = "last_exceed"


@dataclass(frozen=True)
class AnchorMap:
    """A named anchoring functional over a translation-invariant order."""

    kind: AnchorKind
    order: LatticeOrder = LatticeOrder.LEXICOGRAPHIC

    @property
    def on_tail_field(self) -> bool:
        """Exceedance maps act on Y; maximum maps act on Theta."""
        return self.kind in (AnchorKind.FIRST_EXCEED, AnchorKind.LAST_EXCEED)

    def effective_lex_kind(self) -> AnchorKind:
        """Reduce (kind, order) to a kind under the lexicographic layout."""
        if self.order is LatticeOrder.LEXICOGRAPHIC:
            return self.kind
        flip = {
            AnchorKind.FIRST_MAX: AnchorKind.LAST_MAX,
            AnchorKind.LAST_MAX: AnchorKind.FIRST_MAX,
            AnchorKind.FIRST_EXCEED: AnchorKind.LAST_EXCEED,
            AnchorKind.LAST_EXCEED: AnchorKind.FIRST_EXCEED,
        }
        return flip[self.kind]


@dataclass(frozen=True)
class AnchorResult:
    """Anchor location, or the distinguished symbol infinity (point=None)."""

    point: Optional[LatticePoint]
    boundary: bool = False

    @property
    def is_infinite(self) -> bool:
        return self.point is None


INFINITE = AnchorResult(None)


def _ordered_view(f: FieldSample, order: LatticeOrder):
    """Values and points of f ascending in `order` (lex layout is native)."""
    if order is LatticeOrder.REVERSED_LEXICOGRAPHIC:
        return f.values[::-1], f.window.points[::-1], f.window.shell_mask[::-1]
    return f.values, f.window.points, f.window.shell_mask


def first_max(f: FieldSample, order: LatticeOrder = LatticeOrder.LEXICOGRAPHIC) -> AnchorResult:
    """Order-minimal point attaining the maximum; infinity when max f = 0."""
    vals, pts, shell = _ordered_view(f, order)
    m = vals.max() if vals.size else 0.0
    if m <= 0.0:
        return INFINITE
    j = int(np.argmax(vals))
    return AnchorResult(tuple(int(c) for c in pts[j]), bool(shell[j]))


def last_max(f: FieldSample, order: LatticeOrder = LatticeOrder.LEXICOGRAPHIC) -> AnchorResult:
    flipped = (
        LatticeOrder.REVERSED_LEXICOGRAPHIC
        if order is LatticeOrder.LEXICOGRAPHIC
        else LatticeOrder.LEXICOGRAPHIC
    )
    return first_max(f, flipped)


def first_exceed(f: FieldSample, order: LatticeOrder = LatticeOrder.LEXICOGRAPHIC) -> AnchorResult:
    """Order-minimal point with f > 1; infinity if no exceedance."""
    vals, pts, shell = _ordered_view(f, order)
    hits = np.flatnonzero(vals > 1.0)
    if hits.size == 0:
        return INFINITE
    j = int(hits[0])
    return AnchorResult(tuple(int(c) for c in pts[j]), bool(shell[j]))


def last_exceed(f: FieldSample, order: LatticeOrder = LatticeOrder.LEXICOGRAPHIC) -> AnchorResult:
    flipped = (
        LatticeOrder.REVERSED_LEXICOGRAPHIC
        if order is LatticeOrder.LEXICOGRAPHIC
        else LatticeOrder.LEXICOGRAPHIC
    )
    return first_exceed(f, flipped)


_ANCHOR_FUNCS = {
    AnchorKind.FIRST_MAX: first_max,
    AnchorKind.LAST_MAX: last_max,
    AnchorKind.FIRST_EXCEED: first_exceed,
    AnchorKind.LAST_EXCEED: last_exceed,
}


def apply_anchor(anchor: AnchorMap, f: FieldSample) -> AnchorResult:
    return _ANCHOR_FUNCS[anchor.kind](f, anchor.order)


@dataclass(frozen=True)
class SumResult:
    value: float
    tail_flag: bool


def sum_alpha(
    f: FieldSample, alpha: float = 1.0, shell_fraction: float = SHELL_FRACTION
) -> SumResult:
    """Window-truncated S(f) = sum_t f^alpha(t) with a divergence heuristic:
    the tail flag is raised when the outer shell carries more than
    `shell_fraction` of the total."""
    powered = f.values**alpha
    total = float(powered.sum())
    shell = float(powered[f.window.shell_mask].sum())
    flag = total > 0 and shell > shell_fraction * total
    return SumResult(total, flag)


@dataclass(frozen=True)
class CountResult:
    count: int
    tail_flag: bool


def exceed_count(f: FieldSample) -> CountResult:
    """Window-truncated B(Y) = #{t : Y(t) > 1}; Y-tagged samples only."""
    if f.tag is not FieldTag.Y:
        raise ValueError("exceed_count requires a Y-tagged sample")
    hits = f.values > 1.0
    flag = bool(np.any(hits & f.window.shell_mask))
    return CountResult(int(hits.sum()), flag)


# ---------------------------------------------------------------------------
# Anchoring-axiom checker
# ---------------------------------------------------------------------------


@dataclass
class AnchoringReport:
    checked: int
    violations: list

    @property
    def passed(self) -> bool:
        return not self.violations


def _crop_shift(f: FieldSample, h: LatticePoint) -> Optional[FieldSample]:
    """B^h f restricted to the original window; None when support escapes."""
    w = f.window
    shifted = np.zeros_like(f.values)
    pts = w.points
    src = pts - np.asarray(h)
    inside = np.all((src >= w.lower) & (src <= w.upper), axis=1)
    strides = lex_strides(w.shape)
    cols = (src[inside] - np.asarray(w.lower)) @ strides
    shifted[inside] = f.values[cols]
    # support escaping the window would silently truncate mass
    lost = f.values[~np.all((pts + np.asarray(h) >= w.lower) & (pts + np.asarray(h) <= w.upper), axis=1)]
    if np.any(lost > 0):
        return None
    return FieldSample(w, shifted, f.tag)


def check_anchoring(
    anchor: Union[AnchorMap, Callable[[FieldSample], AnchorResult]],
    samples: Iterable[FieldSample],
    shifts: Optional[Iterable[LatticePoint]] = None,
) -> AnchoringReport:
    """Verify the two anchoring-map axioms on concrete samples.

    i)  a finite anchor i satisfies f(i) >= min(f(0), 1);
    ii) anchoring commutes with shifts: I(B^h f) = I(f) + h, checked for
        shifts that keep the support inside the window.
    """
    func = (lambda f: apply_anchor(anchor, f)) if isinstance(anchor, AnchorMap) else anchor
    violations = []
    checked = 0
    for idx, f in enumerate(samples):
        checked += 1
        zero = origin(f.window.dim)
        res = func(f)
        if not res.is_infinite:
            if f.value(res.point) < min(f.value(zero), 1.0):
                violations.append((idx, "i", f"f({res.point}) < min(f(0), 1)"))
        if shifts is None:
            shift_list = [(1,) + (0,) * (f.window.dim - 1), (-1,) + (0,) * (f.window.dim - 1)]
        else:
            shift_list = list(shifts)
        for h in shift_list:
            # condition ii) on the translated domain ...
            res_h = func(shift_field(f, h))
            if res_h.is_infinite != res.is_infinite or (
                not res.is_infinite and res_h.point != add(res.point, h)
            ):
                violations.append(
                    (idx, "ii", f"I(B^{h} f) != I(f) + {h} (translated domain)")
                )
            # ... and on the original window when the support stays inside
            g = _crop_shift(f, h)
            if g is None:
                continue
            res_g = func(g)
            if res.is_infinite != res_g.is_infinite:
                violations.append((idx, "ii", f"shift {h} changed finiteness"))
            elif not res.is_infinite and res_g.point != add(res.point, h):
                violations.append(
                    (idx, "ii", f"I(B^{h} f) = {res_g.point} != I(f) + h = {add(res.point, h)}")
                )
    return AnchoringReport(checked, violations)


# ---------------------------------------------------------------------------
# Batch kernels used by the estimator suite
# ---------------------------------------------------------------------------


def batch_shell_fraction(batch: np.ndarray, w: Window, alpha: float = 1.0) -> np.ndarray:
    """Per-replicate share of sum f^alpha carried by the window shell."""
    powered = batch if alpha == 1.0 else batch**alpha
    total = powered.sum(axis=1)
    shell = powered[:, w.shell_mask].sum(axis=1)
    return np.divide(shell, total, out=np.zeros_like(total), where=total > 0)


def batch_anchor_at_origin(
    batch: np.ndarray, w: Window, kind: AnchorKind
) -> np.ndarray:
    """Boolean per replicate: the anchor (lex layout) lands at the origin."""
    o = w.origin_index
    if kind is AnchorKind.FIRST_MAX:
        return np.argmax(batch, axis=1) == o
    if kind is AnchorKind.LAST_MAX:
        return (batch.shape[1] - 1 - np.argmax(batch[:, ::-1], axis=1)) == o
    if kind is AnchorKind.FIRST_EXCEED:
        before = np.all(batch[:, :o] <= 1.0, axis=1)
        return before & (batch[:, o] > 1.0)
    if kind is AnchorKind.LAST_EXCEED:
        after = np.all(batch[:, o + 1 :] <= 1.0, axis=1)
        return after & (batch[:, o] > 1.0)
    raise ValueError(kind)

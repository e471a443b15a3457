"""Statistical verification of the structural identities the models must
satisfy: the tilt-shift formulas for Z and Theta, the tilt identity for Y
and the Y_h fidi formula against conditional simulation.

Each check estimates both sides on independent substreams and compares at
4 combined standard errors (suites run tens of checks, so the threshold is
set for family-wise control; fixed seeds make outcomes reproducible).  A
deliberately broken sampler (`jittered_theta`) validates harness power.
"""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass
from typing import Optional, Sequence as Seq

import numpy as np

from . import dehaan, mc
from .estimators import EstimateReport
from .lattice import Window, as_point, neg, origin
from .spectral import Model, Sequence, UsageError, sample_y_batch

PASS_THRESHOLD = 4.0


# ---------------------------------------------------------------------------
# Bounded 0-homogeneous test functionals
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TestFunctional:
    """Bounded [0,1]-valued functional of a field, reading finitely many
    coordinates; every built-in kind is 0-homogeneous."""

    __test__ = False  # not a pytest class despite the name

    kind: str
    a: Optional[tuple] = None
    b: Optional[tuple] = None
    j: Optional[tuple] = None
    c: float = 1.0
    box: Optional[Window] = None

    @staticmethod
    def coordinate_ratio(a, b) -> "TestFunctional":
        """f(a) / (f(a) + f(b)) with 0/0 := 0."""
        return TestFunctional("coordinate_ratio", a=as_point(a), b=as_point(b))

    @staticmethod
    def anchor_indicator(j, box: Window) -> "TestFunctional":
        """1(first maximum of f over `box` sits at j); 0 when f = 0 on box."""
        j = as_point(j)
        if not box.contains(j):
            raise UsageError("anchor target must lie in the functional's box")
        return TestFunctional("anchor_indicator", j=j, box=box)

    @staticmethod
    def exceed_indicator(a, c: float) -> "TestFunctional":
        """1(f(a) > c * f(0))."""
        return TestFunctional("exceed_indicator", a=as_point(a), c=float(c))

    def reads(self) -> list:
        if self.kind == "coordinate_ratio":
            return [self.a, self.b]
        if self.kind == "exceed_indicator":
            return [self.a, origin(len(self.a))]
        if self.kind == "anchor_indicator":
            return [tuple(int(c) for c in p) for p in self.box.points]
        raise ValueError(self.kind)

    def evaluate(self, batch: np.ndarray, w: Window, shift=None) -> np.ndarray:
        """Evaluate F(B^shift f) on a batch; reads f at (point - shift)."""
        dim = w.dim
        h = as_point(shift) if shift is not None else origin(dim)

        def col(p):
            return w.index_of(tuple(pi - hi for pi, hi in zip(p, h)))

        if self.kind == "coordinate_ratio":
            fa = batch[:, col(self.a)]
            fb = batch[:, col(self.b)]
            s = fa + fb
            return np.divide(fa, s, out=np.zeros_like(fa), where=s > 0)
        if self.kind == "exceed_indicator":
            return (batch[:, col(self.a)] > self.c * batch[:, col(origin(dim))]).astype(
                float
            )
        if self.kind == "anchor_indicator":
            cols = np.array([col(tuple(int(c) for c in p)) for p in self.box.points])
            sub = batch[:, cols]
            target = self.box.index_of(self.j)
            hit = (np.argmax(sub, axis=1) == target) & (sub.max(axis=1) > 0)
            return hit.astype(float)
        raise ValueError(self.kind)

    def describe(self) -> str:
        if self.kind == "coordinate_ratio":
            return f"ratio[{self.a}/{self.b}]"
        if self.kind == "exceed_indicator":
            return f"exceed[{self.a}>{self.c}*f(0)]"
        return f"anchor[{self.j} in {self.box}]"


# ---------------------------------------------------------------------------
# Identity reports
# ---------------------------------------------------------------------------


@dataclass
class IdentityReport:
    lhs: EstimateReport
    rhs: EstimateReport
    z_score: float
    passed: bool
    label: str = ""
    status: str = "ok"

    @staticmethod
    def from_sides(lhs, rhs, label="", allowance=0.0, status="ok") -> "IdentityReport":
        diff = abs(lhs.estimate - rhs.estimate)
        combined = mc.combined_stderr(lhs.stderr, rhs.stderr)
        if combined > 0:
            z = (lhs.estimate - rhs.estimate) / combined
        else:
            z = 0.0 if diff == 0 else math.inf
        passed = diff <= allowance + PASS_THRESHOLD * combined
        return IdentityReport(lhs, rhs, z, passed, label, status)


def _check_window(points) -> Window:
    pts = [as_point(p) for p in points]
    dim = len(pts[0])
    lo = tuple(min(p[j] for p in pts) for j in range(dim))
    hi = tuple(max(p[j] for p in pts) for j in range(dim))
    return Window(lo, hi)


def _shifted_reads(reads, h):
    return [tuple(p[j] - h[j] for j in range(len(h))) for p in reads]


# ---------------------------------------------------------------------------
# The four checks
# ---------------------------------------------------------------------------


def _side_streams(rng, same: bool):
    """Two substreams; identical state when both sides are the same
    estimator (e.g. h = 0), making the report's z-score exactly zero."""
    s1, s2 = mc.spawn_streams(rng, 2)
    if same:
        s2 = copy.deepcopy(s1)
    return s1, s2



def check_tsf_z(
    model: Model,
    h,
    functional: TestFunctional,
    replicates: int,
    rng,
    window: Optional[Window] = None,
    workers: int = 1,
) -> IdentityReport:
    """Tilt-shift formula for Z: E[Z^a(h) F(Z)] = E[Z^a(0) F(B^h Z)]."""
    h = as_point(h if isinstance(h, tuple) else (h,))
    reads = functional.reads()
    needed = reads + _shifted_reads(reads, h) + [origin(len(h)), h]
    w = window or _check_window(needed)
    for p in needed:
        if not w.contains(p):
            raise UsageError(f"window {w} too small: needs {p}")
    s1, s2 = _side_streams(rng, same=not any(h))
    ih, i0 = w.index_of(h), w.origin_index
    a = model.alpha

    def lhs_kernel(size, stream):
        z = model.sample_z(w, size, stream)
        return z[:, ih] ** a * functional.evaluate(z, w)

    def rhs_kernel(size, stream):
        z = model.sample_z(w, size, stream)
        return z[:, i0] ** a * functional.evaluate(z, w, shift=h)

    lhs = mc.run_chunks(lhs_kernel, replicates, s1, workers)
    rhs = mc.run_chunks(rhs_kernel, replicates, s2, workers)
    return IdentityReport.from_sides(
        EstimateReport(lhs.mean, lhs.stderr, replicates, w, "tsf_z_lhs"),
        EstimateReport(rhs.mean, rhs.stderr, replicates, w, "tsf_z_rhs"),
        label=f"tsf_z h={h} {functional.describe()}",
    )


def check_tsf_theta(
    model: Model,
    h,
    functional: TestFunctional,
    replicates: int,
    rng,
    window: Optional[Window] = None,
    workers: int = 1,
) -> IdentityReport:
    """Tilt-shift formula for Theta:
    E[Theta^a(h) F(Theta)] = E[F(B^h Theta) 1(B^h Theta(0) != 0)]."""
    h = as_point(h if isinstance(h, tuple) else (h,))
    reads = functional.reads()
    needed = reads + _shifted_reads(reads, h) + [origin(len(h)), h, neg(h)]
    w = window or _check_window(needed)
    for p in needed:
        if not w.contains(p):
            raise UsageError(f"window {w} too small: needs {p}")
    s1, s2 = _side_streams(rng, same=not any(h))
    ih, ineg = w.index_of(h), w.index_of(neg(h))
    a = model.alpha

    def lhs_kernel(size, stream):
        theta = model.sample_theta(w, size, stream)
        return theta[:, ih] ** a * functional.evaluate(theta, w)

    def rhs_kernel(size, stream):
        theta = model.sample_theta(w, size, stream)
        return functional.evaluate(theta, w, shift=h) * (theta[:, ineg] > 0)

    lhs = mc.run_chunks(lhs_kernel, replicates, s1, workers)
    rhs = mc.run_chunks(rhs_kernel, replicates, s2, workers)
    return IdentityReport.from_sides(
        EstimateReport(lhs.mean, lhs.stderr, replicates, w, "tsf_theta_lhs"),
        EstimateReport(rhs.mean, rhs.stderr, replicates, w, "tsf_theta_rhs"),
        label=f"tsf_theta h={h} {functional.describe()}",
    )


def check_tilt_identity(
    model: Model,
    i,
    t: float,
    functional: TestFunctional,
    replicates: int,
    rng,
    window: Optional[Window] = None,
    workers: int = 1,
) -> IdentityReport:
    """Tail-field tilt identity:
    E[F(Y) 1(Y(i) > 1/t)] = t E[F(B^i Y) 1(Y(-i) > t)]."""
    if t <= 0:
        raise UsageError("t must be positive")
    i = as_point(i if isinstance(i, tuple) else (i,))
    reads = functional.reads()
    needed = reads + _shifted_reads(reads, i) + [origin(len(i)), i, neg(i)]
    w = window or _check_window(needed)
    for p in needed:
        if not w.contains(p):
            raise UsageError(f"window {w} too small: needs {p}")
    s1, s2 = _side_streams(rng, same=not any(i) and t == 1.0)
    ii, ineg = w.index_of(i), w.index_of(neg(i))

    def lhs_kernel(size, stream):
        y = sample_y_batch(model, w, size, stream)
        return functional.evaluate(y, w) * (y[:, ii] > 1.0 / t)

    def rhs_kernel(size, stream):
        y = sample_y_batch(model, w, size, stream)
        return t * functional.evaluate(y, w, shift=i) * (y[:, ineg] > t)

    lhs = mc.run_chunks(lhs_kernel, replicates, s1, workers)
    rhs = mc.run_chunks(rhs_kernel, replicates, s2, workers)
    return IdentityReport.from_sides(
        EstimateReport(lhs.mean, lhs.stderr, replicates, w, "tilt_lhs"),
        EstimateReport(rhs.mean, rhs.stderr, replicates, w, "tilt_rhs"),
        label=f"tilt i={i} t={t} {functional.describe()}",
    )


def check_y_fidi(
    model: Model,
    h,
    points: Seq,
    thresholds: Seq,
    replicates: int,
    rng,
    u: float = 50.0,
    bias_allowance: float = 0.02,
    min_events: int = 500,
    ctrl: Optional[dehaan.SeriesControl] = None,
    workers: int = 1,
) -> IdentityReport:
    """Conditional-simulation check of the Y_h fidi formula.

    LHS: empirical P(X(t_i) <= u x_i for all i | X(h) > u) from simulated
    fields at the conditioning level u (asymptotic, hence the explicit bias
    allowance).  RHS: the closed expectation formula via Theta_h.
    """
    h = as_point(h if isinstance(h, tuple) else (h,))
    pts = [as_point(p if isinstance(p, tuple) else (p,)) for p in points]
    x = np.asarray([float(v) for v in thresholds])
    w = _check_window(pts + [h, origin(len(h))])
    cols = np.array([w.index_of(p) for p in pts])
    ih = w.index_of(h)
    s1, s2 = mc.spawn_streams(rng, 2)

    def lhs_kernel(size, stream):
        fields = dehaan.simulate_field(model, w, size, stream, ctrl=ctrl)
        cond = fields[:, ih] > u
        below = np.all(fields[:, cols] <= u * x[None, :], axis=1)
        return (cond & below).astype(float), {"events": float(cond.sum())}

    res = mc.run_chunks(lhs_kernel, replicates, s1, workers)
    events = res.diag.get("events", 0.0)
    if events > 0:
        p_hat = res.total / events
        se = math.sqrt(max(p_hat * (1 - p_hat), 0.0) / events)
    else:
        p_hat, se = 0.0, float("inf")
    lhs = EstimateReport(
        p_hat, se, int(events), w, "y_fidi_conditional", {"u": u, "events": events}
    )
    rhs = dehaan.y_fidi_cdf(model, h, pts, x, replicates, s2, workers)
    status = "ok" if events >= min_events else "inconclusive"
    return IdentityReport.from_sides(
        lhs, rhs, label=f"y_fidi h={h}", allowance=bias_allowance, status=status
    )


# ---------------------------------------------------------------------------
# Suites
# ---------------------------------------------------------------------------


def _random_functional(dim: int, stream: np.random.Generator) -> TestFunctional:
    pick = stream.integers(0, 3)
    def rand_point(nonzero=False):
        while True:
            p = tuple(int(v) for v in stream.integers(-2, 3, size=dim))
            if not nonzero or any(p):
                return p
    if pick == 0:
        a = rand_point()
        b = rand_point()
        while b == a:
            b = rand_point()
        return TestFunctional.coordinate_ratio(a, b)
    if pick == 1:
        return TestFunctional.exceed_indicator(
            rand_point(nonzero=True), float(stream.choice([0.5, 0.8, 1.25, 2.0]))
        )
    box = Window((-2,) * dim, (2,) * dim)
    return TestFunctional.anchor_indicator(rand_point(), box)


def standard_suite(
    model: Model,
    kinds: Seq,
    checks_per_kind: int,
    replicates: int,
    seed,
    workers: int = 1,
) -> list:
    """Deterministic battery of identity checks with seed-derived parameters."""
    param_stream = np.random.default_rng(np.random.SeedSequence(seed))
    run_streams = mc.spawn_streams(np.random.SeedSequence((seed, 1)), len(kinds) * checks_per_kind)
    reports = []
    idx = 0
    for kind in kinds:
        for _ in range(checks_per_kind):
            func = _random_functional(model.dim, param_stream)
            h = tuple(
                int(v) for v in param_stream.choice([-2, -1, 1, 2], size=model.dim)
            )
            stream = run_streams[idx]
            idx += 1
            if kind == "tsf_z":
                rep = check_tsf_z(model, h, func, replicates, stream, workers=workers)
            elif kind == "tsf_theta":
                rep = check_tsf_theta(model, h, func, replicates, stream, workers=workers)
            elif kind == "tilt":
                t = float(param_stream.choice([0.5, 1.0, 2.0]))
                rep = check_tilt_identity(
                    model, h, t, func, replicates, stream, workers=workers
                )
            else:
                raise UsageError(f"unknown check kind {kind!r}")
            reports.append(rep)
    return reports


# ---------------------------------------------------------------------------
# Harness power: the deliberately broken sampler
# ---------------------------------------------------------------------------


@dataclass
class JitteredTheta(Model):
    """Wraps a model but reports Theta(0) = origin_value instead of 1.

    Violates the Theta tilt-shift identity by construction; used to verify
    the harness actually rejects invalid samplers.
    """

    base: Model
    origin_value: float = 1.01

    def __post_init__(self):
        self.dim = self.base.dim
        self.alpha = self.base.alpha

    def sample_theta(self, w, size, rng):
        theta = self.base.sample_theta(w, size, rng)
        theta[:, w.origin_index] = self.origin_value
        return theta


def jittered_theta(model: Model, origin_value: float = 1.01) -> JitteredTheta:
    return JitteredTheta(model, origin_value)


def broken_power_suite(replicates: int, seed, workers: int = 1) -> list:
    """Twenty tsf_theta checks on jittered tie-heavy sequence models.

    The functionals sit exactly on value ties of the atomic tail fields, so
    the 1% origin jitter moves whole atoms across the indicator boundary;
    each check must fail decisively if the harness has power.
    """
    box1 = Window((-2,), (2,))
    box2 = Window((-2, -2), (2, 2))
    flat2 = Sequence({0: 1.0, 1: 1.0})
    flat3 = Sequence({-1: 1.0, 0: 1.0, 1: 1.0})
    scaled2 = Sequence({0: 2.0, 1: 2.0})
    grid22 = Sequence({(0, 0): 1.0, (0, 1): 1.0, (1, 0): 1.0, (1, 1): 1.0})
    af = TestFunctional.anchor_indicator
    ef = TestFunctional.exceed_indicator
    checks = [
        (flat2, (1,), af((0,), box1)),
        (flat2, (-1,), af((0,), box1)),
        (flat2, (1,), ef((1,), 1.0)),
        (flat2, (-1,), ef((-1,), 1.0)),
        (flat2, (1,), af((1,), box1)),
        (flat2, (-1,), af((-1,), box1)),
        (flat3, (1,), af((0,), box1)),
        (flat3, (-1,), af((0,), box1)),
        (flat3, (2,), af((0,), box1)),
        (flat3, (-2,), af((0,), box1)),
        (flat3, (1,), ef((1,), 1.0)),
        (flat3, (2,), ef((2,), 1.0)),
        (flat3, (1,), af((1,), box1)),
        (scaled2, (1,), af((0,), box1)),
        (scaled2, (1,), ef((1,), 1.0)),
        (scaled2, (1,), af((1,), box1)),
        (grid22, (1, 0), af((0, 0), box2)),
        (grid22, (0, 1), af((0, 0), box2)),
        (grid22, (1, 1), af((0, 0), box2)),
        (grid22, (1, 0), ef((1, 0), 1.0)),
    ]
    streams = mc.spawn_streams(np.random.SeedSequence((seed, 2)), len(checks))
    reports = []
    for (base, h, func), stream in zip(checks, streams):
        broken = jittered_theta(base)
        reports.append(
            check_tsf_theta(broken, h, func, replicates, stream, workers=workers)
        )
    return reports

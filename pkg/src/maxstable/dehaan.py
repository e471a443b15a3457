"""Max-stable field simulation and finite-dimensional distributions.

The generic simulator accumulates the series max_i Gamma_i^(-1/alpha) Z_i
until the remaining terms (probabilistically bounded through a pilot
quantile of max Z) cannot alter the field, or until the term budget runs
out; the diagnostic records which stop fired.  Models with a closed-form
representation (iid, moving maxima, parity) also expose exact simulators,
which `simulate_field` prefers; the series path stays available for
cross-validation via `method="series"`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence as Seq

import numpy as np

from . import mc
from .estimators import EstimateReport
from .lattice import FieldSample, FieldTag, Window, as_point, origin
from .spectral import Model, UsageError, sample_theta_anchored


@dataclass(frozen=True)
class SeriesControl:
    """Truncation control for the spectral series."""

    max_terms: int = 20_000
    quantile_guard: float = 0.9999
    relative_floor: float = 0.5
    pilot: int = 4096

    def __post_init__(self):
        if self.max_terms < 1:
            raise ValueError("max_terms must be >= 1")
        if not 0 < self.quantile_guard < 1:
            raise ValueError("quantile_guard must lie in (0, 1)")
        if not self.relative_floor > 0:
            raise ValueError("relative_floor must be positive")


@dataclass
class SeriesDiagnostic:
    bound_triggered: int
    budget_triggered: int
    mean_terms: float
    max_terms_used: int
    pilot_quantile: float

    @property
    def bound_rate(self) -> float:
        total = self.bound_triggered + self.budget_triggered
        return self.bound_triggered / total if total else 0.0


def series_batch(
    model: Model,
    w: Window,
    size: int,
    rng: np.random.Generator,
    ctrl: Optional[SeriesControl] = None,
):
    """Batch of truncated-series fields plus the truncation diagnostic."""
    ctrl = ctrl or SeriesControl()
    inv_alpha = 1.0 / model.alpha
    pilot = model.sample_z(w, ctrl.pilot, rng)
    qhat = float(np.quantile(pilot.max(axis=1), ctrl.quantile_guard))

    x = np.zeros((size, w.npoints))
    gamma = np.zeros(size)
    terms = np.zeros(size, dtype=int)
    bound = np.zeros(size, dtype=bool)
    active = np.arange(size)
    for k in range(ctrl.max_terms):
        if active.size == 0:
            break
        gamma[active] += rng.standard_exponential(active.size)
        z = model.sample_z(w, active.size, rng)
        scale = gamma[active] ** (-inv_alpha)
        x[active] = np.maximum(x[active], scale[:, None] * z)
        terms[active] = k + 1
        finished = scale * qhat < ctrl.relative_floor * x[active].min(axis=1)
        bound[active[finished]] = True
        active = active[~finished]
    diag = SeriesDiagnostic(
        bound_triggered=int(bound.sum()),
        budget_triggered=int(size - bound.sum()),
        mean_terms=float(terms.mean()),
        max_terms_used=int(terms.max()),
        pilot_quantile=qhat,
    )
    return x, diag


def simulate_maxstable(
    model: Model,
    w: Window,
    ctrl: Optional[SeriesControl],
    rng: np.random.Generator,
) -> tuple:
    """One truncated-series field sample plus its truncation diagnostic."""
    x, diag = series_batch(model, w, 1, rng, ctrl)
    return FieldSample(w, x[0], FieldTag.X), diag


def simulate_field(
    model: Model,
    w: Window,
    size: int,
    rng: np.random.Generator,
    ctrl: Optional[SeriesControl] = None,
    method: str = "auto",
    diag_out: Optional[dict] = None,
) -> np.ndarray:
    """Simulate the max-stable field, preferring exact closed forms.

    method: "auto" (exact when the model has one, else series), "exact"
    (error when unavailable) or "series".
    """
    if method not in ("auto", "exact", "series"):
        raise UsageError(f"unknown simulation method {method!r}")
    if method != "series":
        exact = model.sample_x_exact(w, size, rng)
        if exact is not None:
            return exact
        if method == "exact":
            raise UsageError(f"{type(model).__name__} has no exact simulator")
    x, diag = series_batch(model, w, size, rng, ctrl)
    if diag_out is not None:
        diag_out["bound_triggered"] = diag_out.get("bound_triggered", 0) + diag.bound_triggered
        diag_out["budget_triggered"] = diag_out.get("budget_triggered", 0) + diag.budget_triggered
    return x


# ---------------------------------------------------------------------------
# Finite-dimensional distributions
# ---------------------------------------------------------------------------


def _validate_fidi(points, thresholds):
    pts = [as_point(p if isinstance(p, tuple) else (p,)) for p in points]
    if not pts:
        raise UsageError("need at least one evaluation point")
    if len(set(pts)) != len(pts):
        raise UsageError("evaluation points must be distinct")
    x = np.asarray([float(t) for t in thresholds])
    if x.shape[0] != len(pts):
        raise UsageError("points and thresholds must have equal length")
    if np.any(x <= 0):
        raise UsageError("thresholds must be positive")
    dims = {len(p) for p in pts}
    if len(dims) != 1:
        raise UsageError("points must share a dimension")
    return pts, x


def fidi_neglog(
    model: Model,
    points: Seq,
    thresholds: Seq,
    replicates: int,
    rng,
    workers: int = 1,
) -> EstimateReport:
    """-ln P(X(t_1) <= x_1, ...) = E[max_i Z^a(t_i)/x_i^a] by direct MC."""
    pts, x = _validate_fidi(points, thresholds)
    w = Window.hull(
        Window(pts[0], pts[0]),
        *(Window(p, p) for p in pts[1:]),
        Window(origin(len(pts[0])), origin(len(pts[0]))),
    )
    cols = np.array([w.index_of(p) for p in pts])
    inv_x = 1.0 / x

    def kernel(size, stream):
        z = model.sample_z(w, size, stream)
        return (z[:, cols] * inv_x[None, :]).max(axis=1) ** model.alpha

    res = mc.run_chunks(kernel, replicates, rng, workers)
    return EstimateReport(res.mean, res.stderr, replicates, w, "fidi_neglog", {})


def fidi_neglog_anchored(
    model: Model,
    points: Seq,
    thresholds: Seq,
    replicates: int,
    rng,
    workers: int = 1,
) -> EstimateReport:
    """-ln P via the anchored decomposition: sum_i x_i^-a P(first maximum of
    Theta/(B^-i x) sits at the origin)."""
    pts, x = _validate_fidi(points, thresholds)
    order = np.lexsort(np.array(pts, dtype=int).T[::-1])
    pts = [pts[i] for i in order]
    x = x[order]
    n = len(pts)
    dim = len(pts[0])
    arr = np.array(pts, dtype=int)
    w = Window(
        tuple(arr[:, j].min() - arr[:, j].max() for j in range(dim)),
        tuple(arr[:, j].max() - arr[:, j].min() for j in range(dim)),
    )
    # candidate column for (anchor i, candidate k): offset t_k - t_i
    colmat = np.empty((n, n), dtype=int)
    for i in range(n):
        for k in range(n):
            colmat[i, k] = w.index_of(tuple(arr[k] - arr[i]))
    inv_x = 1.0 / x
    weights = inv_x**model.alpha

    def kernel(size, stream):
        theta = model.sample_theta(w, size, stream)
        g = theta[:, colmat] * inv_x[None, None, :]
        anchored = np.argmax(g, axis=2) == np.arange(n)[None, :]
        return anchored @ weights

    res = mc.run_chunks(kernel, replicates, rng, workers)
    return EstimateReport(res.mean, res.stderr, replicates, w, "fidi_neglog_anchored", {})


def y_fidi_cdf(
    model: Model,
    h,
    points: Seq,
    thresholds: Seq,
    replicates: int,
    rng,
    workers: int = 1,
) -> EstimateReport:
    """P(Y_h(t_1) <= x_1, ...) = E[max(1, M^a) - M^a], M = max_i Theta_h(t_i)/x_i."""
    pts, x = _validate_fidi(points, thresholds)
    h = as_point(h if isinstance(h, tuple) else (h,))
    w = Window.hull(*(Window(p, p) for p in pts), Window(h, h))
    cols = np.array([w.index_of(p) for p in pts])
    inv_x = 1.0 / x

    def kernel(size, stream):
        theta_h = sample_theta_anchored(model, h, w, size, stream)
        m = (theta_h[:, cols] * inv_x[None, :]).max(axis=1) ** model.alpha
        return np.maximum(1.0 - m, 0.0)

    res = mc.run_chunks(kernel, replicates, rng, workers)
    return EstimateReport(res.mean, res.stderr, replicates, w, "y_fidi_cdf", {})

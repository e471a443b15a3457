"""Monte Carlo estimators of the extremal index, one per proven formula.

All theta estimators consume spectral tail (or tail) field batches on a
caller-chosen window.  Samples whose boundary diagnostics indicate
S = infinity-like behaviour contribute zero to anchor/ratio numerators
(matching the S < infinity restriction in the anchoring formulas) and
their rate is reported in the diagnostics; estimates are never clamped.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence as Seq

import numpy as np
from scipy.stats import norm

from . import mc
from .functionals import SHELL_FRACTION, AnchorMap, batch_anchor_at_origin, batch_shell_fraction
from .lattice import LatticeOrder, Window, origin
from .spectral import Model, UsageError, Variogram, sample_y_batch


@dataclass
class EstimateReport:
    """Point estimate with its Monte Carlo error and audit trail."""

    estimate: float
    stderr: float
    replicates: int
    window: Optional[Window]
    method: str
    diagnostics: dict = field(default_factory=dict)

    def validate_theta_range(self) -> bool:
        """Theta estimates must lie in [0, 1] up to 3 stderr; never clamped."""
        slack = 3.0 * self.stderr
        return -slack <= self.estimate <= 1.0 + slack

    def to_dict(self) -> dict:
        win = None
        if self.window is not None:
            win = [list(self.window.lower), list(self.window.upper)]
        return {
            "method": self.method,
            "estimate": self.estimate,
            "stderr": self.stderr,
            "replicates": self.replicates,
            "window": win,
            "diagnostics": self.diagnostics,
        }


def _report(res: mc.MCResult, w, method, extra=None) -> EstimateReport:
    diag = res.diag_rates()
    if extra:
        diag.update(extra)
    return EstimateReport(res.mean, res.stderr, res.count, w, method, diag)


# ---------------------------------------------------------------------------
# Theta formulas on the spectral tail field
# ---------------------------------------------------------------------------


def theta_ratio(
    model: Model,
    w: Window,
    replicates: int,
    rng,
    workers: int = 1,
    shell_fraction: float = SHELL_FRACTION,
) -> EstimateReport:
    """theta = E[max_t Theta^a(t) / sum_t Theta^a(t)], window-truncated."""

    def kernel(size, stream):
        theta = model.sample_theta(w, size, stream)
        powered = theta if model.alpha == 1.0 else theta**model.alpha
        total = powered.sum(axis=1)
        shell = powered[:, w.shell_mask].sum(axis=1)
        divergent = shell > shell_fraction * total
        vals = np.where(divergent, 0.0, powered.max(axis=1) / total)
        return vals, {
            "divergent": float(divergent.sum()),
            "boundary_mass": float((shell / total).sum()),
        }

    res = mc.run_chunks(kernel, replicates, rng, workers)
    return _report(res, w, "ratio")


def theta_exceed(
    model: Model,
    w: Window,
    replicates: int,
    rng,
    workers: int = 1,
) -> EstimateReport:
    """theta = E[1 / B(Y)] with B(Y) the window exceedance count of Y."""

    def kernel(size, stream):
        y = sample_y_batch(model, w, size, stream)
        hits = y > 1.0
        b = hits.sum(axis=1)
        divergent = np.any(hits & w.shell_mask[None, :], axis=1)
        return 1.0 / b, {"divergent": float(divergent.sum())}

    res = mc.run_chunks(kernel, replicates, rng, workers)
    return _report(res, w, "exceed")


def theta_anchor(
    model: Model,
    w: Window,
    anchor: AnchorMap,
    replicates: int,
    rng,
    workers: int = 1,
    shell_fraction: float = SHELL_FRACTION,
) -> EstimateReport:
    """theta = P(anchor lands at the origin); maximum anchors act on Theta,
    exceedance anchors on Y.  Divergent samples count as anchored elsewhere."""
    kind = anchor.effective_lex_kind()
    on_y = anchor.on_tail_field

    def kernel(size, stream):
        theta = model.sample_theta(w, size, stream)
        divergent = batch_shell_fraction(theta, w, model.alpha) > shell_fraction
        if on_y:
            from .spectral import sample_pareto

            batch = sample_pareto(size, model.alpha, stream)[:, None] * theta
        else:
            batch = theta
        at_origin = batch_anchor_at_origin(batch, w, kind)
        return (at_origin & ~divergent).astype(float), {
            "divergent": float(divergent.sum())
        }

    res = mc.run_chunks(kernel, replicates, rng, workers)
    return _report(res, w, f"anchor_{anchor.kind.value}")


def theta_difference(
    model: Model,
    w: Window,
    replicates: int,
    rng,
    order: LatticeOrder = LatticeOrder.LEXICOGRAPHIC,
    workers: int = 1,
    shell_fraction: float = SHELL_FRACTION,
) -> EstimateReport:
    """theta = E[max_{0 <= t} Theta - max_{0 < t} Theta; S(Theta) finite].

    With Theta(0) = 1 the difference equals (1 - max_{t > 0} Theta(t))_+.
    """
    o = w.origin_index

    def kernel(size, stream):
        theta = model.sample_theta(w, size, stream)
        divergent = batch_shell_fraction(theta, w, model.alpha) > shell_fraction
        if order is LatticeOrder.LEXICOGRAPHIC:
            succ = theta[:, o + 1 :]
        else:
            succ = theta[:, :o]
        m = succ.max(axis=1) if succ.shape[1] else np.zeros(size)
        vals = np.where(divergent, 0.0, np.maximum(1.0 - m, 0.0))
        return vals, {"divergent": float(divergent.sum())}

    res = mc.run_chunks(kernel, replicates, rng, workers)
    return _report(res, w, "difference")


# ---------------------------------------------------------------------------
# Pickands-limit and block estimators on the spectral field
# ---------------------------------------------------------------------------


def _pickands_window(model: Model, n: int) -> Window:
    return Window(origin(model.dim), (int(n),) * model.dim)


def _sliding_window_sums(arr: np.ndarray, length: int) -> np.ndarray:
    """Sum over every axis-aligned sliding window of side `length`,
    applied to all axes after the first (replicate) axis."""
    out = arr
    for axis in range(1, arr.ndim):
        out = np.moveaxis(out, axis, -1)
        cum = np.cumsum(out, axis=-1)
        res = cum[..., length - 1 :].copy()
        res[..., 1:] -= cum[..., : -length]
        out = np.moveaxis(res, -1, axis)
    return out


def _block_max_kernel(model: Model, r: int, method: str):
    """Per-replicate unbiased statistics for E[max over [0, r]^d of Z^a].

    "spectral": the maximum of a spectral-field draw (suited to bounded,
    sparse constructions such as moving maxima).  "tail": the identity
    E[max_box Z] = sum_{t in box} E[1 / #{s in box : Y(s - t) > 1}], whose
    summands are bounded; this is the route that stays accurate for
    Gaussian-based models, where max Z is a rare-event expectation.
    """
    box = Window(origin(model.dim), (int(r),) * model.dim)
    if method == "spectral":

        def kernel(size, stream):
            z = model.sample_z(box, size, stream)
            return z.max(axis=1) ** model.alpha

        return kernel
    if method == "tail":
        if model.alpha != 1.0:
            raise UsageError("tail-counting block maxima require alpha = 1")
        big = Window((-int(r),) * model.dim, (int(r),) * model.dim)

        def kernel(size, stream):
            from .spectral import sample_y_batch

            y = sample_y_batch(model, big, size, stream)
            exceed = (y > 1.0).reshape(size, *big.shape).astype(np.float64)
            counts = _sliding_window_sums(exceed, r + 1)
            flat = counts.reshape(size, -1)
            return (1.0 / flat).sum(axis=1)

        return kernel
    raise UsageError(f"unknown block-max method {method!r}")


def _resolve_max_method(model: Model, method: str) -> str:
    if method != "auto":
        return method
    return "tail" if model.prefers_tail_max else "spectral"


def theta_pickands(
    model: Model,
    n: int,
    replicates: int,
    rng,
    workers: int = 1,
    method: str = "auto",
) -> EstimateReport:
    """Finite-n Pickands ratio n^-d E[max over [0, n]^d of Z^a]."""
    if n < 1:
        raise UsageError("window side must be >= 1")
    w = _pickands_window(model, n)
    scale = float(n) ** model.dim
    method = _resolve_max_method(model, method)
    base = _block_max_kernel(model, n, method)

    def kernel(size, stream):
        return base(size, stream) / scale

    res = mc.run_chunks(kernel, replicates, rng, workers)
    return _report(res, w, "pickands", {"n": n, "max_method": method})


def theta_pickands_sweep(
    model: Model,
    n_values: Seq,
    replicates: int,
    rng,
    workers: int = 1,
) -> list:
    """Raw finite-n sequence for extrapolation by eye; no model fitting."""
    if list(n_values) != sorted(set(int(v) for v in n_values)):
        raise UsageError("n_values must be strictly increasing")
    streams = mc.spawn_streams(rng, len(n_values))
    return [
        theta_pickands(model, n, replicates, s, workers)
        for n, s in zip(n_values, streams)
    ]


def theta_block(
    model: Model,
    n: int,
    r: int,
    tau: float,
    replicates: int,
    rng,
    mode: str = "analytic",
    tau_sweep: Optional[Seq] = None,
    workers: int = 1,
    ctrl=None,
    max_method: str = "auto",
) -> EstimateReport:
    """Block extremal index at level n*tau over the block [0, r]^d.

    Analytic mode estimates E[max_block Z] by MC and applies the exact
    max-stable identity P(max > u) = 1 - exp(-E[max Z]/u); raw mode counts
    block exceedances on simulated fields.  The denominator is exact:
    r^d (1 - exp(-1/(n tau))).
    """
    if tau <= 0:
        raise UsageError("tau must be positive")
    if r < 1 or float(r) ** model.dim > n / 10:
        raise UsageError("block side too large: need r^d <= n/10")
    w = Window(origin(model.dim), (int(r),) * model.dim)
    taus = [float(tau)] + [float(t) for t in (tau_sweep or [])]
    streams = mc.spawn_streams(rng, len(taus))
    max_method = _resolve_max_method(model, max_method)
    reports = []
    for t, stream in zip(taus, streams):
        level = n * t
        denom = float(r) ** model.dim * (1.0 - math.exp(-1.0 / (level**model.alpha)))
        if mode == "analytic":
            kernel = _block_max_kernel(model, r, max_method)
            res = mc.run_chunks(kernel, replicates, stream, workers)
            m_hat = res.mean
            est = (1.0 - math.exp(-m_hat / level**model.alpha)) / denom
            # delta method through the exponential
            se = res.stderr * math.exp(-m_hat / level**model.alpha) / (level**model.alpha * denom)
            diag = {
                "mean_block_max": m_hat,
                "nonlinearity": m_hat / level**model.alpha,
                "tau": t,
                "max_method": max_method,
            }
        elif mode == "raw":
            from . import dehaan

            def kernel(size, s):
                x = dehaan.simulate_field(model, w, size, s, ctrl=ctrl)
                return (x.max(axis=1) > level).astype(float)

            res = mc.run_chunks(kernel, replicates, stream, workers)
            est = res.mean / denom
            se = res.stderr / denom
            diag = {"block_exceed_prob": res.mean, "tau": t}
        else:
            raise UsageError(f"unknown block mode {mode!r}")
        reports.append(
            EstimateReport(est, se, replicates, w, "block", diag)
        )
    main = reports[0]
    if len(reports) > 1:
        main.diagnostics["tau_sweep"] = [
            {"tau": rep.diagnostics["tau"], "estimate": rep.estimate, "stderr": rep.stderr}
            for rep in reports[1:]
        ]
    return main


# ---------------------------------------------------------------------------
# Brown-Resnick lower bound (deterministic)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LowerBoundResult:
    """Reciprocal-sum lower bound for the Brown-Resnick extremal index."""

    value: float
    window_sum: float
    tail_bound: Optional[float]
    diagnostics: dict


def _power_tail_sum(scale: float, hurst: float, radius: int, dim: int) -> float:
    """Upper bound on sum over ||t||_inf > radius of 2*Phi_bar(sigma(t)/2)
    via 2*Phi_bar(x) <= exp(-x^2/2) and ||t||_2 >= ||t||_inf."""
    total = 0.0
    r = radius + 1
    while True:
        shell = float((2 * r + 1) ** dim - (2 * r - 1) ** dim)
        term = shell * math.exp(-scale * float(r) ** (2 * hurst) / 8.0)
        total += term
        if term < 1e-18 * max(total, 1e-300) or term == 0.0:
            return total
        r += 1
        if r - radius > 10_000_000:
            return float("inf")


def br_lower_bound(v: Variogram, support: Window) -> LowerBoundResult:
    """theta >= 1 / sum_t P(Wtilde(t) + Q > 0) with the per-point probability
    evaluated in closed form as 2*Phi_bar(sigma(t)/2) (equal to 1 at t = 0)."""
    sig = np.sqrt(v(support.points))
    probs = 2.0 * norm.sf(sig / 2.0)
    window_sum = float(probs.sum())
    diagnostics = {"points": support.npoints}
    if v.kind == "power":
        radius = min(
            min(-l, u) for l, u in zip(support.lower, support.upper)
        )
        if radius < 0:
            raise UsageError("support window must contain the origin")
        tail = _power_tail_sum(v.scale, v.hurst, radius, support.dim)
        diagnostics["tail_radius"] = radius
    else:
        tail = None
        diagnostics["tail_ignored"] = True
    total = window_sum + (tail or 0.0)
    if not math.isfinite(total) or total <= 0:
        return LowerBoundResult(0.0, window_sum, tail, {**diagnostics, "divergent": True})
    return LowerBoundResult(1.0 / total, window_sum, tail, diagnostics)


# ---------------------------------------------------------------------------
# Anti-clustering probe and mixture combination
# ---------------------------------------------------------------------------


def anti_clustering_probe(
    model: Model,
    m_values: Seq,
    w: Window,
    replicates: int,
    rng,
    workers: int = 1,
) -> list:
    """E[(1 - max_{m < ||t|| <= window} Theta(t))_+] for each m (sup norm)."""
    m_list = [int(m) for m in m_values]
    if m_list != sorted(set(m_list)):
        raise UsageError("m_values must be strictly increasing")
    radii = np.abs(w.points).max(axis=1)
    rmax = int(radii.max())
    if m_list and m_list[-1] >= rmax:
        raise UsageError("largest m must stay below the window radius")
    streams = mc.spawn_streams(rng, len(m_list))
    reports = []
    for m, stream in zip(m_list, streams):
        mask = radii > m

        def kernel(size, s, mask=mask):
            theta = model.sample_theta(w, size, s)
            outer = theta[:, mask].max(axis=1)
            return np.maximum(1.0 - outer, 0.0)

        res = mc.run_chunks(kernel, replicates, stream, workers)
        reports.append(_report(res, w, "anti_clustering", {"m": m}))
    return reports


def theta_mixture(p: float, report1: EstimateReport, report2: EstimateReport) -> EstimateReport:
    """Deterministic combination p*theta_1 + (1-p)*theta_2 with error
    propagation; symmetric under (p, 1-p) swap of the reports."""
    if not 0 < p < 1:
        raise UsageError("mixture weight must lie in (0, 1)")
    est = p * report1.estimate + (1.0 - p) * report2.estimate
    se = math.hypot(p * report1.stderr, (1.0 - p) * report2.stderr)
    return EstimateReport(
        est,
        se,
        min(report1.replicates, report2.replicates),
        report1.window,
        "mixture_combine",
        {"p": p, "first": report1.method, "second": report2.method},
    )

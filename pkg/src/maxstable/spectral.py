"""Spectral model families: samplers for Z, spectral tail fields Theta and
tail fields Y = R*Theta.

Every model exposes two batch samplers on a finite window:

* ``sample_theta`` draws the spectral tail field (Theta(0) = 1 exactly);
* ``sample_z`` draws a spectral field normalized so E[Z^alpha(t)] = 1.

Where no closed-form Z exists, ``sample_z`` falls back to the generic
tail-to-spectral construction (:func:`construct_spectral_from_tail`) on a
margin-enlarged weight box.  Closed-form exact simulators of the max-stable
field itself are attached as ``sample_x_exact`` where the model admits one
(independent, summable-sequence / moving-maximum, alternating).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .lattice import (
    FieldSample,
    FieldTag,
    LatticePoint,
    Window,
    as_point,
    lex_strides,
    neg,
    origin,
)


class ModelError(RuntimeError):
    """Model-level failure (e.g. covariance not PSD after jitter)."""


class UsageError(ValueError):
    """Caller violated an operation precondition."""


# ---------------------------------------------------------------------------
# Variograms
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Variogram:
    """Variogram gamma(h) of a Gaussian field with stationary increments.

    kind "power": gamma(h) = scale * ||h||_2^(2*hurst).
    kind "table": explicit per-offset values; missing offsets are an error.
    """

    kind: str
    scale: float = 1.0
    hurst: float = 0.5
    table: Optional[dict] = None

    def __post_init__(self):
        if self.kind == "power":
            if not self.scale > 0:
                raise ValueError("variogram scale must be positive")
            if not 0 < self.hurst <= 1:
                raise ValueError("hurst exponent must lie in (0, 1]")
        elif self.kind == "table":
            if not self.table:
                raise ValueError("table variogram needs entries")
            tab = {}
            for k, v in self.table.items():
                p = as_point(k if isinstance(k, tuple) else (k,))
                v = float(v)
                if v < 0:
                    raise ValueError(f"gamma({p}) = {v} < 0")
                tab[p] = v
            dim = len(next(iter(tab)))
            zero = (0,) * dim
            if tab.setdefault(zero, 0.0) != 0.0:
                raise ValueError("gamma(0) must be 0")
            for p, v in list(tab.items()):
                q = neg(p)
                if q in tab:
                    if tab[q] != v:
                        raise ValueError(f"gamma not symmetric at {p}")
                else:
                    tab[q] = v
            object.__setattr__(self, "table", tab)
        else:
            raise ValueError(f"unknown variogram kind {self.kind!r}")

    @staticmethod
    def power(scale: float = 1.0, hurst: float = 0.5) -> "Variogram":
        return Variogram("power", scale=scale, hurst=hurst)

    @staticmethod
    def from_table(table: dict) -> "Variogram":
        return Variogram("table", table=table)

    def __call__(self, offsets: np.ndarray) -> np.ndarray:
        """Evaluate gamma on an (..., d) array of integer offsets."""
        offsets = np.asarray(offsets)
        if self.kind == "power":
            sq = np.sum(offsets.astype(float) ** 2, axis=-1)
            return self.scale * sq**self.hurst
        flat = offsets.reshape(-1, offsets.shape[-1])
        out = np.empty(flat.shape[0])
        for i, p in enumerate(flat):
            key = tuple(int(c) for c in p)
            try:
                out[i] = self.table[key]
            except KeyError:
                raise ModelError(f"variogram table does not cover offset {key}") from None
        return out.reshape(offsets.shape[:-1])


def load_variogram_table(path) -> Variogram:
    """Read a two-column text file: lattice offset, gamma value.

    Offsets with d > 1 are comma-separated integers without spaces, e.g.
    ``1,-2  0.75``.  Lines starting with '#' are skipped.
    """
    table = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ValueError(f"{path}:{lineno}: expected 'offset value'")
            offset = tuple(int(c) for c in parts[0].split(","))
            table[offset] = float(parts[1])
    return Variogram.from_table(table)


# ---------------------------------------------------------------------------
# Model base
# ---------------------------------------------------------------------------

_JITTERS = (0.0, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6)


class Model:
    """Base class for spectral model families.

    Subclasses must provide ``dim``, ``alpha`` and ``sample_theta``;
    ``sample_z`` defaults to the tail-to-spectral construction with uniform
    weights on a margin-enlarged box.
    """

    dim: int
    alpha: float = 1.0

    def sample_theta(self, w: Window, size: int, rng: np.random.Generator) -> np.ndarray:
        raise NotImplementedError

    def sample_z(self, w: Window, size: int, rng: np.random.Generator) -> np.ndarray:
        weights, support = uniform_weights(w.enlarged(self.z_margin(w)))
        return _prop2_batch(
            self.sample_theta, support, weights, w, size, rng, self.alpha
        )

    def z_margin(self, w: Window):
        """Weight-box margin for the generic Z construction (per spec default:
        the window enlarged by its own side lengths)."""
        return w.shape

    def sample_x_exact(
        self, w: Window, size: int, rng: np.random.Generator
    ) -> Optional[np.ndarray]:
        """Exact simulation of the max-stable field where a closed form exists."""
        return None

    @property
    def prefers_tail_max(self) -> bool:
        """Whether block-maximum expectations should use the tail-counting
        identity instead of direct spectral draws.  True for Gaussian-based
        models, whose origin-anchored spectral field turns E[max Z] into a
        rare-event expectation; sparse constructions sample it directly."""
        return True

    def _check_window(self, w: Window, need_origin: bool = True) -> None:
        if w.dim != self.dim:
            raise UsageError(f"window dim {w.dim} != model dim {self.dim}")
        if need_origin and not w.contains(origin(self.dim)):
            raise UsageError("window must contain the origin")


def uniform_weights(box: Window):
    """Uniform probability weights on every point of a box."""
    n = box.npoints
    return np.full(n, 1.0 / n), box


# ---------------------------------------------------------------------------
# Brown-Resnick
# ---------------------------------------------------------------------------


@dataclass
class BrownResnick(Model):
    """Theta(t) = exp(W(t) - gamma(t)/2), W centered Gaussian, W(0) = 0,
    Cov(W(s), W(t)) = (gamma(s) + gamma(t) - gamma(t - s)) / 2.

    Since Z(0) = 1 almost surely the same sampler serves as Z.
    """

    variogram: Variogram
    dim: int = 1
    alpha: float = 1.0
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if self.alpha != 1.0:
            raise UsageError("Brown-Resnick model is implemented for alpha = 1")

    def _factor(self, w: Window):
        key = (w.lower, w.upper)
        if key not in self._cache:
            pts = w.points
            gam = self.variogram(pts)
            diffs = pts[:, None, :] - pts[None, :, :]
            cov = 0.5 * (gam[:, None] + gam[None, :] - self.variogram(diffs))
            keep = np.arange(w.npoints) != w.origin_index
            sub = cov[np.ix_(keep, keep)]
            chol = None
            for jit in _JITTERS:
                try:
                    chol = np.linalg.cholesky(sub + jit * np.eye(sub.shape[0]))
                    break
                except np.linalg.LinAlgError:
                    continue
            if chol is None:
                raise ModelError(
                    "covariance induced by the variogram is not positive "
                    "semi-definite (jitter up to 1e-6 exhausted)"
                )
            self._cache[key] = (gam, keep, chol)
        return self._cache[key]

    def sample_theta(self, w, size, rng):
        self._check_window(w)
        gam, keep, chol = self._factor(w)
        normals = rng.standard_normal((size, chol.shape[0]))
        walk = np.zeros((size, w.npoints))
        walk[:, keep] = normals @ chol.T
        out = np.exp(walk - 0.5 * gam)
        out[:, w.origin_index] = 1.0
        return out

    def sample_z(self, w, size, rng):
        return self.sample_theta(w, size, rng)


# ---------------------------------------------------------------------------
# Summable-sequence model (moving maxima)
# ---------------------------------------------------------------------------


@dataclass
class Sequence(Model):
    """Theta(i) = c_{i+S} / c_S with P(S = i) = c_i^alpha / C."""

    coeffs: dict
    alpha: float = 1.0
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")
        cleaned = {}
        for k, v in self.coeffs.items():
            p = as_point(k if isinstance(k, tuple) else (k,))
            v = float(v)
            if v < 0:
                raise ValueError("coefficients must be non-negative")
            if v > 0:
                cleaned[p] = v
        if not cleaned:
            raise ModelError("sequence model needs at least one positive coefficient")
        dims = {len(p) for p in cleaned}
        if len(dims) != 1:
            raise ValueError("coefficient offsets must share a dimension")
        self.coeffs = cleaned
        self.dim = dims.pop()
        self._support = np.array(sorted(cleaned), dtype=int)
        self._cvals = np.array([cleaned[tuple(p)] for p in self._support], dtype=float)
        self._calpha = self._cvals**self.alpha
        self._total = float(self._calpha.sum())
        self._probs = self._calpha / self._total

    @property
    def total_alpha_mass(self) -> float:
        """C = sum of c_i^alpha."""
        return self._total

    def support_radius(self) -> tuple:
        lo = self._support.min(axis=0)
        hi = self._support.max(axis=0)
        return tuple(int(h - l) for l, h in zip(lo, hi))

    def _atoms(self, w: Window) -> np.ndarray:
        """(n_atoms, npoints) matrix of Theta values, one row per S-atom."""
        key = (w.lower, w.upper)
        if key not in self._cache:
            pts = w.points
            rows = np.zeros((len(self._support), w.npoints))
            for k, s in enumerate(self._support):
                cs = self._cvals[k]
                for j, p in enumerate(pts):
                    rows[k, j] = self.coeffs.get(tuple(p + s), 0.0) / cs
            self._cache[key] = rows
        return self._cache[key]

    def sample_theta(self, w, size, rng):
        self._check_window(w)
        atoms = self._atoms(w)
        draws = rng.choice(len(self._support), size=size, p=self._probs)
        return atoms[draws]

    def z_margin(self, w):
        # Exactness on the window only needs the cluster influence range;
        # keeps the weight box small for large windows.
        return tuple(2 * r + 1 for r in self.support_radius())

    @property
    def prefers_tail_max(self) -> bool:
        return False

    def sample_x_exact(self, w, size, rng):
        """Moving-maximum form: X(t) = max_i V_i (c_{t-i}^alpha / C)^(1/alpha)
        with iid alpha-Frechet V_i over all cluster positions reaching w."""
        self._check_window(w, need_origin=False)
        lo = tuple(
            w.lower[j] - int(self._support[:, j].max()) for j in range(self.dim)
        )
        hi = tuple(
            w.upper[j] - int(self._support[:, j].min()) for j in range(self.dim)
        )
        ibox = Window(lo, hi)
        u = rng.random((size, ibox.npoints))
        np.copyto(u, 0.5, where=(u == 0))
        v = (-np.log(u)) ** (-1.0 / self.alpha)
        out = np.zeros((size, w.npoints))
        strides = lex_strides(ibox.shape)
        base = (w.points - np.asarray(ibox.lower)) @ strides
        shift = self._support @ strides
        for k in range(len(self._support)):
            weight = (self._calpha[k] / self._total) ** (1.0 / self.alpha)
            cols = base - shift[k]
            np.maximum(out, v[:, cols] * weight, out=out)
        return out


def exact_sequence_theta(m: Sequence) -> float:
    """Closed-form extremal index of the sequence model: max_t c_t^alpha / C."""
    return float(m._calpha.max() / m.total_alpha_mass)


# ---------------------------------------------------------------------------
# Independent, alternating, product, mixture
# ---------------------------------------------------------------------------


@dataclass
class Independent(Model):
    """Field of iid Frechet values; Theta(t) = 1(t = 0) deterministically."""

    dim: int = 1
    alpha: float = 1.0

    def sample_theta(self, w, size, rng):
        self._check_window(w)
        out = np.zeros((size, w.npoints))
        out[:, w.origin_index] = 1.0
        return out

    def sample_z(self, w, size, rng):
        # Closed form of the tail-to-spectral construction for a point-mass
        # tail field: Z(t) = (1/q_t) 1(t = N).
        weights, support = uniform_weights(w.enlarged(self.z_margin(w)))
        draws = rng.choice(support.npoints, size=size, p=weights)
        out = np.zeros((size, w.npoints))
        pts = support.points[draws]
        inside = np.all((pts >= w.lower) & (pts <= w.upper), axis=1)
        cols = (pts[inside] - np.asarray(w.lower)) @ lex_strides(w.shape)
        out[np.flatnonzero(inside), cols] = (1.0 / weights[draws[inside]]) ** (
            1.0 / self.alpha
        )
        return out

    def sample_x_exact(self, w, size, rng):
        u = rng.random((size, w.npoints))
        np.copyto(u, 0.5, where=(u == 0))
        return (-np.log(u)) ** (-1.0 / self.alpha)

    @property
    def prefers_tail_max(self) -> bool:
        return False

    def _as_sequence(self) -> Sequence:
        return Sequence({origin(self.dim): 1.0}, alpha=self.alpha)


@dataclass
class Alternating(Model):
    """Deterministic tail field on Z: 1 at even points, 0 at odd points.

    S(Theta) diverges on every sample, so the extremal index is 0; the
    estimators report divergence diagnostics rather than fail.
    """

    dim: int = 1
    alpha: float = 1.0

    def __post_init__(self):
        if self.dim != 1:
            raise UsageError("alternating model is one-dimensional")

    def sample_theta(self, w, size, rng):
        self._check_window(w)
        row = (w.points[:, 0] % 2 == 0).astype(float)
        return np.broadcast_to(row, (size, w.npoints)).copy()

    def sample_x_exact(self, w, size, rng):
        self._check_window(w, need_origin=False)
        u = rng.random((size, 2))
        np.copyto(u, 0.5, where=(u == 0))
        v = (-np.log(u)) ** (-1.0 / self.alpha)
        parity = np.abs(w.points[:, 0]) % 2
        return v[:, parity]

    @property
    def prefers_tail_max(self) -> bool:
        return False


@dataclass
class Product(Model):
    """Coordinate-split product: Theta(t) = Theta_1(t_1) Theta_2(t_2)."""

    left: Model
    right: Model

    def __post_init__(self):
        if self.left.alpha != self.right.alpha:
            raise UsageError("product factors must share alpha")
        self.dim = self.left.dim + self.right.dim
        self.alpha = self.left.alpha

    def _split(self, w: Window):
        k = self.left.dim
        return (
            Window(w.lower[:k], w.upper[:k]),
            Window(w.lower[k:], w.upper[k:]),
        )

    def sample_theta(self, w, size, rng):
        self._check_window(w)
        wl, wr = self._split(w)
        a = self.left.sample_theta(wl, size, rng)
        b = self.right.sample_theta(wr, size, rng)
        return (a[:, :, None] * b[:, None, :]).reshape(size, -1)

    def sample_z(self, w, size, rng):
        # The product of independent spectral fields of stationary factors
        # is again a valid spectral field for the product model.
        wl, wr = self._split(w)
        a = self.left.sample_z(wl, size, rng)
        b = self.right.sample_z(wr, size, rng)
        return (a[:, :, None] * b[:, None, :]).reshape(size, -1)

    @property
    def prefers_tail_max(self) -> bool:
        return self.left.prefers_tail_max or self.right.prefers_tail_max

    def _as_sequence(self) -> Optional[Sequence]:
        fl = getattr(self.left, "_as_sequence", lambda: None)()
        fr = getattr(self.right, "_as_sequence", lambda: None)()
        if fl is None or fr is None:
            return None
        coeffs = {
            s + t: cv * dv
            for s, cv in fl.coeffs.items()
            for t, dv in fr.coeffs.items()
        }
        return Sequence(coeffs, alpha=self.alpha)

    def sample_x_exact(self, w, size, rng):
        seq = self._as_sequence()
        if seq is None:
            return None
        return seq.sample_x_exact(w, size, rng)


@dataclass
class Mixture(Model):
    """X(t) = max(p eta_1(t), (1-p) eta_2(t)) for independent max-stable
    factors; the spectral tail field is the p-mixture of the factor tails."""

    p: float
    first: Model
    second: Model

    def __post_init__(self):
        if not 0 < self.p < 1:
            raise UsageError("mixture weight must lie in (0, 1)")
        if self.first.dim != self.second.dim:
            raise UsageError("mixture factors must share a dimension")
        if self.first.alpha != 1.0 or self.second.alpha != 1.0:
            raise UsageError("mixture is implemented for alpha = 1")
        self.dim = self.first.dim
        self.alpha = 1.0

    def sample_theta(self, w, size, rng):
        self._check_window(w)
        pick = rng.random(size) < self.p
        out = np.empty((size, w.npoints))
        n1 = int(pick.sum())
        if n1:
            out[pick] = self.first.sample_theta(w, n1, rng)
        if size - n1:
            out[~pick] = self.second.sample_theta(w, size - n1, rng)
        return out

    def sample_z(self, w, size, rng):
        # Randomized spectral function: 2p Z_1 or 2(1-p) Z_2 with equal
        # probability keeps E Z = 1 and reproduces the mixture exponent.
        pick = rng.random(size) < 0.5
        out = np.empty((size, w.npoints))
        n1 = int(pick.sum())
        if n1:
            out[pick] = 2.0 * self.p * self.first.sample_z(w, n1, rng)
        if size - n1:
            out[~pick] = 2.0 * (1.0 - self.p) * self.second.sample_z(w, size - n1, rng)
        return out

    def sample_x_exact(self, w, size, rng):
        x1 = self.first.sample_x_exact(w, size, rng)
        if x1 is None:
            return None
        x2 = self.second.sample_x_exact(w, size, rng)
        if x2 is None:
            return None
        return np.maximum(self.p * x1, (1.0 - self.p) * x2)

    @property
    def prefers_tail_max(self) -> bool:
        return self.first.prefers_tail_max or self.second.prefers_tail_max


@dataclass
class FromTail(Model):
    """Spectral model built from an arbitrary tail sampler via the
    tail-to-spectral construction, with explicit or uniform weights."""

    base: Model
    margin: Optional[tuple] = None
    weights: Optional[dict] = None

    def __post_init__(self):
        self.dim = self.base.dim
        self.alpha = self.base.alpha

    def sample_theta(self, w, size, rng):
        return self.base.sample_theta(w, size, rng)

    def z_margin(self, w):
        if self.margin is None:
            return w.shape
        if np.isscalar(self.margin):
            return (int(self.margin),) * self.dim
        return tuple(self.margin)

    def sample_z(self, w, size, rng):
        if self.weights is not None:
            support, weights = _weight_map_to_arrays(self.weights, self.dim)
            return _prop2_batch(
                self.sample_theta, support, weights, w, size, rng, self.alpha
            )
        weights, support = uniform_weights(w.enlarged(self.z_margin(w)))
        return _prop2_batch(
            self.sample_theta, support, weights, w, size, rng, self.alpha
        )

    @property
    def prefers_tail_max(self) -> bool:
        return False


# ---------------------------------------------------------------------------
# Tail-to-spectral construction
# ---------------------------------------------------------------------------


def _weight_map_to_arrays(weights: dict, dim: int):
    cleaned = {}
    for k, v in weights.items():
        p = as_point(k if isinstance(k, tuple) else (k,))
        val = float(v)
        if val <= 0:
            raise UsageError("tail-construction weights must be positive")
        cleaned[p] = val
    pts = sorted(cleaned)
    support = Window(
        tuple(min(p[j] for p in pts) for j in range(dim)),
        tuple(max(p[j] for p in pts) for j in range(dim)),
    )
    w = np.zeros(support.npoints)
    for p, val in cleaned.items():
        w[support.index_of(p)] = val
    return support, w / w.sum()


def _prop2_batch(
    theta_sampler: Callable,
    support: Window,
    weights: np.ndarray,
    w: Window,
    size: int,
    rng: np.random.Generator,
    alpha: float = 1.0,
    diag: Optional[dict] = None,
) -> np.ndarray:
    """Batch spectral draws Z_N(t) = B^N Y(t) / max_i q_i^(1/a) B^N Y(i)
    restricted to the event that the anchoring argmax equals N.

    `weights` are the probabilities q of the shift N over `support`; the
    argmax uses the weights q^(1/alpha) so that their alpha-powers sum to 1
    as the construction requires.  Exact on the window when the tail field
    has compact support and the margin covers its influence range.
    """
    if support.npoints != weights.shape[0]:
        raise UsageError("weight vector does not match support box")
    for j in range(w.dim):
        if support.lower[j] > w.lower[j] or support.upper[j] < w.upper[j]:
            raise UsageError("weight support must contain the evaluation window")
    hull = Window.hull(w, support)
    wy = Window(
        tuple(hull.lower[j] - support.upper[j] for j in range(w.dim)),
        tuple(hull.upper[j] - support.lower[j] for j in range(w.dim)),
    )
    strides = lex_strides(wy.shape)
    lower = np.asarray(wy.lower)
    cols_support = (support.points - lower) @ strides
    cols_window = (w.points - lower) @ strides
    argmax_w = weights ** (1.0 / alpha)

    out = np.empty((size, w.npoints))
    n_pass = 0
    n_edge = 0
    shell = support.shell_mask
    # Sub-batch so the gathered (rows x support) matrix stays small.
    step = max(64, int(4_000_000 / max(support.npoints, wy.npoints)))
    done = 0
    while done < size:
        m = min(step, size - done)
        draws = rng.choice(support.npoints, size=m, p=weights)
        u = rng.random(m)
        np.copyto(u, 0.5, where=(u == 0))
        pareto = u ** (-1.0 / alpha)
        theta = theta_sampler(wy, m, rng)
        y = pareto[:, None] * theta
        shift = support.points[draws] @ strides
        rows = np.arange(m)[:, None]
        scored = y[rows, cols_support[None, :] - shift[:, None]] * argmax_w[None, :]
        k = np.argmax(scored, axis=1)
        passed = k == draws
        # On the anchoring event the maximum sits at N, so the denominator
        # max_i q_i^(1/a) B^N Y(i) is the score at the drawn shift itself.
        den = scored[np.arange(m), draws]
        if not np.all(den > 0):
            raise AssertionError("anchoring score vanished despite Y(0) > 0")
        block = y[rows, cols_window[None, :] - shift[:, None]]
        block /= np.where(den > 0, den, 1.0)[:, None]
        block[~passed] = 0.0
        out[done : done + m] = block
        n_pass += int(passed.sum())
        n_edge += int(shell[k].sum())
        done += m
    if diag is not None:
        diag["anchor_pass"] = diag.get("anchor_pass", 0.0) + n_pass
        diag["anchor_on_support_edge"] = diag.get("anchor_on_support_edge", 0.0) + n_edge
    return out


def construct_spectral_from_tail(
    tail,
    p: dict,
    w: Window,
    rng: np.random.Generator,
) -> FieldSample:
    """One spectral-field draw from a tail sampler and a finite weight map.

    `tail` is a Model (its Theta sampler is used) or a callable
    ``(window, size, rng) -> array``.  The weight support must contain the
    evaluation window; weights are renormalized to sum to 1.
    """
    if isinstance(tail, Model):
        sampler, alpha, dim = tail.sample_theta, tail.alpha, tail.dim
    else:
        sampler, alpha, dim = tail, 1.0, w.dim
    support, weights = _weight_map_to_arrays(p, dim)
    for j in range(dim):
        if support.lower[j] > w.lower[j] or support.upper[j] < w.upper[j]:
            raise UsageError("weight support must contain the evaluation window")
    for pt in w.points:
        if weights[support.index_of(tuple(int(c) for c in pt))] <= 0:
            raise UsageError(f"weight map must be positive on the window (zero at {tuple(pt)})")
    values = _prop2_batch(sampler, support, weights, w, 1, rng, alpha)[0]
    return FieldSample(w, values, FieldTag.Z)


# ---------------------------------------------------------------------------
# Spec operations: per-sample wrappers and tilting
# ---------------------------------------------------------------------------


def sample_br_theta(v: Variogram, w: Window, rng, dim: Optional[int] = None) -> FieldSample:
    model = BrownResnick(v, dim=dim or w.dim)
    values = model.sample_theta(w, 1, rng)[0]
    return FieldSample(w, values, FieldTag.THETA).check_tag_invariant()


def sample_sequence_theta(m: Sequence, w: Window, rng) -> FieldSample:
    values = m.sample_theta(w, 1, rng)[0]
    return FieldSample(w, values, FieldTag.THETA).check_tag_invariant()


def sample_independent_theta(w: Window) -> FieldSample:
    model = Independent(dim=w.dim)
    values = model.sample_theta(w, 1, np.random.default_rng(0))[0]
    return FieldSample(w, values, FieldTag.THETA).check_tag_invariant()


def sample_alternating_theta(w: Window) -> FieldSample:
    model = Alternating()
    values = model.sample_theta(w, 1, np.random.default_rng(0))[0]
    return FieldSample(w, values, FieldTag.THETA).check_tag_invariant()


def sample_product_theta(spec: Product, w: Window, rng) -> FieldSample:
    values = spec.sample_theta(w, 1, rng)[0]
    return FieldSample(w, values, FieldTag.THETA).check_tag_invariant()


def sample_theta_anchored(model: Model, h: LatticePoint, w: Window, size, rng) -> np.ndarray:
    """Batch draws of Theta_h on w.

    For the stationary models implemented here Theta_h equals the shifted
    field B^h Theta in law, so this samples Theta on the back-shifted window
    and relabels the (identical) lexicographic layout.
    """
    h = as_point(h)
    if not w.contains(h):
        raise UsageError("anchor point must lie in the window")
    return model.sample_theta(w.shifted(neg(h)), size, rng)


def tilt_spectral_batch(model: Model, h: LatticePoint, w: Window, size, rng):
    """Importance representation of Theta_h: fields Z/Z(h) with weights
    Z(h)^alpha (weight 0 where Z(h) = 0)."""
    h = as_point(h)
    if not w.contains(h):
        raise UsageError("tilt point must lie in the window")
    z = model.sample_z(w, size, rng)
    zh = z[:, w.index_of(h)]
    weights = zh**model.alpha
    safe = np.where(zh > 0, zh, 1.0)
    fields = z / safe[:, None]
    fields[zh <= 0] = 0.0
    return fields, weights


def tilt_spectral(
    model: Model,
    h: LatticePoint,
    w: Window,
    rng,
    size: Optional[int] = None,
    resample: bool = False,
):
    """Weighted draw(s) of the tilted field Theta_h.

    Returns one Theta-tagged FieldSample anchored at h carrying the
    importance weight Z(h)^alpha, or a list of them when `size` is given.
    With ``resample=True`` performs a weighted bootstrap over the batch and
    returns unweighted draws instead.
    """
    n = 1 if size is None else int(size)
    fields, weights = tilt_spectral_batch(model, h, w, n, rng)
    if resample:
        total = weights.sum()
        if total <= 0:
            raise ModelError("all tilt weights vanished; cannot resample")
        idx = rng.choice(n, size=n, p=weights / total)
        out = [FieldSample(w, fields[i].copy(), FieldTag.THETA, weight=1.0) for i in idx]
    else:
        out = [
            FieldSample(w, fields[i], FieldTag.THETA, weight=float(weights[i]))
            for i in range(n)
        ]
    return out[0] if size is None else out


def sample_pareto(size: int, alpha: float, rng) -> np.ndarray:
    """alpha-Pareto draws: survival x^(-alpha) on [1, inf)."""
    u = rng.random(size)
    np.copyto(u, 0.5, where=(u == 0))
    return u ** (-1.0 / alpha)


def sample_y_batch(model: Model, w: Window, size, rng, alpha: Optional[float] = None):
    """Batch draws of the tail field Y = R * Theta."""
    alpha = model.alpha if alpha is None else alpha
    theta = model.sample_theta(w, size, rng)
    r = sample_pareto(size, alpha, rng)
    return r[:, None] * theta


def sample_Y(model: Model, w: Window, alpha, rng) -> FieldSample:
    values = sample_y_batch(model, w, 1, rng, alpha=alpha)[0]
    return FieldSample(w, values, FieldTag.Y).check_tag_invariant()


def sample_mixture_X(p: float, m1: Model, m2: Model, w: Window, rng, **kwargs) -> FieldSample:
    """Pointwise scaled maximum of two independently simulated fields."""
    from . import dehaan

    if not 0 < p < 1:
        raise UsageError("mixture weight must lie in (0, 1)")
    x1 = dehaan.simulate_field(m1, w, 1, rng, **kwargs)
    x2 = dehaan.simulate_field(m2, w, 1, rng, **kwargs)
    return FieldSample(w, np.maximum(p * x1[0], (1 - p) * x2[0]), FieldTag.X)

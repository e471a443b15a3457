"""Experiment configuration: TOML parsing, validation and serialization.

The format is a flat key-value file with one nested table per model family
(see README for the full schema).  Parsing is total: it returns a config
or raises ConfigError naming the offending field.
"""

from __future__ import annotations

import math
import os
import sys
from dataclasses import dataclass, field
from typing import Optional

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .lattice import Window
from .spectral import (
    Alternating,
    BrownResnick,
    FromTail,
    Independent,
    Mixture,
    Model,
    Product,
    Sequence,
    Variogram,
    load_variogram_table,
)

COMMANDS = ("theta", "verify", "fidi", "bound", "probe", "sweep")
FORMATS = ("json", "csv")
THETA_METHODS = (
    "ratio",
    "exceed",
    "anchor_first_max",
    "anchor_last_max",
    "anchor_first_exceed",
    "anchor_last_exceed",
    "difference",
    "pickands",
    "block",
)


class ConfigError(ValueError):
    def __init__(self, field: str, reason: str, line: Optional[int] = None):
        self.field = field
        self.reason = reason
        self.line = line
        loc = f" (line {line})" if line else ""
        super().__init__(f"config field '{field}': {reason}{loc}")


@dataclass
class ExperimentConfig:
    command: str
    seed: int
    replicates: int
    window: Window
    model: dict
    methods: list = field(default_factory=list)
    order: str = "lexicographic"
    format: str = "json"
    out: Optional[str] = None
    workers: int = 1
    params: dict = field(default_factory=dict)


def _require(table: dict, key: str, kind, fieldname: Optional[str] = None):
    fieldname = fieldname or key
    if key not in table:
        raise ConfigError(fieldname, "missing required field")
    value = table[key]
    if kind is int and isinstance(value, bool):
        raise ConfigError(fieldname, "expected an integer")
    if kind is float and isinstance(value, int) and not isinstance(value, bool):
        value = float(value)
    if not isinstance(value, kind):
        raise ConfigError(fieldname, f"expected {kind.__name__}")
    return value


def _parse_window(raw, fieldname="window") -> Window:
    if not isinstance(raw, list) or not raw:
        raise ConfigError(fieldname, "expected [lo, hi] or [[lo, hi], ...]")
    if all(isinstance(v, int) for v in raw):
        if len(raw) != 2:
            raise ConfigError(fieldname, "one-dimensional window needs exactly [lo, hi]")
        raw = [raw]
    lows, highs = [], []
    for pair in raw:
        if (
            not isinstance(pair, list)
            or len(pair) != 2
            or not all(isinstance(v, int) for v in pair)
        ):
            raise ConfigError(fieldname, "each dimension needs an integer [lo, hi]")
        lows.append(pair[0])
        highs.append(pair[1])
    try:
        return Window(tuple(lows), tuple(highs))
    except ValueError as exc:
        raise ConfigError(fieldname, str(exc)) from None


def _window_to_list(w: Window):
    if w.dim == 1:
        return [w.lower[0], w.upper[0]]
    return [[l, u] for l, u in zip(w.lower, w.upper)]


def parse_config(text: str, command_override: Optional[str] = None) -> ExperimentConfig:
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        line = getattr(exc, "lineno", None)
        raise ConfigError("<syntax>", str(exc), line) from None

    seed = _require(raw, "seed", int)
    replicates = raw.get("replicates", 10_000)
    if not isinstance(replicates, int) or isinstance(replicates, bool):
        raise ConfigError("replicates", "expected an integer")
    if replicates < 100:
        raise ConfigError("replicates", "must be at least 100")
    command = command_override or raw.get("command", "theta")
    if command not in COMMANDS:
        raise ConfigError("command", f"must be one of {', '.join(COMMANDS)}")
    window = _parse_window(_require(raw, "window", list))
    order = raw.get("order", "lexicographic")
    if order not in ("lexicographic", "reversed-lexicographic"):
        raise ConfigError("order", "must be lexicographic or reversed-lexicographic")
    fmt = raw.get("format", "json")
    if fmt not in FORMATS:
        raise ConfigError("format", f"must be one of {', '.join(FORMATS)}")
    out = raw.get("out")
    if out is not None and not isinstance(out, str):
        raise ConfigError("out", "expected a path string")
    workers = raw.get("workers", os.cpu_count() or 1)
    if not isinstance(workers, int) or isinstance(workers, bool) or workers < 1:
        raise ConfigError("workers", "expected a positive integer")

    model = _require(raw, "model", dict)
    _validate_model_spec(model, "model")

    methods = []
    params: dict = {}
    if command == "theta":
        section = raw.get("theta", {})
        methods = section.get("methods", ["ratio", "exceed", "anchor_first_max"])
        if not isinstance(methods, list) or not methods:
            raise ConfigError("theta.methods", "expected a non-empty list")
        for m in methods:
            if m not in THETA_METHODS:
                raise ConfigError("theta.methods", f"unknown method {m!r}")
        params = {
            "block_n": section.get("block_n", 100_000),
            "block_r": section.get("block_r", 100),
            "block_tau": section.get("block_tau", 1.0),
            "pickands_n": section.get("pickands_n", 20),
        }
    elif command == "verify":
        section = raw.get("verify", {})
        kinds = section.get("kinds", ["tsf_z", "tsf_theta", "tilt"])
        for k in kinds:
            if k not in ("tsf_z", "tsf_theta", "tilt"):
                raise ConfigError("verify.kinds", f"unknown check kind {k!r}")
        params = {
            "kinds": kinds,
            "checks_per_kind": section.get("checks_per_kind", 5),
        }
    elif command == "fidi":
        section = raw.get("fidi", {})
        pts = section.get("points")
        thresholds = section.get("thresholds")
        if not isinstance(pts, list) or not pts:
            raise ConfigError("fidi.points", "expected a non-empty list of points")
        if not isinstance(thresholds, list) or len(thresholds) != len(pts):
            raise ConfigError("fidi.thresholds", "must match the number of points")
        norm_pts = []
        for p in pts:
            if isinstance(p, int):
                norm_pts.append([p])
            elif isinstance(p, list) and all(isinstance(v, int) for v in p):
                norm_pts.append(list(p))
            else:
                raise ConfigError("fidi.points", "points must be ints or int lists")
        xs = []
        for t in thresholds:
            if not isinstance(t, (int, float)) or (isinstance(t, float) and t != t):
                raise ConfigError("fidi.thresholds", "thresholds must be numbers")
            if not t > 0:
                raise ConfigError("fidi.thresholds", "thresholds must be positive")
            xs.append(float(t))
        params = {"points": norm_pts, "thresholds": xs}
    elif command == "bound":
        section = raw.get("bound", {})
        support = section.get("support")
        params = {
            "support": _window_to_list(_parse_window(support, "bound.support"))
            if support is not None
            else _window_to_list(window)
        }
    elif command == "probe":
        section = raw.get("probe", {})
        m_values = section.get("m_values", [1, 2, 4, 8])
        if not isinstance(m_values, list) or not all(
            isinstance(v, int) and v >= 0 for v in m_values
        ):
            raise ConfigError("probe.m_values", "expected non-negative integers")
        params = {"m_values": m_values}
    elif command == "sweep":
        section = raw.get("sweep", {})
        n_values = section.get("n_values", [5, 10, 20, 40])
        if not isinstance(n_values, list) or not all(
            isinstance(v, int) and v >= 1 for v in n_values
        ):
            raise ConfigError("sweep.n_values", "expected positive integers")
        params = {"n_values": n_values}

    return ExperimentConfig(
        command=command,
        seed=seed,
        replicates=replicates,
        window=window,
        model=model,
        methods=list(methods),
        order=order,
        format=fmt,
        out=out,
        workers=workers,
        params=params,
    )


def _validate_model_spec(spec: dict, where: str) -> None:
    family = spec.get("family")
    if family is None:
        raise ConfigError(f"{where}.family", "missing required field")
    if family == "brown_resnick":
        vario = spec.get("variogram")
        if not isinstance(vario, dict):
            raise ConfigError(f"{where}.variogram", "missing variogram table")
        kind = vario.get("kind", "power")
        if kind == "power":
            scale = vario.get("scale", 1.0)
            hurst = vario.get("hurst", 0.5)
            if not isinstance(scale, (int, float)) or not scale > 0:
                raise ConfigError(f"{where}.variogram.scale", "must be positive")
            if not isinstance(hurst, (int, float)) or not 0 < hurst <= 1:
                raise ConfigError(f"{where}.variogram.hurst", "must lie in (0, 1]")
        elif kind == "table":
            if "path" not in vario and "values" not in vario:
                raise ConfigError(
                    f"{where}.variogram", "table variogram needs 'path' or 'values'"
                )
        else:
            raise ConfigError(f"{where}.variogram.kind", f"unknown kind {kind!r}")
    elif family == "sequence":
        coeffs = spec.get("coeffs")
        if not isinstance(coeffs, dict) or not coeffs:
            raise ConfigError(f"{where}.coeffs", "sequence model needs coefficients")
        alpha = spec.get("alpha", 1.0)
        if not isinstance(alpha, (int, float)) or not alpha > 0:
            raise ConfigError(f"{where}.alpha", "must be positive")
    elif family in ("independent", "alternating"):
        pass
    elif family == "product":
        for side in ("left", "right"):
            sub = spec.get(side)
            if not isinstance(sub, dict):
                raise ConfigError(f"{where}.{side}", "product needs two sub-models")
            _validate_model_spec(sub, f"{where}.{side}")
    elif family == "mixture":
        p = spec.get("p")
        if not isinstance(p, (int, float)) or not 0 < p < 1:
            raise ConfigError(f"{where}.p", "mixture weight must lie in (0, 1)")
        for side in ("first", "second"):
            sub = spec.get(side)
            if not isinstance(sub, dict):
                raise ConfigError(f"{where}.{side}", "mixture needs two sub-models")
            _validate_model_spec(sub, f"{where}.{side}")
    elif family == "from_tail":
        sub = spec.get("base")
        if not isinstance(sub, dict):
            raise ConfigError(f"{where}.base", "from_tail needs a base model")
        _validate_model_spec(sub, f"{where}.base")
    else:
        raise ConfigError(f"{where}.family", f"unknown model family {family!r}")


def _parse_offset(key: str) -> tuple:
    try:
        return tuple(int(c) for c in str(key).split(","))
    except ValueError:
        raise ConfigError("model.coeffs", f"bad lattice offset {key!r}") from None


def build_model(spec: dict, dim: int) -> Model:
    """Instantiate the model described by a validated spec table."""
    family = spec["family"]
    if family == "brown_resnick":
        vario = spec["variogram"]
        if vario.get("kind", "power") == "power":
            v = Variogram.power(float(vario.get("scale", 1.0)), float(vario.get("hurst", 0.5)))
        elif "path" in vario:
            v = load_variogram_table(vario["path"])
        else:
            v = Variogram.from_table({_parse_offset(k): val for k, val in vario["values"].items()})
        return BrownResnick(v, dim=dim)
    if family == "sequence":
        coeffs = {_parse_offset(k): float(val) for k, val in spec["coeffs"].items()}
        return Sequence(coeffs, alpha=float(spec.get("alpha", 1.0)))
    if family == "independent":
        return Independent(dim=int(spec.get("dim", dim)))
    if family == "alternating":
        return Alternating()
    if family == "product":
        left = build_model(spec["left"], spec["left"].get("dim", 1))
        right = build_model(spec["right"], spec["right"].get("dim", 1))
        return Product(left, right)
    if family == "mixture":
        return Mixture(
            float(spec["p"]),
            build_model(spec["first"], dim),
            build_model(spec["second"], dim),
        )
    if family == "from_tail":
        base = build_model(spec["base"], dim)
        margin = spec.get("margin")
        if margin is not None:
            margin = tuple(margin) if isinstance(margin, list) else int(margin)
        return FromTail(base, margin=margin)
    raise ConfigError("model.family", f"unknown model family {family!r}")


# ---------------------------------------------------------------------------
# Serialization (round-trip: parse(serialize(cfg)) == cfg)
# ---------------------------------------------------------------------------


def _toml_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int,)):
        return str(v)
    if isinstance(v, float):
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return repr(v)
    if isinstance(v, str):
        escaped = v.replace("\\", "\\\\").replace('"', '\\"')
        return f'"{escaped}"'
    if isinstance(v, list):
        return "[" + ", ".join(_toml_value(x) for x in v) + "]"
    raise TypeError(f"cannot serialize {type(v)}")


def _emit_table(lines: list, name: str, table: dict) -> None:
    scalars = {k: v for k, v in table.items() if not isinstance(v, dict)}
    subtables = {k: v for k, v in table.items() if isinstance(v, dict)}
    lines.append(f"[{name}]")
    for k, v in scalars.items():
        key = k if k.replace("_", "").replace("-", "").isalnum() and "," not in k else f'"{k}"'
        lines.append(f"{key} = {_toml_value(v)}")
    for k, v in subtables.items():
        lines.append("")
        _emit_table(lines, f"{name}.{k}", v)


def serialize_config(cfg: ExperimentConfig) -> str:
    lines = [
        f"command = {_toml_value(cfg.command)}",
        f"seed = {cfg.seed}",
        f"replicates = {cfg.replicates}",
        f"window = {_toml_value(_window_to_list(cfg.window))}",
        f"order = {_toml_value(cfg.order)}",
        f"format = {_toml_value(cfg.format)}",
        f"workers = {cfg.workers}",
    ]
    if cfg.out is not None:
        lines.append(f"out = {_toml_value(cfg.out)}")
    if cfg.command == "theta":
        lines.append("")
        lines.append("[theta]")
        lines.append(f"methods = {_toml_value(cfg.methods)}")
        for k, v in cfg.params.items():
            lines.append(f"{k} = {_toml_value(v)}")
    elif cfg.params:
        lines.append("")
        lines.append(f"[{cfg.command}]")
        for k, v in cfg.params.items():
            lines.append(f"{k} = {_toml_value(v)}")
    lines.append("")
    _emit_table(lines, "model", cfg.model)
    return "\n".join(lines) + "\n"

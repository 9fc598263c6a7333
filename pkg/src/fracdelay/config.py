"""Run configuration: YAML text in, validated frozen dataclasses out.

Every problem found during validation is collected with its field path
and reported at once in a single :class:`ValidationError`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np
import yaml

from .basis import AxisKind, AxisSpec, check_axis_order
from .errors import ParseError, ValidationError
from .stepper import Multiplier

__all__ = [
    "SpatialData",
    "TemporalProfile",
    "SeparableTerm",
    "ProblemSpec",
    "DataSpec",
    "Numerics",
    "OutputSpec",
    "RunConfig",
    "parse_config",
    "load_config",
]

SPATIAL_PRESETS = ("zero", "eigenmode", "sine")
TEMPORAL_KINDS = ("constant", "polynomial", "exponential", "sine")
MULTIPLIER_KINDS = ("scaled", "power", "polynomial", "zero")


@dataclass(frozen=True)
class SpatialData:
    """A spatial field given as a preset, explicit mode coefficients or grid samples.

    ``kind`` is one of ``zero``, ``eigenmode``, ``sine``, ``modes``, ``grid``.
    """

    kind: str
    modes: tuple[tuple[tuple[int, ...], complex], ...] = ()
    k: tuple[int, ...] = ()
    amplitude: complex = 1.0
    grid: np.ndarray | None = field(default=None, compare=False)

    @property
    def is_zero(self) -> bool:
        if self.kind == "zero":
            return True
        if self.kind in ("eigenmode", "sine"):
            return self.amplitude == 0
        if self.kind == "modes":
            return all(v == 0 for _, v in self.modes)
        return not np.any(self.grid)


@dataclass(frozen=True)
class TemporalProfile:
    """``constant``: c; ``polynomial``: sum c_k t^k; ``exponential``: A e^(r t);
    ``sine``: A sin(w t + p)."""

    kind: str
    params: tuple[float, ...]

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        p = self.params
        if self.kind == "constant":
            return np.full(t.shape, p[0])[()]
        if self.kind == "polynomial":
            return np.polynomial.polynomial.polyval(t, p)[()]
        if self.kind == "exponential":
            return (p[0] * np.exp(p[1] * t))[()]
        return (p[0] * np.sin(p[1] * t + p[2]))[()]

    @property
    def polynomial_coeffs(self) -> tuple[float, ...] | None:
        if self.kind == "constant":
            return (self.params[0],)
        if self.kind == "polynomial":
            return self.params
        return None


@dataclass(frozen=True)
class SeparableTerm:
    spatial: SpatialData
    temporal: TemporalProfile


@dataclass(frozen=True)
class ProblemSpec:
    alpha: float
    tau: float
    horizon: float
    axes: tuple[AxisSpec, ...]
    B: Multiplier
    C: Multiplier

    @property
    def l(self) -> int:
        return max(0, math.ceil(self.alpha))


@dataclass(frozen=True)
class DataSpec:
    """``initial[i]`` is the (i+1)-th fractional start value; the prehistory
    terms use the temporal variable ``t + tau`` and must be polynomial."""

    initial: tuple[SpatialData, ...]
    prehistory: tuple[SeparableTerm, ...] = ()
    forcing: tuple[SeparableTerm, ...] = ()


@dataclass(frozen=True)
class Numerics:
    M: int = 8
    grid: tuple[int, ...] = ()
    panel_order: int = 12
    hmax: float | None = None
    time_samples: int = 33
    oracle: bool = False
    oracle_h: float | None = None
    oracle_modes: int = 4
    existence_M: tuple[int, ...] = ()
    residual_samples: int = 2


@dataclass(frozen=True)
class OutputSpec:
    directory: str = "."
    solution: str = "solution.csv"
    diagnostics: str = "diagnostics.json"
    provenance: str = "provenance.json"


@dataclass(frozen=True)
class RunConfig:
    problem: ProblemSpec
    data: DataSpec
    numerics: Numerics
    output: OutputSpec
    warnings: tuple[str, ...] = ()
    raw: dict = field(default_factory=dict, compare=False)


# {{{ parsing helpers


class _Collector:
    def __init__(self) -> None:
        self.problems: list[str] = []

    def add(self, path: str, msg: str) -> None:
        self.problems.append(f"{path}: {msg}")

    def number(self, node: dict, key: str, path: str, *, default=None, required=False):
        if key not in node or node[key] is None:
            if required:
                self.add(f"{path}.{key}", "missing")
            return default
        val = node[key]
        if isinstance(val, bool) or not isinstance(val, (int, float)):
            self.add(f"{path}.{key}", f"expected a number, got {val!r}")
            return default
        if not math.isfinite(val):
            self.add(f"{path}.{key}", "must be finite")
            return default
        return float(val)

    def mapping(self, node: Any, path: str) -> dict:
        if node is None:
            return {}
        if not isinstance(node, dict):
            self.add(path, f"expected a mapping, got {type(node).__name__}")
            return {}
        return node


def _complex(val, c: _Collector, path: str) -> complex:
    if isinstance(val, (list, tuple)) and len(val) == 2 and all(
        isinstance(v, (int, float)) and not isinstance(v, bool) for v in val
    ):
        return complex(val[0], val[1])
    if isinstance(val, (int, float)) and not isinstance(val, bool):
        return complex(val)
    c.add(path, f"expected a number or [re, im], got {val!r}")
    return 0j


def _int_list(val, c: _Collector, path: str, n: int) -> tuple[int, ...]:
    if not isinstance(val, (list, tuple)) or not all(
        isinstance(v, int) and not isinstance(v, bool) for v in val
    ):
        c.add(path, f"expected a list of integers, got {val!r}")
        return ()
    if len(val) != n:
        c.add(path, f"expected {n} entries (one per axis), got {len(val)}")
        return ()
    return tuple(val)


def _spatial(node, c: _Collector, path: str, n_axes: int) -> SpatialData:
    if node is None:
        return SpatialData("zero")
    node = c.mapping(node, path)
    if "preset" in node:
        preset = node["preset"]
        if preset not in SPATIAL_PRESETS:
            c.add(f"{path}.preset", f"unknown preset {preset!r}; choose from {SPATIAL_PRESETS}")
            return SpatialData("zero")
        if preset == "zero":
            return SpatialData("zero")
        amp = _complex(node.get("amplitude", 1.0), c, f"{path}.amplitude")
        key = "m" if preset == "eigenmode" else "k"
        if key not in node:
            c.add(f"{path}.{key}", "missing")
            return SpatialData("zero")
        idx = _int_list(node[key], c, f"{path}.{key}", n_axes)
        if preset == "eigenmode":
            return SpatialData("modes", modes=((idx, amp),)) if idx else SpatialData("zero")
        return SpatialData("sine", k=idx, amplitude=amp)
    if "modes" in node:
        entries = node["modes"]
        if not isinstance(entries, list):
            c.add(f"{path}.modes", "expected a list of {m, value} entries")
            return SpatialData("zero")
        out = []
        for i, e in enumerate(entries):
            e = c.mapping(e, f"{path}.modes[{i}]")
            if "m" not in e:
                c.add(f"{path}.modes[{i}].m", "missing")
                continue
            idx = _int_list(e["m"], c, f"{path}.modes[{i}].m", n_axes)
            val = _complex(e.get("value", 0.0), c, f"{path}.modes[{i}].value")
            if idx:
                out.append((idx, val))
        return SpatialData("modes", modes=tuple(out))
    if "grid" in node:
        g = node["grid"]
        try:
            if isinstance(g, dict) and "file" in g:
                arr = np.load(g["file"])
            else:
                arr = np.asarray(g.get("values") if isinstance(g, dict) else g, dtype=complex)
        except (OSError, ValueError, TypeError) as exc:
            c.add(f"{path}.grid", f"cannot read grid samples ({exc})")
            return SpatialData("zero")
        if arr.ndim != n_axes:
            c.add(f"{path}.grid", f"expected a {n_axes}-dimensional array, got {arr.ndim}")
            return SpatialData("zero")
        if np.all(arr.imag == 0):
            arr = arr.real
        return SpatialData("grid", grid=arr)
    c.add(path, "spatial data needs one of 'preset', 'modes' or 'grid'")
    return SpatialData("zero")


def _temporal(node, c: _Collector, path: str) -> TemporalProfile:
    node = c.mapping(node, path)
    kind = node.get("kind", "constant")
    if kind not in TEMPORAL_KINDS:
        c.add(f"{path}.kind", f"unknown temporal profile {kind!r}; choose from {TEMPORAL_KINDS}")
        return TemporalProfile("constant", (0.0,))
    if kind == "constant":
        return TemporalProfile(kind, (c.number(node, "value", path, default=1.0),))
    if kind == "polynomial":
        coeffs = node.get("coeffs")
        if not isinstance(coeffs, list) or not coeffs or not all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in coeffs
        ):
            c.add(f"{path}.coeffs", "expected a non-empty list of numbers")
            return TemporalProfile("constant", (0.0,))
        return TemporalProfile(kind, tuple(float(v) for v in coeffs))
    amp = c.number(node, "amplitude", path, default=1.0)
    if kind == "exponential":
        return TemporalProfile(kind, (amp, c.number(node, "rate", path, required=True, default=0.0)))
    return TemporalProfile(
        kind,
        (
            amp,
            c.number(node, "omega", path, required=True, default=0.0),
            c.number(node, "phase", path, default=0.0),
        ),
    )


def _terms(node, c: _Collector, path: str, n_axes: int, *, polynomial_only=False):
    if node is None:
        return ()
    if not isinstance(node, list):
        c.add(path, "expected a list of {spatial, temporal} terms")
        return ()
    out = []
    for i, e in enumerate(node):
        p = f"{path}[{i}]"
        e = c.mapping(e, p)
        term = SeparableTerm(
            _spatial(e.get("spatial"), c, f"{p}.spatial", n_axes),
            _temporal(e.get("temporal", {"kind": "constant", "value": 1.0}), c, f"{p}.temporal"),
        )
        if polynomial_only and term.temporal.polynomial_coeffs is None:
            c.add(f"{p}.temporal.kind", "prehistory profiles must be constant or polynomial")
        out.append(term)
    return tuple(out)


def _axes(node, c: _Collector) -> tuple[AxisSpec, ...]:
    if not isinstance(node, list) or not node:
        c.add("problem.axes", "expected a non-empty list of axes")
        return ()
    out = []
    for j, a in enumerate(node):
        p = f"problem.axes[{j}]"
        a = c.mapping(a, p)
        kind = a.get("kind")
        try:
            kind = AxisKind(kind)
        except ValueError:
            c.add(f"{p}.kind", f"unknown axis kind {kind!r}")
            continue
        s = c.number(a, "s", p, default=0.0)
        if s < 0:
            c.add(f"{p}.s", "Sobolev exponent must be >= 0")
            s = 0.0
        if kind is AxisKind.NONLOCAL:
            aj = c.number(a, "alpha", p, required=True)
            bj = c.number(a, "beta", p, required=True)
            if aj is None or bj is None:
                continue
            if aj == 0 or bj == 0:
                c.add(p, "nonlocal axis needs nonzero alpha and beta")
                continue
            if abs(aj) == abs(bj):
                c.add(p, f"|alpha| = |beta| = {abs(aj):g} forbidden (basis hypothesis |alpha_j| != |beta_j|)")
                continue
            out.append(AxisSpec.nonlocal_(aj, bj, s))
        elif kind is AxisKind.PERIODIC:
            out.append(AxisSpec.periodic(s))
        else:
            out.append(AxisSpec.dirichlet(s))
    if len(out) == len(node):
        for msg in check_axis_order(out):
            c.problems.append("problem." + msg)
    return tuple(out)


def _multiplier(node, c: _Collector, path: str) -> Multiplier:
    if node is None:
        c.add(path, "missing")
        return Multiplier.zero()
    node = c.mapping(node, path)
    kind = node.get("kind")
    if kind not in MULTIPLIER_KINDS:
        c.add(f"{path}.kind", f"unknown multiplier kind {kind!r}; choose from {MULTIPLIER_KINDS}")
        return Multiplier.zero()
    if kind == "zero":
        return Multiplier.zero()
    if kind == "scaled":
        return Multiplier.scaled(c.number(node, "coeff", path, required=True, default=0.0))
    if kind == "power":
        return Multiplier.power(
            c.number(node, "coeff", path, required=True, default=0.0),
            c.number(node, "exponent", path, required=True, default=0.0),
        )
    coeffs = node.get("coeffs")
    if not isinstance(coeffs, list) or not coeffs:
        c.add(f"{path}.coeffs", "expected a non-empty list of numbers")
        return Multiplier.zero()
    return Multiplier.polynomial(*[float(v) for v in coeffs])


# }}}


def parse_config(text: str) -> RunConfig:
    """Parse and validate YAML text."""
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ParseError(f"malformed configuration: {exc}") from exc
    if not isinstance(raw, dict):
        raise ParseError("configuration root must be a mapping")
    c = _Collector()
    warnings: list[str] = []

    prob = c.mapping(raw.get("problem"), "problem")
    if "problem" not in raw:
        c.add("problem", "missing")
    alpha = c.number(prob, "alpha", "problem", required=True, default=1.0)
    tau = c.number(prob, "tau", "problem", required=True, default=1.0)
    horizon = c.number(prob, "T", "problem", required=True, default=1.0)
    if alpha is not None and not 0 < alpha <= 2:
        c.add("problem.alpha", f"order must lie in (0, 2], got {alpha:g}")
    if tau is not None and tau <= 0:
        c.add("problem.tau", f"delay must be positive, got {tau:g}")
    if horizon is not None and horizon <= 0:
        c.add("problem.T", f"horizon must be positive, got {horizon:g}")
    axes = _axes(prob.get("axes"), c)
    B = _multiplier(prob.get("B"), c, "problem.B")
    C = _multiplier(prob.get("C", {"kind": "zero"}), c, "problem.C")
    n_axes = len(axes) or len(prob.get("axes") or []) or 1
    bound = 2.0 + n_axes / 2.0
    for j, ax in enumerate(axes):
        if ax.s <= bound:
            warnings.append(f"problem.axes[{j}].s: {ax.s:g} does not exceed 2 + N/2 = {bound:g}")
    problem = ProblemSpec(alpha, tau, horizon, axes, B, C)

    data_node = c.mapping(raw.get("data"), "data")
    l = max(1, math.ceil(alpha)) if alpha and alpha > 0 else 1
    init_node = data_node.get("initial")
    if init_node is None:
        initial = tuple(SpatialData("zero") for _ in range(l))
    elif not isinstance(init_node, list) or len(init_node) != l:
        c.add("data.initial", f"expected a list of {l} start values for alpha = {alpha:g}")
        initial = tuple(SpatialData("zero") for _ in range(l))
    else:
        initial = tuple(_spatial(v, c, f"data.initial[{i}]", n_axes) for i, v in enumerate(init_node))
    data = DataSpec(
        initial,
        _terms(data_node.get("prehistory"), c, "data.prehistory", n_axes, polynomial_only=True),
        _terms(data_node.get("forcing"), c, "data.forcing", n_axes),
    )

    num = c.mapping(raw.get("numerics"), "numerics")
    M = num.get("M", 8)
    if not isinstance(M, int) or isinstance(M, bool) or M < 1:
        c.add("numerics.M", f"truncation radius must be a positive integer, got {M!r}")
        M = 1
    grid = num.get("grid", max(33, 4 * M + 1))
    if isinstance(grid, int) and not isinstance(grid, bool):
        grid = (grid,) * max(1, len(axes))
    if not isinstance(grid, (list, tuple)) or len(grid) != max(1, len(axes)) or not all(
        isinstance(g, int) and not isinstance(g, bool) for g in grid
    ):
        c.add("numerics.grid", "expected an integer or one integer per axis")
        grid = (max(33, 4 * M + 1),) * max(1, len(axes))
    for j, g in enumerate(grid):
        if g < max(8, 4 * M):
            c.add(f"numerics.grid[{j}]", f"{g} nodes is below max(8, 4*M) = {max(8, 4 * M)}")
    for term in (*data.initial, *(t.spatial for t in data.prehistory + data.forcing)):
        if term.kind == "grid" and tuple(term.grid.shape) != tuple(grid):
            c.add("data", f"grid samples of shape {term.grid.shape} do not match numerics.grid {tuple(grid)}")
    ex_M = num.get("existence_M") or sorted({max(1, M // 4), max(1, M // 2), M})
    if not isinstance(ex_M, list) or not all(isinstance(v, int) and 0 < v <= M for v in ex_M):
        c.add("numerics.existence_M", f"expected positive integers not above M = {M}")
        ex_M = [M]
    oracle_h = c.number(num, "oracle_h", "numerics")
    hmax = c.number(num, "hmax", "numerics")
    if hmax is not None and hmax <= 0:
        c.add("numerics.hmax", "must be positive")
    ts = num.get("time_samples", 33)
    if not isinstance(ts, int) or ts < 2:
        c.add("numerics.time_samples", "expected an integer >= 2")
        ts = 33
    numerics = Numerics(
        M=M,
        grid=tuple(grid),
        panel_order=int(num.get("panel_order", 12)),
        hmax=hmax,
        time_samples=ts,
        oracle=bool(num.get("oracle", False)),
        oracle_h=oracle_h,
        oracle_modes=int(num.get("oracle_modes", 4)),
        existence_M=tuple(ex_M),
        residual_samples=int(num.get("residual_samples", 2)),
    )

    out = c.mapping(raw.get("output"), "output")
    output = OutputSpec(
        directory=str(out.get("directory", ".")),
        solution=str(out.get("solution", "solution.csv")),
        diagnostics=str(out.get("diagnostics", "diagnostics.json")),
        provenance=str(out.get("provenance", "provenance.json")),
    )

    for key in raw:
        if key not in ("problem", "data", "numerics", "output"):
            c.add(str(key), "unknown section")
    if c.problems:
        raise ValidationError(c.problems)
    return RunConfig(problem, data, numerics, output, tuple(warnings), raw)


def load_config(path: str) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    return parse_config(text)

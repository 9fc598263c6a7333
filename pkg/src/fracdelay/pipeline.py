"""End-to-end run: project data, solve every mode, assemble, diagnose, write files."""

from __future__ import annotations

import json
import math
import os
import platform
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import mpmath
import numpy as np
import scipy

from .assembler import SolutionField, assemble, existence_diagnostics, residual_norm
from .basis import AxisSpec, ModeIndex, eigen_data, mode_box, riesz_criterion
from .config import RunConfig, SpatialData
from .errors import DomainError, FracDelayError, IndexDomainError
from .fracops import PowerSum
from .oracle import OracleConfig, abm_solve, classical_steps_solve
from .projection import CoeffSet, GridFn, project
from .stepper import ModeCauchyData, ModeTrajectory, solve_mode

__all__ = ["RunOutput", "run", "write_outputs", "spatial_coeffs", "EXIT_OK", "EXIT_DIAGNOSTICS", "EXIT_ERROR"]

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_DIAGNOSTICS = 2

THREADS_ENV = "FRACDELAY_THREADS"


@dataclass(frozen=True, eq=False)
class RunOutput:
    field: SolutionField
    diagnostics: dict
    provenance: dict
    exit_code: int
    trajectories: dict


def spatial_coeffs(data: SpatialData, axes, M: int, grid: tuple[int, ...]) -> CoeffSet:
    """Mode coefficients of one spatial field on the truncation box."""
    if data.kind == "zero":
        return CoeffSet.zeros(axes, M)
    if data.kind == "modes":
        out = CoeffSet.zeros(axes, M)
        entries = {}
        for m, v in data.modes:
            try:
                out._position(m)
            except KeyError:
                raise IndexDomainError(f"mode {m} lies outside the truncation box (M = {M})") from None
            entries[m] = entries.get(m, 0) + v
        return CoeffSet.from_dict(axes, M, entries)
    if data.kind == "sine":
        k = data.k
        amp = data.amplitude

        def func(*x):
            out = np.ones(np.broadcast(*x).shape)
            for kj, xj in zip(k, x):
                out = out * np.sin(kj * xj)
            return amp * out if amp.imag else amp.real * out

        return project(GridFn.sample(func, grid), axes, M)
    nodes = tuple(np.linspace(0.0, math.pi, n) for n in data.grid.shape)
    return project(GridFn(nodes, data.grid), axes, M)


def _threads() -> int:
    val = os.environ.get(THREADS_ENV)
    if val:
        try:
            return max(1, int(val))
        except ValueError:
            pass
    return os.cpu_count() or 1


class _ModeData:
    """Per-mode start values, prehistory and forcing assembled from the separable terms."""

    def __init__(self, config: RunConfig) -> None:
        p, d, nm = config.problem, config.data, config.numerics
        axes = p.axes
        self.axes = axes
        self.M = nm.M
        self.box = mode_box(axes, nm.M)
        self.initial = [spatial_coeffs(s, axes, nm.M, nm.grid) for s in d.initial]
        self.pre = [(spatial_coeffs(t.spatial, axes, nm.M, nm.grid), t.temporal) for t in d.prehistory]
        self.forcing = [(spatial_coeffs(t.spatial, axes, nm.M, nm.grid), t.temporal) for t in d.forcing]

    def start_values(self, m: ModeIndex) -> tuple[complex, ...]:
        return tuple(cs.get(m) for cs in self.initial)

    def prehistory(self, m: ModeIndex) -> PowerSum:
        terms = []
        for cs, prof in self.pre:
            c = cs.get(m)
            if c != 0:
                c = c.real if c.imag == 0 else c
                terms.extend(PowerSum.polynomial(prof.polynomial_coeffs).scaled(c).terms)
        return PowerSum(tuple(terms))

    def forcing_fn(self, m: ModeIndex) -> Callable | None:
        parts = [(cs.get(m), prof) for cs, prof in self.forcing]
        parts = [(c, prof) for c, prof in parts if c != 0]
        if not parts:
            return None

        def f(t, parts=parts):
            t = np.asarray(t, dtype=float)
            return sum(c * np.asarray(prof(t)) for c, prof in parts)

        return f

    def magnitude(self, m: ModeIndex) -> float:
        val = sum(abs(v) for v in self.start_values(m))
        val += sum(abs(mm.coeff) for mm in self.prehistory(m).terms)
        val += sum(abs(cs.get(m)) for cs, _ in self.forcing)
        return val


def _solve_all(config: RunConfig, md: _ModeData) -> dict[ModeIndex, ModeTrajectory | None]:
    p, nm = config.problem, config.numerics

    def one(m: ModeIndex):
        cauchy = ModeCauchyData(md.start_values(m), md.prehistory(m))
        f = md.forcing_fn(m)
        if cauchy.is_zero and f is None:
            return m, None
        try:
            tr = solve_mode(
                m, eigen_data(md.axes, m), p.alpha, p.tau, p.horizon, p.B, p.C, cauchy, f, hmax=nm.hmax
            )
        except FracDelayError as exc:
            raise type(exc)(f"mode {m.m}: {exc}") from exc
        return m, tr

    with ThreadPoolExecutor(max_workers=_threads()) as pool:
        results = list(pool.map(one, md.box))
    return dict(results)


def _time_samples(config: RunConfig) -> np.ndarray:
    p = config.problem
    ts = np.linspace(0.0, p.horizon, config.numerics.time_samples)
    # for alpha < 1 the start data make T singular at t = 0
    return ts[1:] if p.alpha < 1 else ts


def _residual_times(config: RunConfig) -> list[float]:
    p = config.problem
    k = max(1, config.numerics.residual_samples)
    count = max(1, math.ceil(p.horizon / p.tau - 1e-12))
    out = []
    for n in range(count):
        for j in range(k):
            t = n * p.tau + p.tau * (j + 0.5) / k
            if t <= p.horizon:
                out.append(t)
    return out


def _oracle_deltas(config: RunConfig, md: _ModeData, trajectories) -> dict:
    p, nm = config.problem, config.numerics
    tau = p.tau
    h = nm.oracle_h or tau / 256
    ocfg = OracleConfig(h, tau)
    active = [m for m, tr in trajectories.items() if tr is not None]
    active.sort(key=lambda m: (-md.magnitude(m), m.m))
    report = []
    for m in active[: nm.oracle_modes]:
        tr = trajectories[m]
        mu = eigen_data(md.axes, m).mu
        Bv, Cv = p.B(mu), p.C(mu)
        r = md.start_values(m)
        pre = md.prehistory(m)
        f = md.forcing_fn(m)
        count = len(tr.intervals)
        s = np.linspace(0.05 * tau, tau, 64)
        ts = np.concatenate([n * tau + s for n in range(count)])
        entry: dict = {"mode": list(m.m)}
        try:
            ref = np.zeros(ts.shape, dtype=complex)
            for part, unit in ((np.real, 1.0), (np.imag, 1j)):
                rp = [float(part(v)) for v in r]
                pp = PowerSum(tuple(type(t)(t.gamma, float(part(t.coeff))) for t in pre.terms))
                fp = None if f is None else (lambda t, part=part: part(f(t)))
                if not any(rp) and pp.is_zero and fp is None:
                    continue
                sol = abm_solve(p.alpha, Bv, Cv, rp, pp, fp, count * tau, ocfg)
                ref = ref + unit * sol(ts)
            got = tr(ts)
            scale = max(1.0, float(np.max(np.abs(ref))))
            entry["abm_max_abs"] = float(np.max(np.abs(got - ref)))
            entry["abm_max_rel"] = entry["abm_max_abs"] / scale
            if p.alpha == 1.0:
                cref = np.zeros(ts.shape, dtype=complex)
                for part, unit in ((np.real, 1.0), (np.imag, 1j)):
                    pp = PowerSum(tuple(type(t)(t.gamma, float(part(t.coeff))) for t in pre.terms))
                    fp = None if f is None else (lambda t, part=part: part(f(t)))
                    sol = classical_steps_solve(
                        Bv, Cv, float(part(r[0])), lambda x, pp=pp: pp(x + tau), fp, tau, count * tau
                    )
                    cref = cref + unit * sol(ts)
                entry["classical_max_abs"] = float(np.max(np.abs(got - cref)))
        except (DomainError, FracDelayError) as exc:
            entry["skipped"] = str(exc)
        report.append(entry)
    return {"h": h, "modes": report}


def run(config: RunConfig) -> RunOutput:
    """Solve the configured problem; files are written by :func:`write_outputs`."""
    p, nm = config.problem, config.numerics
    axes: tuple[AxisSpec, ...] = p.axes
    md = _ModeData(config)
    trajectories = _solve_all(config, md)
    nodes = tuple(np.linspace(0.0, math.pi, n) for n in nm.grid)
    times = _time_samples(config)
    field = assemble(trajectories, axes, nodes, times, nm.M)

    riesz = riesz_criterion(axes)
    count = max(1, math.ceil(p.horizon / p.tau - 1e-12))
    interval_forcing = {}
    for m, tr in trajectories.items():
        if tr is None:
            continue
        mu = eigen_data(axes, m).mu
        cv = p.C(mu)
        f = md.forcing_fn(m)
        lifted = md.prehistory(m)
        if p.l != p.alpha:
            lifted = lifted.derivative(p.l - p.alpha)
        fns = []
        for n in range(count):
            def F(s, n=n, f=f, cv=cv, lifted=lifted, tr=tr):
                s = np.asarray(s, dtype=float)
                val = np.zeros(s.shape, dtype=complex) if f is None else f(n * p.tau + s) + 0j
                if cv != 0:
                    prev = lifted(s) if n == 0 else tr.intervals[n - 1].local(s)
                    val = val - cv * prev
                return val

            fns.append(F)
        interval_forcing[m] = fns
    existence = existence_diagnostics(
        axes, md.initial, nm.existence_M, alpha=p.alpha, interval_forcing=interval_forcing, tau=p.tau
    )

    prehistory_fns = {}
    for m, tr in trajectories.items():
        if tr is None:
            continue
        lifted = md.prehistory(m)
        if p.l != p.alpha:
            lifted = lifted.derivative(p.l - p.alpha)
        prehistory_fns[m] = lifted
    forcing_fns = {m: md.forcing_fn(m) for m in trajectories}
    rtimes = _residual_times(config)
    residual = residual_norm(
        trajectories, axes, p.alpha, p.B, p.C, rtimes, forcing=forcing_fns, prehistory=prehistory_fns
    )

    embedding_ok = existence.embedding_ok
    failed = not riesz.satisfied or not embedding_ok
    diagnostics = {
        "status": "diagnostics-failed" if failed else "ok",
        "riesz": {"theta": list(riesz.theta), "rho": riesz.rho, "satisfied": riesz.satisfied},
        "embedding": {
            "threshold": 2.0 + len(axes) / 2.0,
            "flags": list(existence.embedding),
            "satisfied": embedding_ok,
        },
        "existence": {
            "M": list(existence.M_values),
            "data_sums": list(existence.data_sums),
            "forcing_sums": list(existence.forcing_sums),
            "tail_change": existence.tail_change,
            "converged": existence.converged,
        },
        "residual": {"times": rtimes, "max_relative": residual},
        "field": {"imag_max": field.imag_max, "per_time": list(field.diagnostics)},
        "warnings": list(config.warnings),
        "modes_solved": sum(tr is not None for tr in trajectories.values()),
        "modes_total": len(trajectories),
    }
    if nm.oracle:
        diagnostics["oracle"] = _oracle_deltas(config, md, trajectories)
    from . import __version__

    provenance = {
        "config": config.raw,
        "versions": {
            "fracdelay": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "mpmath": mpmath.__version__,
        },
    }
    code = EXIT_DIAGNOSTICS if failed else EXIT_OK
    return RunOutput(field, diagnostics, provenance, code, trajectories)


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def write_outputs(out: RunOutput, config: RunConfig, directory: str | os.PathLike | None = None) -> dict:
    """Write the solution table, diagnostics and provenance; returns the paths."""
    d = Path(directory if directory is not None else config.output.directory)
    d.mkdir(parents=True, exist_ok=True)
    f = out.field
    n_axes = len(f.nodes)
    header = ["t"] + [f"x_{j + 1}" for j in range(n_axes)] + ["re_u", "im_u"]
    mesh = np.meshgrid(*f.nodes, indexing="ij")
    coords = np.stack([m.ravel() for m in mesh], axis=-1)
    lines = [",".join(header)]
    for t, vals in zip(f.times, f.values):
        flat = vals.ravel()
        tt = _fmt(t)
        for x, v in zip(coords, flat):
            row = [tt] + [_fmt(xj) for xj in x] + [_fmt(v.real), _fmt(v.imag)]
            lines.append(",".join(row))
    paths = {
        "solution": d / config.output.solution,
        "diagnostics": d / config.output.diagnostics,
        "provenance": d / config.output.provenance,
    }
    paths["solution"].write_text("\n".join(lines) + "\n", encoding="utf-8")
    paths["diagnostics"].write_text(
        json.dumps(out.diagnostics, indent=2, sort_keys=True, default=_json_default) + "\n", encoding="utf-8"
    )
    paths["provenance"].write_text(
        json.dumps(out.provenance, indent=2, sort_keys=True, default=_json_default) + "\n", encoding="utf-8"
    )
    return paths


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    raise TypeError(f"cannot serialize {type(obj).__name__}")

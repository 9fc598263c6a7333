"""Series assembly of ``u(x, t)`` and the diagnostics built on top of it.

``u(x, t) = sum_m T_m(t) v_m(x)`` over the truncation box.  The existence
diagnostics are the weighted coefficient sums whose finiteness the theory
requires; only the raw sums are reported, since the embedding constants in
front of them are not known.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .basis import AxisKind, AxisSpec, ModeIndex, axis_lambda
from .errors import SingularityError
from .fracops import FracOrder, rl_derivative
from .projection import CoeffSet, axis_modes, reconstruct_grid
from .quadrature import graded_rule
from .stepper import ModeTrajectory

__all__ = [
    "SolutionField",
    "ExistenceReport",
    "assemble",
    "existence_diagnostics",
    "embedding_flags",
    "mode_residual",
    "residual_norm",
    "sup_norm",
]

ModeFn = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True, eq=False)
class SolutionField:
    """``values[k]`` is ``u`` on the tensor grid ``nodes`` at ``times[k]``."""

    nodes: tuple[np.ndarray, ...]
    times: np.ndarray
    values: np.ndarray
    diagnostics: tuple[dict, ...] = ()

    @property
    def imag_max(self) -> float:
        return float(np.max(np.abs(self.values.imag))) if self.values.size else 0.0


def _box_tensor(axes: Sequence[AxisSpec], M: int, times: np.ndarray, trajectories):
    box = CoeffSet.zeros(axes, M)
    vals = np.zeros((times.size,) + box.values.shape, dtype=complex)
    seen = 0
    for pos in np.ndindex(*box.values.shape):
        key = ModeIndex(tuple(r[i] for r, i in zip(box.modes, pos)))
        if key not in trajectories:
            raise KeyError(f"no trajectory for mode {key.m}")
        seen += 1
        tr = trajectories[key]
        if tr is not None:
            vals[(slice(None),) + pos] = tr(times)
    if seen != len(trajectories):
        raise ValueError("trajectories contain modes outside the truncation box")
    return box, vals


def assemble(
    trajectories: Mapping[ModeIndex, ModeTrajectory | None],
    axes: Sequence[AxisSpec],
    nodes: Sequence[np.ndarray],
    times,
    M: int,
) -> SolutionField:
    """Evaluate the truncated series on the grid at each time.

    ``None`` marks a mode known to vanish identically; it contributes an
    exact zero.
    """
    times = np.atleast_1d(np.asarray(times, dtype=float))
    nodes = tuple(np.asarray(x, dtype=float) for x in nodes)
    box, coeffs = _box_tensor(axes, M, times, trajectories)
    if not np.all(np.isfinite(coeffs)):
        bad = times[~np.all(np.isfinite(coeffs.reshape(times.size, -1)), axis=1)]
        raise SingularityError(f"mode coefficients are not finite at t = {bad.tolist()}")
    values = np.stack([reconstruct_grid(box.map(c), axes, nodes) for c in coeffs])
    diags = tuple(
        {
            "t": float(t),
            "max_abs": float(np.max(np.abs(v))),
            "imag_max": float(np.max(np.abs(v.imag))),
        }
        for t, v in zip(times, values)
    )
    return SolutionField(nodes, times, values, diags)


# {{{ existence diagnostics


def embedding_flags(axes: Sequence[AxisSpec]) -> tuple[bool, ...]:
    """``s_j > 2 + N/2`` per axis (strict)."""
    bound = 2.0 + len(axes) / 2.0
    return tuple(ax.s > bound for ax in axes)


def _weights(axes: Sequence[AxisSpec], M: int, power: float) -> np.ndarray:
    w = np.ones([len(axis_modes(ax, M)) for ax in axes])
    for j, ax in enumerate(axes):
        lam = np.array([abs(axis_lambda(ax, m)) for m in axis_modes(ax, M)])
        shape = [1] * len(axes)
        shape[j] = lam.size
        w = w * (1.0 + lam ** (power * ax.s)).reshape(shape)
    return w


def _radius(axes: Sequence[AxisSpec], M: int) -> np.ndarray:
    """Box radius ``max_j |m_j|`` of every mode in the box of size ``M``."""
    r = np.zeros([len(axis_modes(ax, M)) for ax in axes], dtype=int)
    for j, ax in enumerate(axes):
        m = np.abs(np.array(axis_modes(ax, M)))
        shape = [1] * len(axes)
        shape[j] = m.size
        r = np.maximum(r, m.reshape(shape))
    return r


@dataclass(frozen=True)
class ExistenceReport:
    """Partial sums of the weighted coefficient series at each ``M``.

    ``data_sums[j]`` holds the sums for the ``j``-th start value,
    ``forcing_sums[n]`` the sums for interval ``n``; each is a mapping
    ``{"s": [...], "2s": [...]}`` over ``M_values``.
    """

    M_values: tuple[int, ...]
    data_sums: tuple[dict, ...]
    forcing_sums: tuple[dict, ...]
    embedding: tuple[bool, ...]
    tail_change: float
    converged: bool
    rel_tol: float = 0.01
    extras: dict = field(default_factory=dict)

    @property
    def embedding_ok(self) -> bool:
        return all(self.embedding)


def _partial_sums(values: np.ndarray, radius: np.ndarray, weights: dict, Ms) -> dict:
    out = {}
    for key, w in weights.items():
        terms = np.abs(values) ** 2 * w
        out[key] = [float(np.sum(terms[radius <= M])) for M in Ms]
    return out


def _tail(sums: Sequence[float]) -> float:
    if len(sums) < 2:
        return 0.0
    last, prev = sums[-1], sums[-2]
    if last == 0:
        return 0.0
    return (last - prev) / last


def existence_diagnostics(
    axes: Sequence[AxisSpec],
    start_coeffs: Sequence[CoeffSet],
    M_values: Sequence[int],
    *,
    alpha: float | None = None,
    interval_forcing: Mapping[ModeIndex, Sequence[ModeFn]] | None = None,
    tau: float | None = None,
    rel_tol: float = 0.01,
    samples: int = 4,
) -> ExistenceReport:
    """Weighted sums of the data series and of the per-interval forcing integrals.

    ``interval_forcing[m][n]`` is ``F_{n,m}(s)`` in the local variable of
    interval ``n``; its series term is
    ``max_t |int_0^t (t - xi)^(a-1) |F(xi)| dxi|^2`` over ``samples`` points
    of ``(0, tau]``.  Convergence is declared when the last step in
    ``M_values`` changes every sum by less than ``rel_tol``.
    """
    Ms = tuple(sorted(int(M) for M in M_values))
    if not Ms:
        raise ValueError("need at least one truncation radius")
    Mmax = Ms[-1]
    radius = _radius(axes, Mmax)
    weights = {"s": _weights(axes, Mmax, 1.0), "2s": _weights(axes, Mmax, 2.0)}
    box = CoeffSet.zeros(axes, Mmax)

    data_sums = []
    for cs in start_coeffs:
        vals = np.zeros(box.values.shape, dtype=complex)
        for pos in np.ndindex(*vals.shape):
            vals[pos] = cs.get(tuple(r[i] for r, i in zip(box.modes, pos)))
        data_sums.append(_partial_sums(vals, radius, weights, Ms))

    forcing_sums = []
    if interval_forcing:
        if alpha is None or tau is None:
            raise ValueError("alpha and tau are required for forcing sums")
        count = max(len(v) for v in interval_forcing.values())
        x, w = graded_rule(0.0, 1.0, order=8)
        ts = tau * np.arange(1, samples + 1) / samples
        for n in range(count):
            vals = np.zeros(box.values.shape)
            for pos in np.ndindex(*vals.shape):
                key = ModeIndex(tuple(r[i] for r, i in zip(box.modes, pos)))
                fns = interval_forcing.get(key)
                if not fns or n >= len(fns) or fns[n] is None:
                    continue
                best = 0.0
                for t in ts:
                    # graded toward w = t - xi = 0, where the kernel is singular
                    lag = t * x
                    kern = lag ** (alpha - 1.0)
                    best = max(best, float(t * np.sum(w * kern * np.abs(fns[n](t - lag)))))
                vals[pos] = best
            forcing_sums.append(_partial_sums(vals, radius, weights, Ms))

    changes = [abs(_tail(d[k])) for d in (*data_sums, *forcing_sums) for k in d]
    tail = max(changes, default=0.0)
    return ExistenceReport(
        Ms,
        tuple(data_sums),
        tuple(forcing_sums),
        embedding_flags(axes),
        tail,
        len(Ms) >= 2 and tail < rel_tol,
        rel_tol,
    )


# }}}


# {{{ residuals


def sup_norm(axes: Sequence[AxisSpec]) -> float:
    """Sup of ``|v_m|`` over the box; the same for every mode."""
    out = 1.0
    for ax in axes:
        out *= 1.0 / math.sqrt(math.pi) if ax.kind is AxisKind.PERIODIC else math.sqrt(2.0 / math.pi)
    return out


def mode_residual(
    traj: ModeTrajectory,
    alpha: float,
    B: float,
    C: float,
    forcing: ModeFn | None,
    prehistory: ModeFn | None,
    t: float,
    *,
    tol: float = 1e-6,
) -> tuple[complex, float]:
    """Residual of the mode equation at ``t`` (restart form) and its scale.

    ``D^a T`` is taken numerically with lower terminal ``n tau`` of the
    interval holding ``t``; ``prehistory`` is the lifted prehistory of the
    mode on ``(0, tau)`` in the variable ``t + tau``.
    """
    order = FracOrder(float(alpha))
    tau = traj.tau
    n = int(traj.interval_of(np.array([t]))[0])
    iv = traj.intervals[n]
    s = t - n * tau
    d = complex(rl_derivative(lambda x: iv.local(x).real, order, 0.0, s, tol=tol))
    if np.any(np.imag(iv.at_nodes()) != 0) or any(complex(v).imag for v in iv.r):
        imag = rl_derivative(lambda x: iv.local(x).imag, order, 0.0, s, tol=tol)
        d += 1j * imag
    value = complex(iv.local(s))
    if n == 0:
        delayed = complex(prehistory(np.array(s))) if prehistory is not None else 0.0
    else:
        delayed = complex(traj.intervals[n - 1].local(s))
    f = complex(forcing(np.array(t))) if forcing is not None else 0.0
    res = d + B * value + C * delayed - f
    scale = abs(B * value) + abs(C * delayed) + abs(f)
    return res, scale


def residual_norm(
    trajectories: Mapping[ModeIndex, ModeTrajectory | None],
    axes: Sequence[AxisSpec],
    alpha: float,
    B: Callable[[float], float],
    C: Callable[[float], float],
    times: Sequence[float],
    *,
    forcing: Mapping[ModeIndex, ModeFn] | None = None,
    prehistory: Mapping[ModeIndex, ModeFn] | None = None,
    mu: Mapping[ModeIndex, float] | None = None,
) -> float:
    """Max over ``times`` of the spectral PDE residual, relative to the data size.

    Each mode contributes ``|res_m(t)| sup|v_m|``; the normalizer is the
    same sum over ``|B T| + |C T(t - tau)| + |f|``.  Modes that carry
    forcing but no trajectory (outside the truncation box) contribute their
    forcing as residual.  Times inside ``(n tau, n tau + 0.01 tau)`` are
    skipped.
    """
    from .basis import mode_mu

    forcing = forcing or {}
    prehistory = prehistory or {}
    sup = sup_norm(axes)
    worst = 0.0
    for t in times:
        total = 0.0
        scale = 0.0
        for key, tr in trajectories.items():
            if tr is None:
                continue
            n = int(tr.interval_of(np.array([t]))[0])
            if t - n * tr.tau < 0.01 * tr.tau:
                continue
            m = mu[key] if mu is not None else mode_mu(axes, key)
            res, sc = mode_residual(tr, alpha, B(m), C(m), forcing.get(key), prehistory.get(key), t)
            total += abs(res) * sup
            scale += sc * sup
        for key, f in forcing.items():
            if f is not None and key not in trajectories:
                val = abs(complex(f(np.array(t)))) * sup
                total += val
                scale += val
        if scale > 0:
            worst = max(worst, total / scale)
    return worst


# }}}

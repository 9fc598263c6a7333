"""Method of steps for one spectral mode.

A mode coefficient ``T(t)`` obeys

    D^a T + B T(t) + C T(t - tau) = f(t),

with ``B = f_B(mu)``, ``C = f_C(mu)``.  Interval ``n`` covers
``[n tau, (n+1) tau]`` and is solved as a fresh Riemann-Liouville Cauchy
problem with lower terminal ``n tau``.  In the local variable
``s = t - n tau``

    T_n(s) = sum_j r_j s^(a-j) E_{a,a-j+1}(-B s^a)  +  (K * F_n)(s),
    K(w)   = w^(a-1) E_{a,a}(-B w^a),
    F_n(s) = f(n tau + s) - C T_{n-1}(s),

where ``T_{-1}`` is the prehistory lifted to ``u`` itself.  ``r_j`` are the
fractional values ``D^(a-j) T`` at the interval start: the given initial data
for ``n = 0``, the end values of the previous interval afterwards.

The singular pieces (the homogeneous part, the lifted prehistory and the
convolution of ``K`` with the previous homogeneous part) are carried in
closed form; the rest of the particular part lives at the nodes of a
piecewise Chebyshev grid graded toward ``s = 0`` and is propagated by a
precomputed product-integration matrix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .basis import EigenData
from .errors import QuadratureError
from .fracops import FracOrder, PowerSum
from .quadrature import ChebPanels, kernel_rule
from .specfun import mittag_leffler, prabhakar2, rgamma

__all__ = [
    "Multiplier",
    "ModeCauchyData",
    "IntervalSolution",
    "ModeTrajectory",
    "ConvolutionGrid",
    "step_interval",
    "restart_data",
    "solve_mode",
]


# {{{ multipliers


@dataclass(frozen=True)
class Multiplier:
    """Real function of the eigenvalue defining a spectral operator.

    ``scaled(c)``: ``c * lam``; ``power(c, sigma)``: ``c * lam**sigma``;
    ``polynomial(c0, c1, ...)``: ``sum c_k lam**k``.
    """

    kind: str
    params: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        if self.kind not in ("scaled", "power", "polynomial"):
            raise ValueError(f"unknown multiplier kind {self.kind!r}")
        if self.kind == "scaled" and len(self.params) != 1:
            raise ValueError("scaled multiplier takes one parameter")
        if self.kind == "power" and len(self.params) != 2:
            raise ValueError("power multiplier takes (c, sigma)")
        if not all(math.isfinite(p) for p in self.params):
            raise ValueError("multiplier parameters must be finite")

    @classmethod
    def scaled(cls, c: float) -> Multiplier:
        return cls("scaled", (c,))

    @classmethod
    def power(cls, c: float, sigma: float) -> Multiplier:
        return cls("power", (c, sigma))

    @classmethod
    def polynomial(cls, *coeffs: float) -> Multiplier:
        return cls("polynomial", tuple(coeffs))

    @classmethod
    def zero(cls) -> Multiplier:
        return cls("scaled", (0.0,))

    def __call__(self, lam: float) -> float:
        lam = float(lam)
        if lam < 0:
            raise ValueError(f"multipliers are evaluated at lam >= 0, got {lam}")
        if self.kind == "scaled":
            return self.params[0] * lam
        if self.kind == "power":
            c, sigma = self.params
            return c * lam**sigma if lam > 0 or sigma > 0 else (c if sigma == 0 else 0.0)
        return float(sum(c * lam**k for k, c in enumerate(self.params)))


# }}}


@dataclass(frozen=True)
class ModeCauchyData:
    """Fractional start values ``D^(a-i) T`` (i = 1..l) and the prehistory.

    ``prehistory`` is the trace ``D^(a-l) T`` on ``(-tau, 0)`` written as a
    power sum in ``t + tau``; it is ignored on later intervals.
    """

    values: tuple[complex, ...]
    prehistory: PowerSum = field(default_factory=PowerSum)

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", tuple(self.values))

    @classmethod
    def zero(cls, l: int) -> ModeCauchyData:
        return cls((0.0,) * l)

    @property
    def is_zero(self) -> bool:
        return all(v == 0 for v in self.values) and self.prehistory.is_zero


# {{{ convolution grid


def _panel_edges(alpha: float, B: float, tau: float, hmax: float | None) -> np.ndarray:
    levels = min(100, math.ceil(40.0 / min(1.0, 2.0 * alpha)))
    edges = [0.0] + [tau * 2.0**-k for k in range(levels, -1, -1)]
    cap = 0.5 * tau
    if alpha > 1 and B > 0:
        cap = min(cap, 2.0 / B ** (1.0 / alpha))
    if hmax is not None:
        cap = min(cap, hmax)
    out = [0.0]
    for a, b in zip(edges[:-1], edges[1:]):
        pieces = max(1, math.ceil((b - a) / cap - 1e-12))
        out.extend(a + (b - a) * np.arange(1, pieces + 1) / pieces)
    return np.array(out)


class ConvolutionGrid:
    """Product integration of ``w^(e) E_{a,b}(-B w^a)`` against grid functions.

    ``W`` maps node values of ``g`` to ``(K * g)`` at the nodes, and ``V[i]``
    maps them to ``(K_i * g)(tau)`` with ``K_i(w) = w^(i-1) E_{a,i}(-B w^a)``.
    Both depend only on ``(a, B, tau)`` and are shared by all intervals.
    """

    def __init__(
        self, alpha: float, B: float, tau: float, *, order: int = 12, hmax: float | None = None
    ) -> None:
        self.alpha = alpha
        self.B = B
        self.tau = tau
        self.grid = ChebPanels(_panel_edges(alpha, B, tau, hmax), order)
        self.nodes = self.grid.nodes
        self.W = self._matrix(self.nodes, alpha, alpha - 1.0)
        l = FracOrder(alpha).l
        self.V = np.vstack(
            [self._matrix(np.array([tau]), float(i), float(i - 1))[0] for i in range(1, l + 1)]
        )

    def _matrix(self, outputs: np.ndarray, beta: float, exponent: float) -> np.ndarray:
        a, B = self.alpha, self.B
        n = self.grid.size
        order = self.grid.order
        edges = self.grid.edges
        first_cap = (1e-8 / abs(B)) ** (1.0 / a) if B != 0 else math.inf
        ws, wts, rows = [], [], []
        for k, s in enumerate(outputs):
            w, wt, _ = kernel_rule(
                s, exponent, first=min(s, first_cap, s * 2.0**-8), breaks=s - edges
            )
            ws.append(w)
            wts.append(wt)
            rows.append(np.full(w.size, k))
        w = np.concatenate(ws)
        wt = np.concatenate(wts)
        row = np.concatenate(rows)
        sig = outputs[row] - w
        E = mittag_leffler(a, beta, -B * w**a) if B != 0 else np.full(w.size, float(rgamma(beta)))
        panel, L = self.grid.basis(sig)
        cols = panel[:, None] * order + np.arange(order)[None, :]
        flat = (row[:, None] * n + cols).ravel()
        vals = ((wt * E)[:, None] * L).ravel()
        M = np.bincount(flat, weights=vals, minlength=outputs.size * n)
        M = M.reshape(outputs.size, n)
        if not np.all(np.isfinite(M)):
            raise QuadratureError("non-finite product-integration weights")
        return M

    def interpolate(self, values: np.ndarray, s) -> np.ndarray:
        return self.grid.evaluate(values, s)


# }}}


# {{{ closed forms


def _ml(alpha: float, beta: float, z) -> np.ndarray:
    return np.asarray(mittag_leffler(alpha, beta, np.asarray(z, dtype=float)))


def _hom(alpha, B, r, s, shift=0.0):
    """``sum_j r_j s^(a-j+shift) E_{a,a-j+1+shift}(-B s^a)`` for ``j = 1..l``."""
    s = np.asarray(s, dtype=float)
    z = -B * s**alpha
    out = np.zeros(s.shape, dtype=complex)
    for j, rj in enumerate(r, start=1):
        if rj == 0:
            continue
        b = alpha - j + 1.0 + shift
        out += rj * s ** (b - 1.0) * _ml(alpha, b, z)
    return out


def _conv_hom(alpha, B, r, s, first_beta):
    """``(K_b * H)(s)`` where ``K_b = w^(b-1) E_{a,b}`` and ``H`` the homogeneous part."""
    s = np.asarray(s, dtype=float)
    z = -B * s**alpha
    out = np.zeros(s.shape, dtype=complex)
    for j, rj in enumerate(r, start=1):
        if rj == 0:
            continue
        b = first_beta + alpha - j + 1.0
        out += rj * s ** (b - 1.0) * np.asarray(prabhakar2(alpha, b, z))
    return out


def _conv_power(alpha, B, ps: PowerSum, s, first_beta):
    """``(K_b * ps)(s)`` for a power sum ``ps`` in the local variable."""
    s = np.asarray(s, dtype=float)
    z = -B * s**alpha
    out = np.zeros(s.shape, dtype=complex)
    for m in ps.terms:
        if m.coeff == 0:
            continue
        b = first_beta + m.gamma + 1.0
        out += m.coeff * math.gamma(m.gamma + 1.0) * s ** (b - 1.0) * _ml(alpha, b, z)
    return out


# }}}


@dataclass(eq=False)
class IntervalSolution:
    """``T`` on ``[n tau, (n+1) tau]``.

    ``T(s) = hom(r; s) + interp(p; s) + closed(s)`` where ``closed`` is
    ``-C (K * prehistory)`` for ``n = 0`` and ``-C (K * hom_prev)`` otherwise.
    """

    n: int
    alpha: float
    B: float
    C: float
    r: tuple[complex, ...]
    g: np.ndarray
    p: np.ndarray
    grid: ConvolutionGrid
    prehistory: PowerSum | None = None
    prev_r: tuple[complex, ...] | None = None

    @property
    def start(self) -> float:
        return self.n * self.grid.tau

    def closed(self, s) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        if self.C == 0:
            return np.zeros(s.shape, dtype=complex)
        if self.prehistory is not None:
            return -self.C * _conv_power(self.alpha, self.B, self.prehistory, s, self.alpha)
        return -self.C * _conv_hom(self.alpha, self.B, self.prev_r, s, self.alpha)

    def particular(self, s) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        return np.asarray(self.grid.interpolate(self.p, s)) + self.closed(s)

    def homogeneous(self, s) -> np.ndarray:
        return _hom(self.alpha, self.B, self.r, s)

    def local(self, s) -> np.ndarray:
        """``T(n tau + s)`` for ``0 < s <= tau``."""
        return self.homogeneous(s) + self.particular(s)

    def at_nodes(self) -> np.ndarray:
        s = self.grid.nodes
        return self.homogeneous(s) + self.p + self.closed(s)


def step_interval(
    eig: EigenData | float,
    B: Multiplier,
    C: Multiplier,
    cauchy: ModeCauchyData,
    forcing: Callable[[np.ndarray], np.ndarray] | None,
    delayed: PowerSum | IntervalSolution,
    alpha: FracOrder | float,
    n: int,
    *,
    grid: ConvolutionGrid | None = None,
    tau: float | None = None,
) -> IntervalSolution:
    """Solve interval ``n`` given the start values and the delayed term.

    ``delayed`` is the lifted prehistory (a power sum in ``t + tau``) when
    ``n = 0`` and the previous interval's solution afterwards.
    """
    a = alpha.alpha if isinstance(alpha, FracOrder) else float(alpha)
    mu = eig.mu if isinstance(eig, EigenData) else float(eig)
    b_val = B(mu)
    c_val = C(mu)
    if grid is None:
        if tau is None:
            raise ValueError("either grid or tau is required")
        grid = ConvolutionGrid(a, b_val, tau)
    s = grid.nodes
    g = np.zeros(s.size, dtype=complex)
    if forcing is not None:
        g += np.asarray(forcing(n * grid.tau + s), dtype=complex)
    prehistory = prev_r = None
    if isinstance(delayed, IntervalSolution):
        prev_r = delayed.r
        if c_val != 0:
            # the closed part of the previous particular solution enters here
            g -= c_val * (delayed.p + delayed.closed(s))
    else:
        prehistory = delayed
    p = grid.W @ g
    return IntervalSolution(
        n, a, b_val, c_val, tuple(cauchy.values), g, p, grid, prehistory, prev_r
    )


def restart_data(sol: IntervalSolution) -> ModeCauchyData:
    """``D^(a-i) T`` at the end of ``sol``'s interval (lower terminal = its start).

    Uses ``D^(a-i) [s^(b-1) E_{a,b}] = s^(b-1-a+i) E_{a,b-a+i}``, so every
    piece of ``T`` maps to a closed form or to a row of ``grid.V``.
    """
    a, B, C = sol.alpha, sol.B, sol.C
    tau = sol.grid.tau
    z = -B * tau**a
    out = []
    for i in range(1, len(sol.r) + 1):
        val = complex(sol.grid.V[i - 1] @ sol.g)
        for j, rj in enumerate(sol.r, start=1):
            if rj != 0:
                val += rj * tau ** (i - j) * float(_ml(a, i - j + 1.0, z))
        if C != 0:
            if sol.prehistory is not None:
                val -= C * complex(_conv_power(a, B, sol.prehistory, tau, float(i)))
            else:
                val -= C * complex(_conv_hom(a, B, sol.prev_r, tau, float(i)))
        out.append(val)
    return ModeCauchyData(tuple(out))


@dataclass(eq=False)
class ModeTrajectory:
    """Stitched solution ``T_m`` on ``[0, n_intervals * tau]``."""

    mode: object
    intervals: list[IntervalSolution]
    tau: float

    @property
    def horizon(self) -> float:
        return len(self.intervals) * self.tau

    def interval_of(self, t: np.ndarray) -> np.ndarray:
        # t in (n tau, (n+1) tau] belongs to interval n; t = 0 to interval 0
        k = np.ceil(np.asarray(t, dtype=float) / self.tau - 1e-13).astype(int) - 1
        return np.clip(k, 0, len(self.intervals) - 1)

    def __call__(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        flat = np.atleast_1d(t).ravel()
        if np.any(flat < 0) or np.any(flat > self.horizon * (1 + 1e-13)):
            raise ValueError(f"times must lie in [0, {self.horizon}]")
        k = self.interval_of(flat)
        out = np.zeros(flat.shape, dtype=complex)
        for n in np.unique(k):
            sel = k == n
            out[sel] = self.intervals[n].local(flat[sel] - n * self.tau)
        return out.reshape(t.shape)[()]

    def restart_values(self) -> list[tuple[complex, ...]]:
        """Start values ``r^(n)`` of every interval."""
        return [iv.r for iv in self.intervals]


def solve_mode(
    mode,
    eig: EigenData | float,
    alpha: FracOrder | float,
    tau: float,
    horizon: float,
    B: Multiplier,
    C: Multiplier,
    cauchy: ModeCauchyData,
    forcing: Callable[[np.ndarray], np.ndarray] | None = None,
    *,
    hmax: float | None = None,
) -> ModeTrajectory:
    """Chain :func:`step_interval` and :func:`restart_data` up to ``horizon``.

    ``cauchy.prehistory`` is the trace ``D^(a-l) T`` on ``(-tau, 0)``; it is
    lifted to ``T`` itself (order ``l - a`` derivative, lower terminal
    ``-tau``) before it enters the delayed term.
    """
    order = alpha if isinstance(alpha, FracOrder) else FracOrder(float(alpha))
    a = order.alpha
    if not 0 < a <= 2:
        raise ValueError(f"equation order must lie in (0, 2], got {a}")
    if len(cauchy.values) != order.l:
        raise ValueError(f"need {order.l} start values, got {len(cauchy.values)}")
    if tau <= 0 or horizon <= 0:
        raise ValueError("tau and horizon must be positive")
    mu = eig.mu if isinstance(eig, EigenData) else float(eig)
    count = max(1, math.ceil(horizon / tau - 1e-12))
    grid = ConvolutionGrid(a, B(mu), tau, hmax=hmax)
    lifted = cauchy.prehistory.derivative(order.l - a) if order.l != a else cauchy.prehistory
    intervals: list[IntervalSolution] = []
    data = cauchy
    delayed: PowerSum | IntervalSolution = lifted
    for n in range(count):
        sol = step_interval(mu, B, C, data, forcing, delayed, order, n, grid=grid)
        intervals.append(sol)
        data = restart_data(sol)
        delayed = sol
    return ModeTrajectory(mode, intervals, tau)

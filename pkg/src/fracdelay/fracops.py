"""Riemann-Liouville fractional integrals and derivatives.

Three kinds of operand are accepted:

* :class:`Monomial` / :class:`PowerSum` -- sums of ``c (t - a)**g``, handled
  exactly;
* :class:`SampledFn` -- node/value pairs, interpolated by a cubic spline and
  integrated against the kernel piece by piece;
* plain callables ``f(t)`` (vectorized), integrated by graded Gauss rules.

Derivatives of order ``alpha`` with ``l - 1 < alpha <= l`` are formed as the
``l``-th classical derivative of the order ``l - alpha`` integral.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence, Union

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import AccuracyError, DomainError, SingularityError
from .quadrature import gauss_legendre, graded_rule, kernel_rule
from .specfun import rgamma

__all__ = [
    "FracOrder",
    "SampledFn",
    "Monomial",
    "PowerSum",
    "rl_integral",
    "rl_derivative",
    "prehistory_lift",
]


@dataclass(frozen=True)
class FracOrder:
    """Order of a fractional derivative (``alpha > 0``) or integral (``alpha < 0``)."""

    alpha: float

    def __post_init__(self) -> None:
        if not math.isfinite(self.alpha):
            raise ValueError("order must be finite")

    @property
    def l(self) -> int:  # noqa: E743
        return max(0, -math.floor(-self.alpha))

    @property
    def is_integer(self) -> bool:
        return self.alpha == math.floor(self.alpha)


@dataclass(frozen=True, eq=False)
class SampledFn:
    """Function known at strictly increasing ``nodes``.

    Interpolation is a cubic spline, split at ``breaks`` (points where the
    function may jump or blow up; a node equal to a break ends the left piece).
    """

    nodes: np.ndarray
    values: np.ndarray
    breaks: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        nodes = np.asarray(self.nodes, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if nodes.ndim != 1 or nodes.size < 2:
            raise ValueError("a sampled function needs at least 2 nodes")
        if values.shape != nodes.shape:
            raise ValueError("nodes and values must have the same length")
        if np.any(np.diff(nodes) <= 0):
            raise ValueError("nodes must be strictly increasing")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "breaks", tuple(sorted(float(b) for b in self.breaks)))

    @property
    def span(self) -> tuple[float, float]:
        return float(self.nodes[0]), float(self.nodes[-1])

    def spline(self) -> CubicSpline:
        return CubicSpline(self.nodes, self.values)

    def __call__(self, t):
        if not self.breaks:
            return self.spline()(t)
        t = np.asarray(t, dtype=float)
        piece = np.searchsorted(self.breaks, t, side="left")
        owner = np.searchsorted(self.breaks, self.nodes, side="left")
        out = np.full(t.shape, np.nan)
        for k in np.unique(piece):
            sel = owner == k
            if np.count_nonzero(sel) < 2:
                continue
            mask = piece == k
            out[mask] = CubicSpline(self.nodes[sel], self.values[sel])(t[mask])
        return out[()]


@dataclass(frozen=True)
class Monomial:
    """``coeff * (t - a)**gamma`` relative to the lower terminal ``a``.

    ``coeff`` may be complex (mode coefficients on periodic axes are).
    """

    gamma: float
    coeff: complex = 1.0

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        if self.coeff == 0:
            return np.zeros_like(s)[()]
        if self.gamma == 0.0:
            return np.full(s.shape, self.coeff)[()]
        return (self.coeff * s**self.gamma)[()]

    def integral(self, nu: float) -> Monomial:
        _check_exponent(self.gamma)
        c = self.coeff * math.gamma(self.gamma + 1.0) * float(rgamma(self.gamma + 1.0 + nu))
        return Monomial(self.gamma + nu, c)

    def derivative(self, alpha: float) -> Monomial:
        # 1/Gamma at a pole is zero: D^a (t-a)^(a-k) = 0 for k = 1..l
        _check_exponent(self.gamma)
        arg = self.gamma + 1.0 - alpha
        if round(arg) <= 0 and abs(arg - round(arg)) < 1e-12:
            return Monomial(self.gamma - alpha, 0.0)
        c = self.coeff * math.gamma(self.gamma + 1.0) * float(rgamma(arg))
        return Monomial(self.gamma - alpha, c)


@dataclass(frozen=True)
class PowerSum:
    """Finite sum of :class:`Monomial` terms sharing one lower terminal."""

    terms: tuple[Monomial, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "terms", tuple(self.terms))

    @classmethod
    def polynomial(cls, coeffs: Sequence[float]) -> PowerSum:
        """``sum_k coeffs[k] s**k``."""
        return cls(tuple(Monomial(float(k), c) for k, c in enumerate(coeffs) if c != 0))

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        out = np.zeros(s.shape, dtype=complex if self.is_complex else float)
        for m in self.terms:
            out = out + m(s)
        return out[()]

    def integral(self, nu: float) -> PowerSum:
        return PowerSum(tuple(m.integral(nu) for m in self.terms))

    def derivative(self, alpha: float) -> PowerSum:
        return PowerSum(tuple(d for d in (m.derivative(alpha) for m in self.terms) if d.coeff != 0))

    def scaled(self, c: float) -> PowerSum:
        return PowerSum(tuple(Monomial(m.gamma, c * m.coeff) for m in self.terms))

    @property
    def is_complex(self) -> bool:
        return any(isinstance(m.coeff, complex) for m in self.terms)

    @property
    def is_zero(self) -> bool:
        return all(m.coeff == 0 for m in self.terms)


Operand = Union[Monomial, PowerSum, SampledFn, Callable]


def _check_exponent(g: float) -> None:
    if g <= -1.0:
        raise SingularityError(f"(t - a)**{g} is not integrable at the lower terminal")


def _as_powersum(f) -> PowerSum | None:
    if isinstance(f, Monomial):
        return PowerSum((f,))
    if isinstance(f, PowerSum):
        return f
    return None


# {{{ sampled operands


def _piece_integral(
    pp: CubicSpline, a: float, t: float, nu: float
) -> float:
    """``int_a^t (t - s)**(nu - 1) S(s) ds`` for a piecewise polynomial ``S``."""
    x = pp.x
    c = pp.c  # (degree+1, pieces), highest power first, local variable s - x[i]
    deg = c.shape[0] - 1
    inner = x[(x > a) & (x < t)]
    cuts = np.concatenate([[a], inner, [t]])
    lo, hi = cuts[:-1], cuts[1:]
    piece = np.clip(np.searchsorted(x, 0.5 * (lo + hi), side="right") - 1, 0, c.shape[1] - 1)
    width = hi - lo
    far = (t - hi) >= width
    total = 0.0

    if far.any():
        gx, gw = gauss_legendre(12)
        s = lo[far, None] + width[far, None] * gx[None, :]
        vals = pp(s)
        total += float(np.sum(width[far, None] * gw[None, :] * (t - s) ** (nu - 1.0) * vals))

    near = np.nonzero(~far)[0]
    k = np.arange(deg + 1)
    fact = np.array([math.factorial(int(j)) for j in k], dtype=float)
    for i in near:
        # expand the piece polynomial about s = t:  S(t - w) = sum_k d_k w**k
        derivs = np.zeros(deg + 1)
        p = piece[i]
        dx = t - x[p]
        coef = c[:, p][::-1]  # lowest power first
        poly = np.polynomial.Polynomial(coef)
        for j in k:
            derivs[j] = poly.deriv(int(j))(dx) if j else poly(dx)
        d = derivs * (-1.0) ** k / fact
        e = nu + k
        total += float(np.sum(d * ((t - lo[i]) ** e - (t - hi[i]) ** e) / e))
    return total


def _sampled_integral(f: SampledFn, nu: float, a: float, t: float) -> float:
    lo, hi = f.span
    if a < lo - 1e-14 * max(1.0, abs(lo)) or t > hi + 1e-14 * max(1.0, abs(hi)):
        raise DomainError(f"[{a}, {t}] is outside the sampled span [{lo}, {hi}]")
    if t == a:
        return 0.0
    return _piece_integral(f.spline(), a, t, nu) * float(rgamma(nu))


# }}}


# {{{ callable operands


def _callable_integral(f: Callable, nu: float, a: float, t: float) -> float:
    if t == a:
        return 0.0
    mid = 0.5 * (a + t)
    # right half: kernel end, Gauss-Jacobi cell at the singular point
    w, wts, _ = kernel_rule(t - mid, nu - 1.0, first=(t - mid) * 2.0**-40)
    right = float(np.sum(wts * np.asarray(f(t - w), dtype=float)))
    # left half: graded toward the lower terminal, kernel smooth there
    x, wx = graded_rule(a, mid, levels=110)
    x, wx = x[x <= a + 0.5 * (mid - a)], wx[x <= a + 0.5 * (mid - a)]
    x2, wx2 = gauss_legendre(16)
    xs = np.concatenate([x, a + 0.5 * (mid - a) + 0.5 * (mid - a) * x2])
    ws = np.concatenate([wx, 0.5 * (mid - a) * wx2])
    left = float(np.sum(ws * (t - xs) ** (nu - 1.0) * np.asarray(f(xs), dtype=float)))
    return (left + right) * float(rgamma(nu))


# }}}


def _value(f: Operand, a: float, t: float) -> float:
    ps = _as_powersum(f)
    if ps is not None:
        return float(ps(t - a))
    if isinstance(f, SampledFn):
        lo, hi = f.span
        if not lo <= t <= hi:
            raise DomainError(f"{t} outside the sampled span [{lo}, {hi}]")
        return float(f(t))
    return float(np.asarray(f(np.array([t])), dtype=float)[0])


def rl_integral(f: Operand, order: float, lower: float, t: float) -> float:
    """``(1/Gamma(nu)) int_a^t f(s) (t - s)**(nu - 1) ds`` with ``nu = order``.

    >>> rl_integral(Monomial(0.0), 1.0, 0.0, 2.0)
    2.0
    """
    nu = float(order)
    a = float(lower)
    t = float(t)
    if nu < 0:
        raise DomainError(f"integral order must be non-negative, got {nu}")
    if t < a:
        raise DomainError(f"t = {t} lies below the lower terminal {a}")
    if nu == 0:
        return _value(f, a, t)
    ps = _as_powersum(f)
    if ps is not None:
        if t == a:
            for m in ps.terms:
                _check_exponent(m.gamma)
            return 0.0
        return float(ps.integral(nu)(t - a))
    if isinstance(f, SampledFn):
        return _sampled_integral(f, nu, a, t)
    return _callable_integral(f, nu, a, t)


# {{{ numerical differentiation

# 5-point stencils: (offsets, weights) for the first and second derivative
_CENTRAL = {
    1: (np.array([-2, -1, 0, 1, 2]), np.array([1, -8, 0, 8, -1]) / 12.0),
    2: (np.array([-2, -1, 0, 1, 2]), np.array([-1, 16, -30, 16, -1]) / 12.0),
}
_FORWARD = {
    1: (np.arange(5), np.array([-25, 48, -36, 16, -3]) / 12.0),
    2: (np.arange(6), np.array([45, -154, 214, -156, 61, -10]) / 12.0),
}


def _stencil(l: int, room_left: float, room_right: float, step: float):
    if l in _CENTRAL and room_left >= 2 * step and room_right >= 2 * step:
        return _CENTRAL[l]
    if l in _FORWARD:
        off, w = _FORWARD[l]
        if room_right >= off[-1] * step:
            return off, w
        if room_left >= off[-1] * step:
            return -off, w * (-1.0) ** l
    raise AccuracyError(f"no room for a derivative stencil of order {l} at step {step}")


def _diff_trace(trace: Callable[[float], float], l: int, t: float, step: float,
                room_left: float, room_right: float) -> tuple[float, float]:
    """l-th derivative of ``trace`` at ``t`` plus a step-halving error estimate."""
    def once(h):
        off, w = _stencil(l, room_left, room_right, h)
        vals = np.array([trace(t + o * h) for o in off])
        return float(w @ vals) / h**l

    fine = once(step / 2)
    coarse = once(step)
    return fine, abs(fine - coarse)


# }}}


def rl_derivative(
    f: Operand,
    order: FracOrder | float,
    lower: float,
    t: float,
    *,
    tol: float = 1e-6,
    step: float | None = None,
) -> float:
    """Riemann-Liouville derivative ``D_a^alpha f(t)``.

    Exact on monomials.  For sampled and callable operands the order
    ``l - alpha`` integral is differentiated ``l`` times with a 5-point
    stencil; :class:`AccuracyError` is raised when the step-halving error
    estimate exceeds ``tol * max(1, |value|)``.
    """
    if not isinstance(order, FracOrder):
        order = FracOrder(float(order))
    alpha = order.alpha
    a = float(lower)
    t = float(t)
    if alpha < 0:
        return rl_integral(f, -alpha, a, t)
    if t < a:
        raise DomainError(f"t = {t} lies below the lower terminal {a}")
    if alpha == 0:
        return _value(f, a, t)
    ps = _as_powersum(f)
    if ps is not None:
        if t == a:
            raise DomainError("the derivative is not defined at the lower terminal")
        return float(ps.derivative(alpha)(t - a))
    l = order.l
    nu = l - alpha

    if isinstance(f, SampledFn):
        lo, hi = f.span
        if a < lo - 1e-14 * max(1.0, abs(lo)) or t > hi + 1e-14 * max(1.0, abs(hi)):
            raise DomainError(f"[{a}, {t}] is outside the sampled span [{lo}, {hi}]")
        if t <= a:
            raise DomainError("the derivative is not defined at the lower terminal")
        if nu == 0:
            return float(f.spline()(t, nu=l))
        pp = f.spline()
        scale = float(rgamma(nu))

        def trace(s: float) -> float:
            return _piece_integral(pp, a, s, nu) * scale if s > a else 0.0

        nodes = f.nodes
        i = int(np.clip(np.searchsorted(nodes, t), 1, nodes.size - 1))
        h = step if step is not None else 0.5 * (nodes[i] - nodes[i - 1])
        room_right = hi - t
    else:
        if t <= a:
            raise DomainError("the derivative is not defined at the lower terminal")
        if nu == 0:
            trace = lambda s: _value(f, a, s)  # noqa: E731
        else:
            trace = lambda s: _callable_integral(f, nu, a, s)  # noqa: E731
        h = step if step is not None else (1e-3 if l == 1 else 1e-2) * (t - a)
        room_right = math.inf

    room_left = t - a
    h = min(h, 0.25 * room_left) if room_right < 2 * h else h
    value, err = _diff_trace(trace, l, t, h, room_left, room_right)
    if err > tol * max(1.0, abs(value)):
        raise AccuracyError(
            f"derivative of order {alpha} at t = {t}: error estimate {err:.3g} exceeds {tol:.3g}"
        )
    return value


def prehistory_lift(
    phi_l: Operand,
    order: FracOrder | float,
    t: float,
    *,
    tau: float | None = None,
    tol: float = 1e-6,
) -> float:
    """Recover ``u`` on the prehistory window from the trace ``D^(alpha-l) u = phi_l``.

    Returns ``D^(l-alpha) phi_l (t)`` with lower terminal ``-tau``.  For
    sampled traces ``tau`` defaults to ``-nodes[0]``; for monomials and
    callables it is required.
    """
    if not isinstance(order, FracOrder):
        order = FracOrder(float(order))
    if order.alpha <= 0:
        raise DomainError("the equation order must be positive")
    nu = order.l - order.alpha
    if isinstance(phi_l, SampledFn):
        start = phi_l.span[0]
        if tau is None:
            tau = -start
        elif abs(start + tau) > 1e-12 * max(1.0, tau):
            raise DomainError(f"sampled prehistory starts at {start}, expected {-tau}")
    elif tau is None:
        raise DomainError("tau is required for non-sampled prehistory")
    t = float(t)
    if not -tau < t <= 0:
        raise DomainError(f"t = {t} is outside the prehistory window (-{tau}, 0]")
    if nu == 0:
        return _value(phi_l, -tau, t)
    return rl_derivative(phi_l, FracOrder(nu), -tau, t, tol=tol)

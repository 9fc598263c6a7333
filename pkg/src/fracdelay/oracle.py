"""Reference solvers for the mode equation, used only to check the stepper.

``abm_solve`` is a fractional Adams-type product-trapezoid scheme on a
graded mesh.  It writes ``T = sum_j r_j s^(a-j)/Gamma(a-j+1) + Y``: the power
terms are annihilated by the RL derivative, so ``Y = I^a [G - B Y]`` with a
forcing ``G`` whose singular pieces are integrated exactly and whose
remaining pieces are grid values.  The equation is linear, so the implicit
trapezoid corrector is solved exactly at each node instead of iterated.

``classical_steps_solve`` handles ``a = 1``: each interval is a linear ODE
solved with the integrating factor ``exp(-B s)`` against a Chebyshev fit of
the forcing (which contains the previous interval).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial import chebyshev as cheb
from scipy.special import beta as beta_fn
from scipy.special import betainc, hyp2f1

from .errors import DomainError, FitError, StabilityError
from .fracops import FracOrder, Monomial, PowerSum, SampledFn
from .quadrature import gauss_legendre

__all__ = [
    "OracleConfig",
    "abm_solve",
    "ClassicalSolution",
    "classical_steps_solve",
]

_BLOWUP = 1e12


@dataclass(frozen=True)
class OracleConfig:
    """Nominal step ``h`` (must divide ``tau``), corrector order, memory policy
    and mesh grading.

    Each interval carries ``tau / h`` steps at ``s_k = tau (k / n)^grading``.
    ``order`` 2 is the product trapezoid rule; ``order`` 3 interpolates the
    integrand by quadratics through each cell and its left neighbour.
    """

    h: float
    tau: float
    memory: str = "restart"
    grading: float = 2.0
    order: int = 3

    def __post_init__(self) -> None:
        if self.h <= 0 or self.tau <= 0:
            raise ValueError("h and tau must be positive")
        n = self.tau / self.h
        if abs(n - round(n)) > 1e-9 * n:
            raise ValueError(f"h = {self.h} does not divide tau = {self.tau}")
        if round(n) < 64:
            raise ValueError("h must not exceed tau / 64")
        if self.memory not in ("restart", "full"):
            raise ValueError(f"memory policy must be 'restart' or 'full', got {self.memory!r}")
        if self.order not in (2, 3):
            raise ValueError(f"corrector order must be 2 or 3, got {self.order}")
        if self.grading < 1:
            raise ValueError("grading exponent must be >= 1")

    @property
    def steps(self) -> int:
        return int(round(self.tau / self.h))

    def local_mesh(self) -> np.ndarray:
        k = np.arange(self.steps + 1) / self.steps
        return self.tau * k**self.grading


# {{{ product-trapezoid weights


def _moments(A: np.ndarray, h: np.ndarray, nu: float, p: int) -> np.ndarray:
    """``int_0^h x^p (A - x)^(nu - 1) dx`` for ``A >= h > 0``.

    Written as ``h^(p+1) A^(nu-1) 2F1(1-nu, p+1; p+2; h/A) / (p+1)``, which
    stays accurate for cells far from ``A`` (no difference of large powers).
    """
    return h ** (p + 1) * A ** (nu - 1.0) * hyp2f1(1.0 - nu, p + 1.0, p + 2.0, h / A) / (p + 1)


def _product_weights(mesh: np.ndarray, k: int, order: float, degree: int = 1) -> np.ndarray:
    """Weights ``w_j`` with ``I^order[g](mesh[k]) ~ sum_j w_j g(mesh[j])``.

    ``degree`` 1 interpolates ``g`` linearly on each cell; ``degree`` 2 uses
    the quadratic through the cell and the node to its left (through nodes
    0, 1, 2 on the first cell when ``k >= 2``).
    """
    t = mesh[k]
    x0 = mesh[:k]
    h = mesh[1 : k + 1] - x0
    A = t - x0
    nu = order
    m0 = _moments(A, h, nu, 0)
    m1 = _moments(A, h, nu, 1)
    w = np.zeros(k + 1)
    if degree == 1 or k < 2:
        right = m1 / h
        w[:k] += m0 - right
        w[1:] += right
        return w / math.gamma(nu)
    m2 = _moments(A, h, nu, 2)
    # local variable x = s - x_j; nodes at d (left neighbour), 0 and h
    j = np.arange(k)
    d = np.empty(k)
    d[1:] = mesh[j[1:] - 1] - x0[1:]
    d[0] = mesh[2] - mesh[0]  # first cell borrows node 2 on its right
    # Lagrange basis through {d, 0, h}, integrated against the moments
    wd = (m2 - h * m1) / (d * (d - h))
    w0 = (m2 - (d + h) * m1 + d * h * m0) / (d * h)
    wh = (m2 - d * m1) / (h * (h - d))
    w[:k] += w0
    w[1 : k + 1] += wh
    other = np.where(j == 0, 2, j - 1)
    np.add.at(w, other, wd)
    return w / math.gamma(nu)


# }}}


@dataclass(frozen=True)
class _Piece:
    """Analytic forcing piece ``ps(s - start)`` supported on ``[start, stop]``."""

    start: float
    ps: PowerSum
    stop: float | None = None


def _analytic_integral(pieces: Sequence[_Piece], order: float, t: float) -> float:
    total = 0.0
    for pc in pieces:
        if t <= pc.start:
            continue
        x = t - pc.start
        if pc.stop is None or t <= pc.stop:
            total += float(pc.ps.integral(order)(x))
            continue
        frac = (pc.stop - pc.start) / x
        for m in pc.ps.terms:
            g = m.gamma
            total += (
                m.coeff * x ** (order + g) * beta_fn(g + 1, order) * betainc(g + 1, order, frac)
                / math.gamma(order)
            )
    return total


def _volterra(
    mesh: np.ndarray,
    alpha: float,
    B: float,
    pieces: Sequence[_Piece],
    grid_forcing: Callable[[int, np.ndarray], float],
    degree: int = 1,
) -> np.ndarray:
    """Solve ``Y = I^a[G_an] + I^a_h[g - B Y]`` node by node.

    ``grid_forcing(k, Y)`` returns ``g`` at node ``k`` and may read
    already-computed entries of ``Y``.
    """
    n = mesh.size
    Y = np.zeros(n)
    g = np.zeros(n)
    for k in range(n):
        g[k] = grid_forcing(k, Y)
        known = _analytic_integral(pieces, alpha, mesh[k]) if k else _start_value(pieces, alpha)
        if k:
            w = _product_weights(mesh, k, alpha, degree)
            known += w[:k] @ (g[:k] - B * Y[:k]) + w[k] * g[k]
            Y[k] = known / (1.0 + B * w[k])
        else:
            Y[k] = known
        if not abs(Y[k]) < _BLOWUP:
            raise StabilityError(f"oracle iterate {Y[k]} at t = {mesh[k]}")
    return Y


def _start_value(pieces: Sequence[_Piece], alpha: float) -> float:
    """``lim_{t->0+} I^a[G_an](t)``; infinite limits are outside the oracle's scope."""
    val = 0.0
    for pc in pieces:
        if pc.start > 0:
            continue
        for m in pc.ps.integral(alpha).terms:
            if m.coeff == 0:
                continue
            if m.gamma < 0:
                raise DomainError(
                    "the oracle needs a bounded regular part; start data give "
                    f"a t^{m.gamma:.3g} singularity"
                )
            if m.gamma == 0:
                val += m.coeff
    return val


def _powers(alpha: float, r: Sequence[float]) -> PowerSum:
    """``sum_j r_j s^(a-j) / Gamma(a-j+1)`` (terms with a pole vanish)."""
    terms = []
    for j, rj in enumerate(r, start=1):
        if rj == 0:
            continue
        b = alpha - j + 1.0
        if b <= 0 and b == math.floor(b):
            continue
        terms.append(Monomial(alpha - j, rj / math.gamma(b)))
    return PowerSum(tuple(terms))


def abm_solve(
    alpha: float,
    B: float,
    C: float,
    start_values: Sequence[float],
    prehistory: PowerSum,
    forcing: Callable[[np.ndarray], np.ndarray] | None,
    horizon: float,
    config: OracleConfig,
) -> SampledFn:
    """Grid solution of ``D^a T + B T + C T(t - tau) = f`` on ``(0, horizon]``.

    ``start_values`` are ``D^(a-i) T (0)``; ``prehistory`` is the trace
    ``D^(a-l) T`` on ``(-tau, 0)`` as a power sum in ``t + tau``.  Returns
    the solution at all mesh nodes except interval starts.
    """
    order = FracOrder(float(alpha))
    if not 0 < alpha <= 2:
        raise DomainError(f"oracle supports 0 < alpha <= 2, got {alpha}")
    l = order.l
    if len(start_values) != l:
        raise ValueError(f"need {l} start values")
    tau = config.tau
    count = max(1, math.ceil(horizon / tau - 1e-12))
    local = config.local_mesh()
    n = local.size - 1
    lifted = prehistory.derivative(l - alpha) if l != alpha else prehistory
    degree = config.order - 1

    def f_at(t):
        if forcing is None:
            return np.zeros_like(t)
        return np.asarray(forcing(t), dtype=float)

    times = []
    values = []
    if config.memory == "restart":
        r = list(start_values)
        prev_powers = None
        prev_Y = None
        for i in range(count):
            powers = _powers(alpha, r)
            delayed = lifted if i == 0 else prev_powers
            pieces = [_Piece(0.0, powers.scaled(-B)), _Piece(0.0, delayed.scaled(-C))]
            fvals = f_at(i * tau + local)
            dly = prev_Y if prev_Y is not None else np.zeros(n + 1)
            Y = _volterra(
                local, alpha, B, pieces, lambda k, Y, d=dly, fv=fvals: fv[k] - C * d[k], degree
            )
            times.append(i * tau + local[1:])
            values.append(powers(local[1:]) + Y[1:])
            # restart values D^(a-i) T at the interval end
            gvals = fvals - C * dly - B * Y
            new_r = []
            for ii in range(1, l + 1):
                val = float(powers.derivative(alpha - ii)(tau))
                val += _analytic_integral(pieces, float(ii), tau)
                val += _product_weights(local, n, float(ii), degree) @ gvals
                new_r.append(val)
            r = new_r
            prev_powers, prev_Y = powers, Y
        breaks = tuple(i * tau for i in range(1, count))
        return SampledFn(np.concatenate(times), np.concatenate(values), breaks)

    # full memory: one mesh, lower terminal 0 throughout
    mesh = np.concatenate([local] + [i * tau + local[1:] for i in range(1, count)])
    powers = _powers(alpha, start_values)
    pieces = [_Piece(0.0, powers.scaled(-B)), _Piece(0.0, lifted.scaled(-C), tau)]
    if count > 1:
        pieces.append(_Piece(tau, powers.scaled(-C)))
    fvals = f_at(mesh)

    def grid_forcing(k, Y):
        if k <= n:
            return fvals[k]
        return fvals[k] - C * Y[k - n]

    Y = _volterra(mesh, alpha, B, pieces, grid_forcing, degree)
    return SampledFn(mesh[1:], powers(mesh[1:]) + Y[1:], tuple(i * tau for i in range(1, count)))


# {{{ classical alpha = 1


@dataclass(eq=False)
class ClassicalSolution:
    """Piecewise exact solution; interval ``n`` stores ``T(n tau)`` and a forcing fit."""

    B: float
    tau: float
    starts: list[float]
    fits: list[np.ndarray]

    def _interval(self, n: int, s: np.ndarray) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        gx, gw = gauss_legendre(24)
        out = self.starts[n] * np.exp(-self.B * s)
        # int_0^s exp(-B (s - q)) p(q) dq, four Gauss-Legendre panels
        acc = np.zeros_like(s)
        for lo_f in (0.0, 0.25, 0.5, 0.75):
            q = s[..., None] * (lo_f + 0.25 * gx)
            wq = 0.25 * s[..., None] * gw
            x = 2.0 * q / self.tau - 1.0
            acc += np.sum(wq * np.exp(-self.B * (s[..., None] - q)) * cheb.chebval(x, self.fits[n]), -1)
        return out + acc

    def __call__(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        flat = np.atleast_1d(t).ravel()
        k = np.clip(np.ceil(flat / self.tau - 1e-13).astype(int) - 1, 0, len(self.fits) - 1)
        out = np.empty_like(flat)
        for n in np.unique(k):
            sel = k == n
            out[sel] = self._interval(int(n), flat[sel] - n * self.tau)
        return out.reshape(t.shape)[()]


def classical_steps_solve(
    B: float,
    C: float,
    T0: float,
    prehistory: Callable[[np.ndarray], np.ndarray],
    forcing: Callable[[np.ndarray], np.ndarray] | None,
    tau: float,
    horizon: float,
    *,
    degree: int = 32,
    fit_tol: float = 1e-10,
) -> ClassicalSolution:
    """Method of steps for ``T' + B T + C T(t - tau) = f`` (order exactly 1).

    ``prehistory(t)`` gives ``T`` on ``[-tau, 0]``.  On every interval the
    forcing ``f - C T(t - tau)`` is fitted by a degree-``degree`` Chebyshev
    interpolant; :class:`FitError` is raised when the fit misses ``fit_tol``.
    """
    count = max(1, math.ceil(horizon / tau - 1e-12))
    k = np.arange(degree + 1)
    xs = np.cos(np.pi * (k + 0.5) / (degree + 1))
    xcheck = np.cos(np.pi * (np.arange(2 * degree + 1) + 0.25) / (2 * degree + 1))
    sol = ClassicalSolution(B, tau, [], [])
    start = float(T0)
    for n in range(count):
        def rhs(x, n=n):
            s = 0.5 * tau * (x + 1.0)
            val = np.zeros_like(s) if forcing is None else np.asarray(forcing(n * tau + s), dtype=float)
            if C != 0:
                prev = np.asarray(prehistory(s - tau), dtype=float) if n == 0 else sol._interval(n - 1, s)
                val = val - C * prev
            return val

        coef = cheb.chebfit(xs, rhs(xs), degree)
        check = rhs(xcheck)
        resid = np.max(np.abs(cheb.chebval(xcheck, coef) - check))
        if resid > fit_tol * max(1.0, np.max(np.abs(check))):
            raise FitError(f"interval {n}: Chebyshev fit residual {resid:.3g} above {fit_tol:.3g}")
        sol.starts.append(start)
        sol.fits.append(coef)
        start = float(sol._interval(n, np.array(tau)))
    return sol


# }}}

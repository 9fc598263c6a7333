"""Gamma and two-parameter Mittag-Leffler functions for real arguments.

``E_{a,b}(z) = sum_q z**q / Gamma(a*q + b)`` is evaluated by one of four
routes, picked per point:

* ``|z| <= 1``: the Taylor series in double precision;
* large ``|z|``: the exponential (pole) terms plus the optimally truncated
  algebraic asymptotic series, accepted only when its own error estimate is
  below ``1e-13`` of the function scale;
* ``a == 1`` with integer ``b``: the elementary closed form;
* everything else (the crossover band): the Taylor series summed in
  multiprecision arithmetic.  Vectorized calls replace the multiprecision sum
  by piecewise Chebyshev tables that are built once per ``(a, b)`` from it.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from functools import lru_cache

import mpmath
import numpy as np
from scipy.special import gammaln, rgamma

from .errors import ConvergenceError, PoleError

__all__ = [
    "MLParams",
    "gamma",
    "rgamma",
    "mittag_leffler",
    "prabhakar2",
]

_TAYLOR_RADIUS = 1.0
_CERTIFY_RTOL = 1e-13
_MAX_TERMS = 10_000
_ASYMPTOTIC_MAX_TERMS = 4_000
_LN10 = math.log(10.0)


@dataclass(frozen=True)
class MLParams:
    """Parameters ``(alpha, beta)`` of ``E_{alpha,beta}``."""

    alpha: float
    beta: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.alpha) and self.alpha > 0):
            raise ValueError(f"alpha must be finite and positive, got {self.alpha!r}")
        if not math.isfinite(self.beta):
            raise ValueError(f"beta must be finite, got {self.beta!r}")


def _is_nonpositive_integer(x: float) -> bool:
    return x <= 0 and x == math.floor(x)


def gamma(x: float) -> float:
    """Gamma function; raises :class:`PoleError` at 0, -1, -2, ...

    Values beyond the double range (``x`` above ~171.6 or subnormally close
    to 0) come back as signed infinities.
    """
    x = float(x)
    if _is_nonpositive_integer(x):
        raise PoleError(f"Gamma has a pole at {x}")
    try:
        return math.gamma(x)
    except OverflowError:
        return math.copysign(math.inf, x) if abs(x) < 1 else math.inf


# {{{ Taylor series


def _taylor(alpha: float, beta: float, z: np.ndarray) -> np.ndarray:
    """Double-precision Taylor sum; only used where cancellation is mild."""
    out = np.zeros_like(z)
    if z.size == 0:
        return out
    logabs = np.log(np.abs(np.where(z == 0, 1.0, z)))
    neg = z < 0
    done = z == 0
    out[done] = rgamma(beta)
    biggest = np.zeros_like(z)
    prev = np.full_like(z, np.inf)
    for q in range(_MAX_TERMS):
        arg = alpha * q + beta
        if arg > 0:
            mag = np.exp(q * logabs - gammaln(arg))
            term = np.where(neg & (q % 2 == 1), -mag, mag)
        else:
            term = rgamma(arg) * np.exp(q * logabs) * np.where(neg & (q % 2 == 1), -1.0, 1.0)
        active = ~done
        out[active] += term[active]
        a = np.abs(term)
        biggest = np.maximum(biggest, a)
        finished = (a <= 1e-17 * biggest) & (a <= prev) & (arg > 0)
        done |= finished
        prev = a
        if done.all():
            return out
    raise ConvergenceError(
        f"Taylor series of E_{{{alpha},{beta}}} did not converge in {_MAX_TERMS} terms"
    )


# }}}


# {{{ asymptotic expansion


def _asymptotic(
    alpha: float, beta: float, z: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Pole terms plus optimally truncated algebraic series.

    Returns ``(value, certified)``; ``certified`` is False wherever the error
    estimate exceeds ``_CERTIFY_RTOL`` of the local function scale.
    """
    x = np.abs(z)
    lx = np.log(x)
    neg = bool(z[0] < 0)  # callers pass single-signed arrays
    theta = math.pi if neg else 0.0

    value = np.zeros_like(x)
    pole_mag = np.zeros_like(x)
    err = np.zeros_like(x)
    overflow = np.zeros(x.shape, dtype=bool)

    r = np.exp(lx / alpha)
    kmin = math.floor((-alpha * math.pi - theta) / (2 * math.pi)) - 1
    kmax = math.ceil((alpha * math.pi - theta) / (2 * math.pi)) + 1
    for k in range(kmin, kmax + 1):
        phase = theta + 2 * math.pi * k
        psi = phase / alpha
        logmag = (1.0 - beta) * lx / alpha + r * math.cos(psi) - math.log(alpha)
        if abs(phase) < alpha * math.pi * (1 - 1e-14):
            overflow |= logmag > 700.0
            mag = np.exp(np.minimum(logmag, 700.0))
            arg = (1.0 - beta) * psi + r * math.sin(psi)
            value += mag * np.cos(arg)
            pole_mag += mag
        elif abs(phase) <= alpha * math.pi * (1 + 1e-14):
            # pole on the branch cut: not summed, counted as error
            err += np.exp(np.minimum(logmag, 700.0))

    sign = -1.0 if neg else 1.0
    partial = np.zeros_like(x)
    absum = np.zeros_like(x)
    active = np.ones(x.shape, dtype=bool)
    prev_env = np.full_like(x, np.inf)
    trunc = np.full_like(x, np.inf)
    for k in range(1, _ASYMPTOTIC_MAX_TERMS + 1):
        w = beta - alpha * k
        if w > 0:
            rg = float(rgamma(w))
            term = -(sign**k) * rg * np.exp(-k * lx)
            partial[active] += term[active]
            absum[active] += np.abs(term[active])
            continue
        env = -k * lx + gammaln(1.0 - w) - math.log(math.pi)
        if w == math.floor(w):
            factor = 0.0
        else:
            factor = math.sin(math.pi * math.fmod(w, 2.0)) / math.pi
        small = np.exp(env) <= 1e-17 * (np.abs(partial) + pole_mag)
        growing = env > prev_env
        stop = active & (small | growing)
        trunc[stop] = np.exp(env[stop])
        active &= ~stop
        if not active.any():
            break
        if factor != 0.0:
            term = -(sign**k) * factor * np.exp(-k * lx + gammaln(1.0 - w))
            partial[active] += term[active]
            absum[active] += np.abs(term[active])
        prev_env = np.where(active, env, prev_env)

    value = value + partial
    err = err + trunc + 1e-15 * (absum + pole_mag)
    scale = np.maximum(np.abs(value), pole_mag)
    certified = (err <= _CERTIFY_RTOL * scale) & ~overflow
    value = np.where(overflow, np.inf, value)
    certified |= overflow
    return value, certified


# }}}


# {{{ multiprecision series


@lru_cache(maxsize=512)
def _mp_coeffs(alpha: float, beta: float, dps: int, count: int) -> tuple:
    with mpmath.workdps(dps):
        a = mpmath.mpf(alpha)
        b = mpmath.mpf(beta)
        return tuple(mpmath.rgamma(a * q + b) for q in range(count))


def _series_plan(alpha: float, beta: float, x: float) -> tuple[int, int]:
    """Number of terms and working precision for the multiprecision sum."""
    lx = math.log(x)
    peak = 0.0
    prev = math.inf
    q = 0
    while True:
        arg = alpha * q + beta
        if arg > 0:
            lt = q * lx - math.lgamma(arg)
            peak = max(peak, lt)
            if lt < prev and lt < -(peak + 20 * _LN10):
                break
            prev = lt
        q += 1
        if q > _MAX_TERMS:
            raise ConvergenceError(
                f"E_{{{alpha},{beta}}}({-x}) needs more than {_MAX_TERMS} series terms"
            )
    dps = 10 * math.ceil((2 * peak / _LN10 + 30) / 10)
    count = 64 * math.ceil((q + 1) / 64)
    return count, dps


def _series_mp(alpha: float, beta: float, z: float) -> float:
    count, dps = _series_plan(alpha, beta, abs(z))
    coeffs = _mp_coeffs(alpha, beta, dps, count)
    with mpmath.workdps(dps):
        zz = mpmath.mpf(z)
        acc = mpmath.mpf(0)
        for c in reversed(coeffs):
            acc = acc * zz + c
        return float(acc)


# }}}


# {{{ Chebyshev tables for the negative crossover band

_CHEB_N = 24
_CHEB_T = np.cos(np.pi * (np.arange(_CHEB_N) + 0.5) / _CHEB_N)
_CHEB_CHECK = np.array([-0.93, -0.41, 0.17, 0.66, 0.98])


def _cheb_coeffs(values: np.ndarray) -> np.ndarray:
    n = values.size
    j = np.arange(n)[:, None]
    k = np.arange(n)[None, :]
    c = (2.0 / n) * (np.cos(np.pi * j * (k + 0.5) / n) @ values)
    c[0] *= 0.5
    return c


class _BandTable:
    def __init__(self, alpha: float, beta: float, upper: float) -> None:
        self.alpha = alpha
        self.beta = beta
        self.upper = upper
        edges: list[float] = []
        coeffs: list[np.ndarray] = []
        a = _TAYLOR_RADIUS
        pieces = []
        while a < upper:
            b = min(2 * a, upper)
            pieces.append((a, b))
            a = b
        for a, b in pieces:
            self._build(a, b, edges, coeffs, 0)
        edges.append(upper)
        self.edges = np.array(edges)
        self.coeffs = np.array(coeffs)

    def _f(self, x: np.ndarray) -> np.ndarray:
        return np.array([_series_mp(self.alpha, self.beta, -float(v)) for v in x])

    def _build(self, a, b, edges, coeffs, depth) -> None:
        mid, half = 0.5 * (a + b), 0.5 * (b - a)
        vals = self._f(mid + half * _CHEB_T)
        c = _cheb_coeffs(vals)
        check = self._f(mid + half * _CHEB_CHECK)
        approx = np.polynomial.chebyshev.chebval(_CHEB_CHECK, c)
        scale = np.maximum(np.abs(check), 0.05 * np.max(np.abs(vals)))
        ok = np.all(np.abs(approx - check) <= 1e-13 * scale)
        if ok:
            edges.append(a)
            coeffs.append(c)
            return
        if depth >= 16:
            raise ConvergenceError(
                f"Chebyshev table for E_{{{self.alpha},{self.beta}}} does not resolve [{a}, {b}]"
            )
        self._build(a, mid, edges, coeffs, depth + 1)
        self._build(mid, b, edges, coeffs, depth + 1)

    def __call__(self, x: np.ndarray) -> np.ndarray:
        idx = np.clip(np.searchsorted(self.edges, x, side="right") - 1, 0, len(self.coeffs) - 1)
        a = self.edges[idx]
        b = self.edges[idx + 1]
        t = (2 * x - a - b) / (b - a)
        c = self.coeffs[idx]
        # Clenshaw, vectorized over points
        b1 = np.zeros_like(x)
        b2 = np.zeros_like(x)
        for j in range(c.shape[1] - 1, 0, -1):
            b1, b2 = 2 * t * b1 - b2 + c[:, j], b1
        return t * b1 - b2 + c[:, 0]


_TABLES: dict[tuple[float, float], _BandTable] = {}
_TABLES_LOCK = threading.Lock()


def _band_upper(alpha: float, beta: float) -> float:
    xs = np.geomspace(_TAYLOR_RADIUS, 1e7, 561)
    _, cert = _asymptotic(alpha, beta, -xs)
    bad = np.nonzero(~cert)[0]
    if bad.size == 0:
        return _TAYLOR_RADIUS
    if bad[-1] == xs.size - 1:
        raise ConvergenceError(f"no asymptotic regime found for E_{{{alpha},{beta}}}")
    return float(xs[bad[-1] + 1])


def _band_table(alpha: float, beta: float) -> _BandTable:
    key = (alpha, beta)
    table = _TABLES.get(key)
    if table is None:
        with _TABLES_LOCK:
            table = _TABLES.get(key)
            if table is None:
                table = _BandTable(alpha, beta, _band_upper(alpha, beta))
                _TABLES[key] = table
    return table


# }}}


def _alpha_one_integer(m: int, z: np.ndarray) -> np.ndarray:
    # E_{1,m}(z) = z^{1-m} (e^z - sum_{k<m-1} z^k/k!)
    if m <= 1:
        return z ** (1 - m) * np.exp(z)
    poly = sum(z**k / math.factorial(k) for k in range(m - 1))
    return (np.exp(z) - poly) / z ** (m - 1)


def _ml_array(alpha: float, beta: float, z: np.ndarray, tables: bool) -> np.ndarray:
    out = np.empty_like(z)
    small = np.abs(z) <= _TAYLOR_RADIUS
    if small.any():
        out[small] = _taylor(alpha, beta, z[small])
    rest = ~small
    if not rest.any():
        return out
    if alpha == 1.0 and beta == math.floor(beta):
        out[rest] = _alpha_one_integer(int(beta), z[rest])
        return out
    for sel in (rest & (z > 0), rest & (z < 0)):
        if not sel.any():
            continue
        zs = z[sel]
        val, cert = _asymptotic(alpha, beta, zs)
        if not cert.all():
            miss = ~cert
            if zs[0] > 0:
                val[miss] = _taylor(alpha, beta, zs[miss])
            elif tables:
                table = _band_table(alpha, beta)
                inside = miss & (-zs <= table.upper)
                val[inside] = table(-zs[inside])
                for i in np.nonzero(miss & ~inside)[0]:
                    val[i] = _series_mp(alpha, beta, float(zs[i]))
            else:
                for i in np.nonzero(miss)[0]:
                    val[i] = _series_mp(alpha, beta, float(zs[i]))
        out[sel] = val
    return out


def mittag_leffler(alpha, beta=None, z=None):
    """Two-parameter Mittag-Leffler function ``E_{alpha,beta}(z)`` for real ``z``.

    Accepts either ``mittag_leffler(MLParams(a, b), z)`` or
    ``mittag_leffler(a, b, z)``.  ``z`` may be a scalar or an array; arrays
    are evaluated through cached Chebyshev tables in the crossover band,
    scalars through the multiprecision series.

    >>> round(mittag_leffler(1.0, 1.0, 1.0), 12)
    2.718281828459
    """
    if isinstance(alpha, MLParams):
        params, z = alpha, beta
    else:
        params = MLParams(float(alpha), float(beta))
    scalar = np.ndim(z) == 0
    zz = np.atleast_1d(np.asarray(z, dtype=float))
    if not np.all(np.isfinite(zz)):
        raise ValueError("z must be finite")
    out = _ml_array(params.alpha, params.beta, zz.ravel(), tables=not scalar)
    if scalar:
        return float(out[0])
    return out.reshape(zz.shape)


def prabhakar2(alpha: float, beta: float, z):
    """Three-parameter Mittag-Leffler function with third parameter 2.

    ``E^2_{a,b}(z) = sum_q (q+1) z**q / Gamma(a*q + b)``, computed from
    ``(E_{a,b-1}(z) + (1 + a - b) E_{a,b}(z)) / a``.
    """
    return (
        mittag_leffler(alpha, beta - 1.0, z)
        + (1.0 + alpha - beta) * mittag_leffler(alpha, beta, z)
    ) / alpha

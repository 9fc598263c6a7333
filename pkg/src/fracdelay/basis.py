"""Eigenpairs of -Laplace on the box (0, pi)^N with per-axis boundary families.

Axes come in three kinds, ordered nonlocal, periodic, Dirichlet:

* nonlocal ``a v(0) + b v(pi) = 0``, ``b v'(0) + a v'(pi) = 0``:
  ``lam = 2m + phi``, ``m`` in Z;
* periodic: ``lam = 2m``, ``m`` in Z, factor ``exp(2imx)/sqrt(pi)``;
* Dirichlet: ``lam = m``, ``m >= 1``, factor ``sqrt(2/pi) sin(mx)``.

The eigenfunction is the product of the axis factors and ``mu = sum lam**2``.
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DegenerateAxisError, IndexDomainError, ValidationError

__all__ = [
    "AxisKind",
    "AxisSpec",
    "ModeIndex",
    "EigenData",
    "RieszReport",
    "phi_exponent",
    "axis_lambda",
    "mode_mu",
    "eigen_data",
    "axis_factor",
    "eigenfunction_eval",
    "laplacian_eval",
    "verify_boundary_conditions",
    "riesz_criterion",
    "check_axis_order",
    "mode_box",
    "validate_axes",
]

_SQ2PI = math.sqrt(2.0 / math.pi)
_SQPI = math.sqrt(math.pi)


class AxisKind(str, enum.Enum):
    NONLOCAL = "nonlocal"
    PERIODIC = "periodic"
    DIRICHLET = "dirichlet"


def phi_exponent(alpha_j: float, beta_j: float) -> float:
    """Shift ``arccos(-2ab / (a^2 + b^2)) / pi``, strictly inside (0, 1).

    >>> round(phi_exponent(1.0, 2.0), 7)
    0.7951672
    """
    a, b = float(alpha_j), float(beta_j)
    if a == 0 or b == 0 or abs(a) == abs(b):
        raise DegenerateAxisError(
            f"nonlocal axis needs a != 0, b != 0 and |a| != |b| (got a={a}, b={b})"
        )
    return math.acos(-2.0 * a * b / (a * a + b * b)) / math.pi


@dataclass(frozen=True)
class AxisSpec:
    kind: AxisKind
    alpha: float | None = None
    beta: float | None = None
    s: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", AxisKind(self.kind))
        if self.s < 0 or not math.isfinite(self.s):
            raise ValueError(f"Sobolev exponent must be finite and >= 0, got {self.s}")
        if self.kind is AxisKind.NONLOCAL:
            if self.alpha is None or self.beta is None:
                raise DegenerateAxisError("nonlocal axis needs both alpha and beta")
            phi_exponent(self.alpha, self.beta)

    @classmethod
    def nonlocal_(cls, alpha: float, beta: float, s: float = 0.0) -> AxisSpec:
        return cls(AxisKind.NONLOCAL, float(alpha), float(beta), float(s))

    @classmethod
    def periodic(cls, s: float = 0.0) -> AxisSpec:
        return cls(AxisKind.PERIODIC, s=float(s))

    @classmethod
    def dirichlet(cls, s: float = 0.0) -> AxisSpec:
        return cls(AxisKind.DIRICHLET, s=float(s))

    @property
    def phi(self) -> float:
        if self.kind is not AxisKind.NONLOCAL:
            return 0.0
        return phi_exponent(self.alpha, self.beta)

    def admits(self, m: int) -> bool:
        return self.kind is not AxisKind.DIRICHLET or m >= 1


_KIND_RANK = {AxisKind.NONLOCAL: 0, AxisKind.PERIODIC: 1, AxisKind.DIRICHLET: 2}


def check_axis_order(axes: Sequence[AxisSpec]) -> list[str]:
    """Problems with the nonlocal -> periodic -> Dirichlet ordering (empty if fine)."""
    problems = []
    if not axes:
        problems.append("axes: at least one axis is required")
    ranks = [_KIND_RANK[a.kind] for a in axes]
    for j in range(1, len(ranks)):
        if ranks[j] < ranks[j - 1]:
            problems.append(
                f"axes[{j}]: {axes[j].kind.value} axis after {axes[j - 1].kind.value};"
                " order must be nonlocal, periodic, Dirichlet"
            )
    return problems


@dataclass(frozen=True)
class ModeIndex:
    m: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "m", tuple(int(v) for v in self.m))

    def __len__(self) -> int:
        return len(self.m)

    def __iter__(self):
        return iter(self.m)

    def __getitem__(self, j: int) -> int:
        return self.m[j]


def _as_index(m) -> ModeIndex:
    return m if isinstance(m, ModeIndex) else ModeIndex(tuple(m))


def axis_lambda(axis: AxisSpec, m_j: int) -> float:
    """Frequency of the axis factor with index ``m_j``."""
    if m_j != int(m_j):
        raise IndexDomainError(f"mode index must be an integer, got {m_j}")
    m_j = int(m_j)
    if axis.kind is AxisKind.NONLOCAL:
        return 2.0 * m_j + axis.phi
    if axis.kind is AxisKind.PERIODIC:
        return 2.0 * m_j
    if m_j < 1:
        raise IndexDomainError(f"Dirichlet axis index must be >= 1, got {m_j}")
    return float(m_j)


def mode_mu(axes: Sequence[AxisSpec], m) -> float:
    m = _as_index(m)
    if len(m) != len(axes):
        raise IndexDomainError(f"index has {len(m)} entries for {len(axes)} axes")
    return float(sum(axis_lambda(ax, mj) ** 2 for ax, mj in zip(axes, m)))


@dataclass(frozen=True)
class EigenData:
    phi: tuple[float, ...]
    lam: tuple[float, ...]
    mu: float
    l2_norm_const: float
    sobolev_weight: float


def eigen_data(axes: Sequence[AxisSpec], m) -> EigenData:
    """Frequencies, eigenvalue and normalization constants of one mode."""
    m = _as_index(m)
    lam = tuple(axis_lambda(ax, mj) for ax, mj in zip(axes, m))
    phi = tuple(ax.phi for ax in axes if ax.kind is AxisKind.NONLOCAL)
    const = 1.0
    weight = 1.0
    for ax, lj in zip(axes, lam):
        if ax.kind is AxisKind.NONLOCAL:
            const *= _SQ2PI / math.hypot(ax.alpha, ax.beta)
        elif ax.kind is AxisKind.PERIODIC:
            const *= 1.0 / _SQPI
        else:
            const *= _SQ2PI
        weight *= 1.0 + abs(lj) ** (2.0 * ax.s)
    return EigenData(phi, lam, mode_mu(axes, m), const, weight)


def axis_factor(axis: AxisSpec, m_j: int, x, deriv: int = 0, *, lam: float | None = None):
    """L2-normalized axis factor (or its ``deriv``-th derivative) at ``x``.

    ``lam`` overrides the frequency (used to test detuned eigenvalues).
    """
    x = np.asarray(x, dtype=float)
    lj = axis_lambda(axis, m_j) if lam is None else float(lam)
    if axis.kind is AxisKind.NONLOCAL:
        a, b = axis.alpha, axis.beta
        sgn = math.copysign(1.0, b * b - a * a)
        shift = deriv * math.pi / 2
        val = sgn * a * np.sin(lj * x + shift) + b * np.cos(lj * x + shift)
        return _SQ2PI / math.hypot(a, b) * lj**deriv * val
    if axis.kind is AxisKind.PERIODIC:
        return (1j * lj) ** deriv * np.exp(1j * lj * x) / _SQPI
    return _SQ2PI * lj**deriv * np.sin(lj * x + deriv * math.pi / 2)


def _factors(axes, m, x, deriv_axis=None, deriv=0):
    m = _as_index(m)
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != len(axes):
        raise ValueError(f"points need {len(axes)} coordinates")
    out = np.ones(x.shape[:-1], dtype=complex)
    for j, ax in enumerate(axes):
        d = deriv if j == deriv_axis else 0
        out = out * axis_factor(ax, m[j], x[..., j], d)
    return out


def eigenfunction_eval(axes: Sequence[AxisSpec], m, x, normalization: str = "L2"):
    """Product eigenfunction at points ``x`` (last axis = coordinates).

    ``normalization="sobolev"`` divides each factor by
    ``sqrt(1 + |lam_j|**(2 s_j))``.  The result is real unless a periodic
    axis is present.
    """
    out = _factors(axes, m, x)
    if normalization.lower() == "sobolev":
        out = out / math.sqrt(eigen_data(axes, m).sobolev_weight)
    elif normalization.upper() != "L2":
        raise ValueError(f"unknown normalization {normalization!r}")
    if not any(ax.kind is AxisKind.PERIODIC for ax in axes):
        out = out.real
    return out[()]


def laplacian_eval(axes: Sequence[AxisSpec], m, x):
    """Analytic Laplacian of the L2-normalized eigenfunction."""
    total = sum(_factors(axes, m, x, j, 2) for j in range(len(axes)))
    if not any(ax.kind is AxisKind.PERIODIC for ax in axes):
        total = total.real
    return np.asarray(total)[()]


def verify_boundary_conditions(
    axes: Sequence[AxisSpec], m, tol: float = 1e-12, *, detune: float = 0.0
) -> bool:
    """Check every boundary family on every axis factor of mode ``m``.

    ``detune`` is added to each frequency before checking.
    """
    m = _as_index(m)
    for ax, mj in zip(axes, m):
        lam = axis_lambda(ax, mj) + detune
        scale = 1.0 + abs(lam)

        def v(x, d=0, ax=ax, mj=mj, lam=lam):
            return complex(axis_factor(ax, mj, x, d, lam=lam))

        if ax.kind is AxisKind.NONLOCAL:
            conds = [
                ax.alpha * v(0.0) + ax.beta * v(math.pi),
                (ax.beta * v(0.0, 1) + ax.alpha * v(math.pi, 1)) / scale,
            ]
        elif ax.kind is AxisKind.PERIODIC:
            conds = [v(0.0) - v(math.pi), (v(0.0, 1) - v(math.pi, 1)) / scale]
        else:
            conds = [v(0.0), v(math.pi)]
        if max(abs(c) for c in conds) > tol:
            return False
    return True


@dataclass(frozen=True)
class RieszReport:
    theta: tuple[float, ...]
    rho: float
    satisfied: bool


def riesz_criterion(axes: Sequence[AxisSpec]) -> RieszReport:
    """Sufficient Riesz-basis criterion ``rho < 1`` over the nonlocal axes.

    ``theta_j = sqrt(2) max |exp(i phi x) - 1| = 2 sqrt(2) sin(phi pi / 2)``.
    With no nonlocal axis the criterion is vacuous and ``rho = 0``.
    """
    thetas = []
    rho = 0.0
    for ax in axes:
        if ax.kind is not AxisKind.NONLOCAL:
            continue
        phi = ax.phi
        theta = 2.0 * math.sqrt(2.0) * math.sin(phi * math.pi / 2.0)
        sigma = 1.0 / math.sqrt(2.0) if ax.s == 0 else 1.0
        inner = theta / math.sqrt(2.0) + (phi + 1.0) ** ax.s - 1.0
        thetas.append(theta)
        rho = max(rho, math.sqrt(theta**2 + 2.0 * inner**2 * sigma))
    return RieszReport(tuple(thetas), rho, rho < 1.0)


def mode_box(axes: Sequence[AxisSpec], M: int) -> list[ModeIndex]:
    """All modes with ``|m_j| <= M`` (``1 <= m_j <= M`` on Dirichlet axes)."""
    ranges = [
        range(1, M + 1) if ax.kind is AxisKind.DIRICHLET else range(-M, M + 1) for ax in axes
    ]
    return [ModeIndex(m) for m in itertools.product(*ranges)]


def validate_axes(axes: Sequence[AxisSpec]) -> None:
    problems = check_axis_order(axes)
    if problems:
        raise ValidationError(problems)

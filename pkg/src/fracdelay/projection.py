"""Fourier coefficients against the product eigenbasis, and back.

Coefficients are ``c_m = int_Pi data(y) conj(v_m(y)) dy`` for the
L2-normalized eigenfunctions.  Because ``v_m`` is a tensor product, the
N-dimensional integral is a chain of 1D contractions, one per axis, with
composite Simpson weights on uniform grids.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator, Sequence

import numpy as np
from scipy.integrate import simpson

from .basis import AxisKind, AxisSpec, ModeIndex, axis_factor, axis_lambda
from .errors import AliasError

__all__ = [
    "GridFn",
    "CoeffSet",
    "axis_modes",
    "project",
    "reconstruct",
    "reconstruct_grid",
    "sobolev_coeff_norm",
]

_MIN_NODES = 8


def _uniform(n: int) -> np.ndarray:
    return np.linspace(0.0, math.pi, n)


@dataclass(frozen=True, eq=False)
class GridFn:
    """Values on a tensor grid of uniform per-axis nodes over [0, pi]."""

    nodes: tuple[np.ndarray, ...]
    values: np.ndarray
    time: float | None = None

    def __post_init__(self) -> None:
        nodes = tuple(np.asarray(x, dtype=float) for x in self.nodes)
        values = np.asarray(self.values)
        for j, x in enumerate(nodes):
            if x.ndim != 1 or x.size < _MIN_NODES:
                raise ValueError(f"axis {j}: need at least {_MIN_NODES} nodes")
            if not np.allclose(x, _uniform(x.size), rtol=0, atol=1e-12):
                raise ValueError(f"axis {j}: nodes must be uniform on [0, pi]")
        if values.shape != tuple(x.size for x in nodes):
            raise ValueError(
                f"value tensor shape {values.shape} does not match grid "
                f"{tuple(x.size for x in nodes)}"
            )
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "values", values)

    @classmethod
    def sample(cls, func, shape: Sequence[int], time: float | None = None) -> GridFn:
        """Sample ``func(x_1, ..., x_N)`` (broadcasting) on a uniform grid."""
        nodes = tuple(_uniform(n) for n in shape)
        mesh = np.meshgrid(*nodes, indexing="ij")
        values = np.broadcast_to(np.asarray(func(*mesh)), mesh[0].shape).copy()
        return cls(nodes, values, time)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.values.shape


def axis_modes(axis: AxisSpec, M: int) -> tuple[int, ...]:
    """Indices kept on one axis: ``-M..M``, or ``1..M`` for Dirichlet axes."""
    if axis.kind is AxisKind.DIRICHLET:
        return tuple(range(1, M + 1))
    return tuple(range(-M, M + 1))


@dataclass(frozen=True, eq=False)
class CoeffSet:
    """Coefficients on the truncation box, stored as a dense tensor.

    ``modes[j]`` lists the indices kept on axis ``j``; ``values`` has one
    axis per spatial axis.  Behaves as a read-only mapping
    ``ModeIndex -> complex``.
    """

    modes: tuple[tuple[int, ...], ...]
    values: np.ndarray
    M: int

    def __post_init__(self) -> None:
        modes = tuple(tuple(int(v) for v in r) for r in self.modes)
        values = np.asarray(self.values, dtype=complex)
        if values.shape != tuple(len(r) for r in modes):
            raise ValueError("coefficient tensor does not match the mode ranges")
        object.__setattr__(self, "modes", modes)
        object.__setattr__(self, "values", values)

    @classmethod
    def zeros(cls, axes: Sequence[AxisSpec], M: int) -> CoeffSet:
        modes = tuple(axis_modes(ax, M) for ax in axes)
        return cls(modes, np.zeros(tuple(len(r) for r in modes), dtype=complex), M)

    @classmethod
    def from_dict(cls, axes: Sequence[AxisSpec], M: int, entries: dict) -> CoeffSet:
        out = cls.zeros(axes, M)
        vals = out.values.copy()
        for key, c in entries.items():
            vals[out._position(key)] = c
        return cls(out.modes, vals, M)

    def _position(self, key) -> tuple[int, ...]:
        m = key.m if isinstance(key, ModeIndex) else tuple(key)
        try:
            return tuple(r.index(int(mj)) for r, mj in zip(self.modes, m))
        except ValueError:
            raise KeyError(key) from None

    def __getitem__(self, key) -> complex:
        return complex(self.values[self._position(key)])

    def get(self, key, default: complex = 0.0) -> complex:
        try:
            return self[key]
        except KeyError:
            return default

    def __iter__(self) -> Iterator[ModeIndex]:
        for pos in np.ndindex(*self.values.shape):
            yield ModeIndex(tuple(r[i] for r, i in zip(self.modes, pos)))

    def __len__(self) -> int:
        return self.values.size

    def items(self):
        for pos in np.ndindex(*self.values.shape):
            yield ModeIndex(tuple(r[i] for r, i in zip(self.modes, pos))), complex(self.values[pos])

    def map(self, values: np.ndarray) -> CoeffSet:
        return CoeffSet(self.modes, values, self.M)


@lru_cache(maxsize=32)
def _simpson_weights(n: int) -> np.ndarray:
    w = simpson(np.eye(n), x=_uniform(n), axis=1)
    w.flags.writeable = False
    return w


def _axis_matrix(axis: AxisSpec, modes: Sequence[int], x: np.ndarray) -> np.ndarray:
    """Rows: factor of each kept mode at the points ``x``."""
    return np.array([axis_factor(axis, m, x) for m in modes], dtype=complex)


def project(data: GridFn, axes: Sequence[AxisSpec], M: int) -> CoeffSet:
    """Coefficients of ``data`` for every mode in the truncation box."""
    if len(axes) != data.values.ndim:
        raise ValueError(f"data has {data.values.ndim} axes but {len(axes)} axis specs were given")
    if M < 1:
        raise ValueError("truncation radius must be >= 1")
    for j, x in enumerate(data.nodes):
        if x.size < 4 * M:
            raise AliasError(f"axis {j}: {x.size} nodes is below 4*M = {4 * M}")
    modes = tuple(axis_modes(ax, M) for ax in axes)
    out = np.asarray(data.values, dtype=complex)
    for j, (ax, x) in enumerate(zip(axes, data.nodes)):
        A = np.conj(_axis_matrix(ax, modes[j], x)) * _simpson_weights(x.size)[None, :]
        out = np.moveaxis(np.tensordot(A, out, axes=([1], [j])), 0, j)
    return CoeffSet(modes, out, M)


def reconstruct(coeffs: CoeffSet, axes: Sequence[AxisSpec], x) -> np.ndarray:
    """Truncated series at points ``x`` (last axis = coordinates)."""
    x = np.asarray(x, dtype=float)
    pts = x.reshape(-1, len(axes))
    out = coeffs.values
    # contract one axis at a time, keeping the point axis in front
    F = [_axis_matrix(ax, coeffs.modes[j], pts[:, j]).T for j, ax in enumerate(axes)]
    acc = np.einsum("pk,k...->p...", F[0], out) if out.size else np.zeros(len(pts))
    for j in range(1, len(axes)):
        acc = np.einsum("pk,pk...->p...", F[j], acc)
    return acc.reshape(x.shape[:-1])[()]


def reconstruct_grid(
    coeffs: CoeffSet, axes: Sequence[AxisSpec], nodes: Sequence[np.ndarray]
) -> np.ndarray:
    """Truncated series on the tensor grid spanned by per-axis ``nodes``."""
    out = coeffs.values
    for j, (ax, x) in enumerate(zip(axes, nodes)):
        F = _axis_matrix(ax, coeffs.modes[j], np.asarray(x, dtype=float)).T
        out = np.moveaxis(np.tensordot(F, out, axes=([1], [j])), 0, j)
    return out


def _weight_tensor(coeffs: CoeffSet, axes: Sequence[AxisSpec], power: float) -> np.ndarray:
    w = np.ones(coeffs.values.shape)
    for j, ax in enumerate(axes):
        lam = np.array([abs(axis_lambda(ax, m)) for m in coeffs.modes[j]])
        shape = [1] * len(axes)
        shape[j] = lam.size
        w = w * (1.0 + lam ** (power * ax.s)).reshape(shape)
    return w


def sobolev_coeff_norm(coeffs: CoeffSet, axes: Sequence[AxisSpec], weight_mode: str = "2s") -> float:
    """``sum |c_m|^2 prod_k (1 + |lam_k|^(s_k))`` or with exponent ``2 s_k``."""
    if weight_mode not in ("s", "2s"):
        raise ValueError(f"weight_mode must be 's' or '2s', got {weight_mode!r}")
    power = 1.0 if weight_mode == "s" else 2.0
    return float(np.sum(np.abs(coeffs.values) ** 2 * _weight_tensor(coeffs, axes, power)))

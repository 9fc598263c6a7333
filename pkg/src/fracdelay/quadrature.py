"""Gauss rules and graded composite rules for weakly singular integrals."""

from __future__ import annotations

from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi, roots_legendre

__all__ = [
    "gauss_legendre",
    "gauss_jacobi",
    "kernel_rule",
    "graded_rule",
    "ChebPanels",
]


@lru_cache(maxsize=64)
def gauss_legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights on [0, 1]."""
    x, w = roots_legendre(n)
    x = 0.5 * (x + 1.0)
    w = 0.5 * w
    x.flags.writeable = False
    w.flags.writeable = False
    return x, w


@lru_cache(maxsize=256)
def gauss_jacobi(n: int, e: float) -> tuple[np.ndarray, np.ndarray]:
    """Rule for ``int_0^1 g(u) u**e du`` (singular end at ``u = 0``)."""
    # roots_jacobi(n, a, b) has weight (1-x)^a (1+x)^b on [-1, 1]
    x, w = roots_jacobi(n, 0.0, e)
    u = 0.5 * (x + 1.0)
    w = w * 0.5 ** (e + 1.0)
    u.flags.writeable = False
    w.flags.writeable = False
    return u, w


def kernel_rule(
    length: float,
    exponent: float,
    *,
    first: float,
    breaks: np.ndarray | None = None,
    order: int = 16,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Rule for ``int_0^length g(w) w**exponent dw``.

    ``g`` may behave like a power series in ``w**a`` near 0: the interval
    is cut dyadically from ``first`` upwards, the cell ``[0, first]`` gets a
    Gauss-Jacobi rule, the others Gauss-Legendre.  Extra ``breaks`` (e.g.
    panel edges of a piecewise interpolant of ``g``) are inserted so no cell
    straddles one.  Returns ``(w, weights, cell_index)``; the weights include
    the factor ``w**exponent``.
    """
    if length <= 0:
        return np.empty(0), np.empty(0), np.empty(0, dtype=int)
    first = min(first, length)
    cuts = [0.0]
    c = first
    while c < length:
        cuts.append(c)
        c *= 2.0
    cuts.append(length)
    if breaks is not None and breaks.size:
        inner = breaks[(breaks > 0) & (breaks < length)]
        cuts = np.unique(np.concatenate([cuts, inner]))
    else:
        cuts = np.asarray(cuts)
    gx, gw = gauss_legendre(order)
    lo = cuts[:-1]
    hi = cuts[1:]
    width = hi - lo
    nodes = lo[:, None] + width[:, None] * gx[None, :]
    weights = width[:, None] * gw[None, :] * nodes**exponent
    cell = np.repeat(np.arange(lo.size), order)
    ju, jw = gauss_jacobi(order, float(exponent))
    nodes[0] = width[0] * ju
    weights[0] = jw * width[0] ** (exponent + 1.0)
    return nodes.ravel(), weights.ravel(), cell


def graded_rule(
    a: float, b: float, *, levels: int = 110, order: int = 16
) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre rule on [a, b], graded dyadically toward both ends.

    Suited to integrands with integrable power singularities at either end.
    """
    if b <= a:
        return np.empty(0), np.empty(0)
    mid = 0.5 * (a + b)
    half = mid - a
    k = np.arange(levels, dtype=float)
    # offsets from the end point: [half*2^-(k+1), half*2^-k]
    outer = half * 2.0 ** (-k)
    inner = half * 2.0 ** (-k - 1)
    gx, gw = gauss_legendre(order)
    width = outer - inner
    off = inner[:, None] + width[:, None] * gx[None, :]
    wts = width[:, None] * gw[None, :]
    off = off.ravel()
    wts = wts.ravel()
    x = np.concatenate([a + off, b - off])
    w = np.concatenate([wts, wts])
    keep = (x > a) & (x < b)
    return x[keep], w[keep]


class ChebPanels:
    """Piecewise Chebyshev (first kind) interpolation on given panel edges.

    Values live at ``order`` interior Chebyshev points per panel, so no node
    sits on a panel edge (where interpolated functions may be singular).
    """

    def __init__(self, edges: np.ndarray, order: int = 12) -> None:
        edges = np.asarray(edges, dtype=float)
        if edges.ndim != 1 or edges.size < 2 or np.any(np.diff(edges) <= 0):
            raise ValueError("panel edges must be strictly increasing")
        self.edges = edges
        self.order = order
        k = np.arange(order)
        self.ref = -np.cos(np.pi * (k + 0.5) / order)  # ascending on (-1, 1)
        bw = (-1.0) ** k * np.sin(np.pi * (k + 0.5) / order)
        self.bary = bw * (-1.0) ** (order - 1)  # sign matches ascending order
        lo = edges[:-1, None]
        hi = edges[1:, None]
        self.nodes = (0.5 * (lo + hi) + 0.5 * (hi - lo) * self.ref[None, :]).ravel()

    @property
    def size(self) -> int:
        return self.nodes.size

    @property
    def panels(self) -> int:
        return self.edges.size - 1

    def locate(self, x: np.ndarray) -> np.ndarray:
        idx = np.searchsorted(self.edges, x, side="right") - 1
        return np.clip(idx, 0, self.panels - 1)

    def basis(self, x: np.ndarray, panel: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray]:
        """Lagrange basis values at ``x``.

        Returns ``(panel, L)`` with ``L[i, k]`` the k-th basis polynomial of
        ``panel[i]`` at ``x[i]``.
        """
        x = np.asarray(x, dtype=float)
        if panel is None:
            panel = self.locate(x)
        lo = self.edges[panel]
        hi = self.edges[panel + 1]
        t = (2.0 * x - lo - hi) / (hi - lo)
        diff = t[:, None] - self.ref[None, :]
        hit = diff == 0.0
        diff[hit] = 1.0
        q = self.bary[None, :] / diff
        L = q / q.sum(axis=1, keepdims=True)
        rows = hit.any(axis=1)
        if rows.any():
            L[rows] = hit[rows].astype(float)
        return panel, L

    def evaluate(self, values: np.ndarray, x) -> np.ndarray:
        """Interpolate node ``values`` (last axis = nodes) at ``x``."""
        values = np.asarray(values)
        xx = np.asarray(x, dtype=float)
        panel, L = self.basis(np.atleast_1d(xx).ravel())
        v = values.reshape(values.shape[:-1] + (self.panels, self.order))
        out = np.sum(v[..., panel, :] * L, axis=-1)
        return out.reshape(values.shape[:-1] + xx.shape)[()]

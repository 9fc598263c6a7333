from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fracdelay.basis import AxisSpec, eigenfunction_eval
from fracdelay.errors import AliasError
from fracdelay.projection import (
    CoeffSet,
    GridFn,
    project,
    reconstruct,
    reconstruct_grid,
    sobolev_coeff_norm,
)

D = AxisSpec.dirichlet
P = AxisSpec.periodic
NL = AxisSpec.nonlocal_

AXIS_SETS = [
    [D()],
    [P()],
    [NL(1.0, 2.0)],
    [NL(1.0, -1.05), P()],
    [P(), D()],
    [NL(1.0, 2.0), D()],
]


def _eigen_grid(axes, m, n):
    def f(*xs):
        pts = np.stack(xs, axis=-1)
        return eigenfunction_eval(axes, m, pts)

    return GridFn.sample(f, [n] * len(axes))


class TestProject:
    def test_sine(self):
        c = project(GridFn.sample(lambda x: np.sin(2 * x), [257]), [D()], 8)
        assert c[(2,)] == pytest.approx(math.sqrt(math.pi / 2), abs=1e-8)
        others = [abs(v) for k, v in c.items() if k.m != (2,)]
        assert max(others) < 1e-8

    @pytest.mark.parametrize("axes", AXIS_SETS)
    def test_eigenmode(self, axes):
        m = tuple(1 if ax.kind.name == "DIRICHLET" else -1 for ax in axes)
        c = project(_eigen_grid(axes, m, 257), axes, 3)
        assert c[m] == pytest.approx(1.0, abs=1e-8)
        assert max(abs(v) for k, v in c.items() if k.m != m) < 1e-8

    def test_zero(self):
        c = project(GridFn.sample(lambda x, y: 0 * x, [33, 33]), [P(), D()], 4)
        assert np.all(c.values == 0)

    def test_alias_guard(self):
        with pytest.raises(AliasError):
            project(GridFn.sample(np.sin, [31]), [D()], 8)

    def test_grid_validation(self):
        with pytest.raises(ValueError):
            GridFn((np.linspace(0, math.pi, 5),), np.zeros(5))
        with pytest.raises(ValueError):
            GridFn((np.linspace(0, 3, 9),), np.zeros(9))


def _band_limited(axes, M, rng):
    cs = CoeffSet.zeros(axes, M)
    vals = rng.normal(size=cs.values.shape) + 1j * rng.normal(size=cs.values.shape)
    return cs.map(vals)


class TestReconstruct:
    @pytest.mark.parametrize("axes", AXIS_SETS)
    def test_roundtrip(self, axes):
        rng = np.random.default_rng(3)
        cs = _band_limited(axes, 3, rng)
        nodes = [np.linspace(0, math.pi, 257)] * len(axes)
        grid = GridFn(tuple(nodes), reconstruct_grid(cs, axes, nodes))
        back = project(grid, axes, 3)
        assert np.max(np.abs(back.values - cs.values)) <= 1e-7
        x = rng.uniform(0, math.pi, size=(20, len(axes)))
        direct = reconstruct(back, axes, x)
        assert np.max(np.abs(direct - reconstruct(cs, axes, x))) <= 1e-7

    def test_unit_coefficient(self):
        axes = [NL(1.0, 2.0), P()]
        cs = CoeffSet.from_dict(axes, 2, {(1, -2): 1.0})
        x = np.array([[0.3, 1.1], [2.0, 0.1]])
        np.testing.assert_allclose(reconstruct(cs, axes, x), eigenfunction_eval(axes, (1, -2), x), atol=1e-14)

    def test_empty(self):
        axes = [D(), D()]
        assert reconstruct(CoeffSet.zeros(axes, 2), axes, np.array([1.0, 2.0])) == 0


class TestProperties:
    @pytest.mark.parametrize("axes", AXIS_SETS)
    def test_parseval_band_limited(self, axes):
        cs = _band_limited(axes, 3, np.random.default_rng(11))
        nodes = [np.linspace(0, math.pi, 513)] * len(axes)
        vals = reconstruct_grid(cs, axes, nodes)
        norm2 = np.abs(vals) ** 2
        for x in reversed(nodes):
            norm2 = np.trapezoid(norm2, x, axis=-1) if hasattr(np, "trapezoid") else np.trapz(norm2, x, axis=-1)
        c = project(GridFn(tuple(nodes), vals), axes, 3)
        assert float(np.sum(np.abs(c.values) ** 2)) == pytest.approx(float(norm2), rel=1e-6)

    def test_bessel_inequality(self):
        grid = GridFn.sample(lambda x: np.abs(x - 1.0), [1025])
        c = project(grid, [D()], 6)
        norm2 = float(np.trapezoid(grid.values**2, grid.nodes[0]))
        assert float(np.sum(np.abs(c.values) ** 2)) <= norm2 + 1e-6

    @given(st.floats(-3, 3), st.floats(-3, 3), st.integers(0, 2**31))
    def test_linearity(self, a, b, seed):
        rng = np.random.default_rng(seed)
        axes = [NL(1.0, -2.0), P()]
        shape = (33, 33)
        nodes = tuple(np.linspace(0, math.pi, n) for n in shape)
        f = rng.normal(size=shape) + 1j * rng.normal(size=shape)
        g = rng.normal(size=shape)
        lhs = project(GridFn(nodes, a * f + b * g), axes, 4).values
        rhs = a * project(GridFn(nodes, f), axes, 4).values + b * project(GridFn(nodes, g), axes, 4).values
        assert np.max(np.abs(lhs - rhs)) <= 1e-10 * (1 + np.max(np.abs(rhs)))

    @given(st.integers(0, 2**31))
    def test_conjugate_symmetry(self, seed):
        rng = np.random.default_rng(seed)
        axes = [P(), D()]
        nodes = tuple(np.linspace(0, math.pi, 33) for _ in range(2))
        c = project(GridFn(nodes, rng.normal(size=(33, 33))), axes, 4)
        for key, v in c.items():
            mirror = (-key.m[0], key.m[1])
            assert abs(c[mirror] - np.conj(v)) <= 1e-10


class TestSobolevNorm:
    def test_all_ones_dirichlet(self):
        for N in (1, 2, 3):
            axes = [D(s=0.0)] * N
            cs = CoeffSet.from_dict(axes, 2, {(1,) * N: 1.0})
            assert sobolev_coeff_norm(cs, axes, "s") == pytest.approx(2.0**N)
            assert sobolev_coeff_norm(cs, axes, "2s") == pytest.approx(2.0**N)

    def test_zero(self):
        axes = [NL(1.0, 2.0, 3.0)]
        assert sobolev_coeff_norm(CoeffSet.zeros(axes, 5), axes) == 0.0

    def test_geometric(self):
        axes = [D(s=1.0)]
        cs = CoeffSet.from_dict(axes, 32, {(m,): 2.0**-m for m in range(1, 33)})
        exact = sum(Fraction(1, 4**m) * (1 + m * m) for m in range(1, 33))
        assert sobolev_coeff_norm(cs, axes, "2s") == pytest.approx(float(exact), rel=1e-14)
        assert float(exact) == pytest.approx(29 / 27, rel=1e-15)

    def test_bad_mode(self):
        axes = [D()]
        with pytest.raises(ValueError):
            sobolev_coeff_norm(CoeffSet.zeros(axes, 1), axes, "3s")

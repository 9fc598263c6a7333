from __future__ import annotations

import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import simpson

from fracdelay.basis import (
    AxisKind,
    AxisSpec,
    ModeIndex,
    axis_factor,
    axis_lambda,
    check_axis_order,
    eigen_data,
    eigenfunction_eval,
    laplacian_eval,
    mode_box,
    mode_mu,
    phi_exponent,
    riesz_criterion,
    validate_axes,
    verify_boundary_conditions,
)
from fracdelay.errors import DegenerateAxisError, IndexDomainError, ValidationError

SQ2PI = math.sqrt(2 / math.pi)


def _nonlocal_pairs():
    return st.tuples(st.floats(-3, 3), st.floats(-3, 3)).filter(
        lambda ab: abs(ab[0]) > 0.05 and abs(ab[1]) > 0.05 and abs(abs(ab[0]) - abs(ab[1])) > 0.05
    )


@st.composite
def axis_sets(draw, max_axes=3):
    n_nl = draw(st.integers(0, max_axes))
    n_per = draw(st.integers(0, max_axes - n_nl))
    n_dir = draw(st.integers(0 if n_nl + n_per else 1, max_axes - n_nl - n_per))
    axes = [AxisSpec.nonlocal_(*draw(_nonlocal_pairs())) for _ in range(n_nl)]
    axes += [AxisSpec.periodic() for _ in range(n_per)]
    axes += [AxisSpec.dirichlet() for _ in range(n_dir)]
    return axes


class TestPhi:
    @pytest.mark.parametrize(
        "a, b, phi", [(1.0, 2.0, 0.7951672), (1.0, -2.0, 0.2048328), (1.0, -1.05, 0.0155240)]
    )
    def test_values(self, a, b, phi):
        # the last example is quoted to ~6 digits; the exact value is 0.01552423...
        assert phi_exponent(a, b) == pytest.approx(phi, abs=1e-6)

    @pytest.mark.parametrize("a, b", [(1.0, 2.0), (1.0, -2.0), (1.0, -1.05), (-0.4, 2.5)])
    def test_against_mpmath(self, a, b):
        with mpmath.workdps(40):
            ref = mpmath.acos(-2 * mpmath.mpf(a) * b / (mpmath.mpf(a) ** 2 + mpmath.mpf(b) ** 2)) / mpmath.pi
        assert phi_exponent(a, b) == pytest.approx(float(ref), rel=1e-13)

    @pytest.mark.parametrize("a, b", [(1.0, 1.0), (2.0, -2.0), (0.0, 1.0), (1.0, 0.0)])
    def test_degenerate(self, a, b):
        with pytest.raises(DegenerateAxisError):
            phi_exponent(a, b)

    @given(_nonlocal_pairs())
    def test_open_unit_interval(self, ab):
        assert 0 < phi_exponent(*ab) < 1


class TestLambdaMu:
    def test_axis_lambda(self):
        assert axis_lambda(AxisSpec.nonlocal_(1, 2), 1) == pytest.approx(2.7951672353, abs=1e-9)
        assert axis_lambda(AxisSpec.periodic(), -3) == -6.0
        assert axis_lambda(AxisSpec.dirichlet(), 4) == 4.0

    def test_dirichlet_index_domain(self):
        with pytest.raises(IndexDomainError):
            axis_lambda(AxisSpec.dirichlet(), 0)

    def test_mode_mu(self):
        axes = [AxisSpec.nonlocal_(1, 2), AxisSpec.dirichlet()]
        assert mode_mu(axes, (1, 1)) == pytest.approx(8.81296, abs=1e-4)
        assert mode_mu([AxisSpec.dirichlet()] * 3, (1, 1, 1)) == 3.0
        assert mode_mu([AxisSpec.periodic(), AxisSpec.dirichlet()], (0, 2)) == 4.0

    def test_eigen_data(self):
        axes = [AxisSpec.dirichlet(s=1.0), AxisSpec.periodic(s=0.5)]
        ed = eigen_data(axes, (2, -1))
        assert ed.mu == 8.0
        assert ed.sobolev_weight == pytest.approx((1 + 4) * (1 + 2))
        assert ed.l2_norm_const == pytest.approx(SQ2PI / math.sqrt(math.pi))


class TestEigenfunctions:
    def test_factor_values(self):
        assert axis_factor(AxisSpec.dirichlet(), 1, math.pi / 2) == pytest.approx(SQ2PI)
        assert axis_factor(AxisSpec.periodic(), 0, 1.234) == pytest.approx(1 / math.sqrt(math.pi))
        val = axis_factor(AxisSpec.nonlocal_(1, 2), 0, 0.0)
        assert val == pytest.approx(SQ2PI * 2 / math.sqrt(5), rel=1e-14)
        assert val == pytest.approx(0.7136496, abs=1e-7)

    def test_real_unless_periodic(self):
        x = np.array([[0.3, 0.4]])
        assert not np.iscomplexobj(eigenfunction_eval([AxisSpec.nonlocal_(1, 2), AxisSpec.dirichlet()], (1, 2), x))
        assert np.iscomplexobj(eigenfunction_eval([AxisSpec.periodic(), AxisSpec.dirichlet()], (1, 2), x))

    def test_sobolev_normalization(self):
        axes = [AxisSpec.dirichlet(s=2.0)]
        x = np.array([[0.7]])
        ratio = eigenfunction_eval(axes, (3,), x) / eigenfunction_eval(axes, (3,), x, "sobolev")
        assert ratio == pytest.approx(math.sqrt(1 + 3.0**4))

    @given(axis_sets(), st.data())
    def test_eigen_equation(self, axes, data):
        m = [data.draw(st.integers(1, 6) if ax.kind is AxisKind.DIRICHLET else st.integers(-6, 6)) for ax in axes]
        rng = np.random.default_rng(0)
        x = rng.uniform(0.01, math.pi - 0.01, size=(100, len(axes)))
        v = eigenfunction_eval(axes, m, x)
        lap = laplacian_eval(axes, m, x)
        mu = mode_mu(axes, m)
        scale = max(1.0, mu) * np.max(np.abs(v)) + 1e-300
        assert np.max(np.abs(lap + mu * v)) <= 1e-6 * scale

    @given(axis_sets(), st.data())
    def test_boundary_conditions(self, axes, data):
        m = [data.draw(st.integers(1, 6) if ax.kind is AxisKind.DIRICHLET else st.integers(-6, 6)) for ax in axes]
        assert verify_boundary_conditions(axes, m)
        assert not verify_boundary_conditions(axes, m, detune=1e-3)
        assert not verify_boundary_conditions(axes, m, detune=0.1)

    @pytest.mark.parametrize(
        "axis", [AxisSpec.nonlocal_(1, 2), AxisSpec.nonlocal_(-0.3, 1.7), AxisSpec.periodic(), AxisSpec.dirichlet()]
    )
    def test_gram_identity(self, axis):
        x = np.linspace(0, math.pi, 4097)
        ms = range(1, 6) if axis.kind is AxisKind.DIRICHLET else range(-5, 6)
        F = np.array([axis_factor(axis, m, x) for m in ms])
        G = simpson(F[:, None, :] * np.conj(F[None, :, :]), x=x, axis=-1)
        np.testing.assert_allclose(G, np.eye(len(ms)), atol=1e-8)

    @pytest.mark.parametrize(
        "axis", [AxisSpec.nonlocal_(1, 2, 1.0), AxisSpec.periodic(1.0), AxisSpec.dirichlet(1.0)]
    )
    def test_sobolev_gram_identity(self, axis):
        # H^1 inner product of the Sobolev-normalized factors (s = 1)
        x = np.linspace(0, math.pi, 4097)
        ms = range(1, 5) if axis.kind is AxisKind.DIRICHLET else range(-3, 4)
        w = np.array([math.sqrt(1 + axis_lambda(axis, m) ** 2) for m in ms])
        F = np.array([axis_factor(axis, m, x) for m in ms]) / w[:, None]
        D = np.array([axis_factor(axis, m, x, 1) for m in ms]) / w[:, None]
        G = simpson(F[:, None] * np.conj(F[None]) + D[:, None] * np.conj(D[None]), x=x, axis=-1)
        np.testing.assert_allclose(G, np.eye(len(ms)), atol=1e-8)


class TestRiesz:
    def test_not_satisfied_near_half(self):
        # phi -> 1/2 as beta -> infinity with alpha fixed
        rep = riesz_criterion([AxisSpec.nonlocal_(1e-7, 1.0)])
        assert not rep.satisfied
        assert rep.rho == pytest.approx(2.6131, abs=1e-3)

    def test_regime_below_one(self):
        rep = riesz_criterion([AxisSpec.nonlocal_(1.0, -1.05)])
        # 2 sqrt(2) sin(pi phi / 2) reduces to 0.1 / sqrt(2.1025) = 2/29 here
        assert rep.theta[0] == pytest.approx(2 / 29, rel=1e-12)
        assert rep.theta[0] == pytest.approx(0.068972, abs=1e-5)
        assert rep.rho == pytest.approx(0.0901, abs=1e-3)
        assert rep.satisfied

    def test_vacuous_without_nonlocal(self):
        rep = riesz_criterion([AxisSpec.periodic(), AxisSpec.dirichlet()])
        assert rep.rho == 0.0 and rep.satisfied and rep.theta == ()

    @given(_nonlocal_pairs(), st.floats(0, 3), st.floats(0, 3))
    def test_monotone_in_s(self, ab, s1, s2):
        lo, hi = sorted((s1, s2))
        r_lo = riesz_criterion([AxisSpec.nonlocal_(*ab, s=lo)]).rho
        r_hi = riesz_criterion([AxisSpec.nonlocal_(*ab, s=hi)]).rho
        if lo > 0:
            assert r_hi >= r_lo - 1e-12


class TestOrdering:
    def test_order_enforced(self):
        bad = [AxisSpec.dirichlet(), AxisSpec.periodic()]
        assert check_axis_order(bad)
        with pytest.raises(ValidationError):
            validate_axes(bad)
        assert check_axis_order([AxisSpec.nonlocal_(1, 2), AxisSpec.periodic(), AxisSpec.dirichlet()]) == []

    def test_mode_box(self):
        box = mode_box([AxisSpec.periodic(), AxisSpec.dirichlet()], 2)
        assert len(box) == 5 * 2
        assert ModeIndex((-2, 1)) in box and ModeIndex((0, 0)) not in box


def _rho_oracle(a: float, b: float, s: float) -> float:
    """Arbitrary-precision rho with theta from a brute-force max over [0, pi]."""
    with mpmath.workdps(40):
        a, b = mpmath.mpf(a), mpmath.mpf(b)
        phi = mpmath.acos(-2 * a * b / (a**2 + b**2)) / mpmath.pi
        xs = [mpmath.pi * k / 2000 for k in range(2001)]
        theta = mpmath.sqrt(2) * max(abs(mpmath.expj(phi * x) - 1) for x in xs)
        sigma = 1 / mpmath.sqrt(2) if s == 0 else mpmath.mpf(1)
        inner = theta / mpmath.sqrt(2) + (phi + 1) ** s - 1
        return float(mpmath.sqrt(theta**2 + 2 * inner**2 * sigma))


class TestRieszOracle:
    @pytest.mark.parametrize(
        "a, b, s, rho", [(1e-7, 1.0, 0.0, 2.6131), (1.0, -1.05, 0.0, 0.0901)]
    )
    def test_examples(self, a, b, s, rho):
        ref = _rho_oracle(a, b, s)
        assert ref == pytest.approx(rho, abs=1e-3)
        assert riesz_criterion([AxisSpec.nonlocal_(a, b, s)]).rho == pytest.approx(ref, rel=1e-10)

    @given(_nonlocal_pairs(), st.sampled_from([0.0, 0.5, 1.0, 2.5]))
    def test_random_axes(self, ab, s):
        rep = riesz_criterion([AxisSpec.nonlocal_(*ab, s)])
        assert rep.rho == pytest.approx(_rho_oracle(*ab, s), rel=1e-10)
        assert rep.satisfied == (rep.rho < 1)

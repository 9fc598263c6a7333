from __future__ import annotations

import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fracdelay.errors import PoleError
from fracdelay.specfun import MLParams, gamma, mittag_leffler, prabhakar2, rgamma

# E_{a,b}(z) summed in 50-digit arithmetic (mpmath nsum of the defining series)
REFERENCE = [
    (0.5, 0.5, -10.0, 0.0027796561095304284),
    (0.7, 1.3, -2.5, 0.26376151727226743),
    (1.5, 1.5, -20.0, 0.0061985012468613419),
    (0.3, 1.0, -3.0, 0.21180263319643578),
    (1.8, 2.0, -7.0, 0.11677375755932029),
    (0.9, 0.9, 0.8, 2.3908749271189427),
]


def _series(a, b, z):
    """Defining series summed with enough digits to survive the cancellation."""
    peak = abs(z) ** (1.0 / a)
    dps = 30 + int(peak / 2.3)
    with mpmath.workdps(dps):
        zz, aa, bb = mpmath.mpf(z), mpmath.mpf(a), mpmath.mpf(b)
        total = mpmath.mpf(0)
        q = 0
        tiny = mpmath.mpf(10) ** (-dps)
        while True:
            term = zz**q * mpmath.rgamma(aa * q + bb)
            total += term
            if q > peak / a + 10 and abs(term) < tiny * max(1, abs(total)):
                return float(total)
            q += 1


class TestGamma:
    @pytest.mark.parametrize(
        "x, expected", [(1.0, 1.0), (0.5, 1.7724538509055160), (5.0, 24.0), (-0.5, -3.5449077018110318)]
    )
    def test_values(self, x, expected):
        assert gamma(x) == pytest.approx(expected, rel=1e-14)

    @pytest.mark.parametrize("x", [0.0, -1.0, -7.0])
    def test_poles(self, x):
        with pytest.raises(PoleError):
            gamma(x)

    def test_overflow_is_infinite(self):
        assert gamma(1e-320) == math.inf
        assert gamma(-1e-320) == -math.inf
        assert gamma(180.0) == math.inf

    def test_rgamma_vanishes_at_poles(self):
        assert rgamma(-3.0) == 0.0
        assert rgamma(0.5) == pytest.approx(1 / math.sqrt(math.pi), rel=1e-15)

    @given(st.floats(-170, 170).filter(lambda x: abs(x - round(x)) > 1e-6 or x > 0))
    def test_matches_mpmath(self, x):
        ref = float(mpmath.gamma(x))
        assert gamma(x) == pytest.approx(ref, rel=1e-13)


class TestMittagLeffler:
    def test_exponential(self):
        assert mittag_leffler(1.0, 1.0, 1.0) == pytest.approx(2.718281828459045, rel=1e-15)

    def test_zero_argument_is_reciprocal_gamma(self):
        # 1/Gamma(1.3) = 1.1142425085473019 (the often-quoted 1.1189863 is a typo)
        assert mittag_leffler(MLParams(0.7, 1.3), 0.0) == pytest.approx(1.1142425085473019, rel=1e-14)

    def test_cosine_identity(self):
        assert mittag_leffler(2.0, 1.0, -4.0) == pytest.approx(math.cos(2.0), rel=1e-12)
        assert math.cos(2.0) == pytest.approx(-0.4161468365, abs=1e-10)

    @pytest.mark.parametrize("a, b, z, ref", REFERENCE)
    def test_frozen_reference(self, a, b, z, ref):
        assert mittag_leffler(a, b, z) == pytest.approx(ref, rel=1e-10)

    @pytest.mark.parametrize("a, b, z, ref", REFERENCE)
    def test_array_path_agrees_with_scalar(self, a, b, z, ref):
        vals = mittag_leffler(a, b, np.array([z, z]))
        np.testing.assert_allclose(vals, ref, rtol=1e-10)

    def test_decay_example(self):
        # |E_{1/2,1/2}(-10)| is far below the 1/(1 + |z|) envelope
        assert abs(mittag_leffler(0.5, 0.5, -10.0)) * 11 < 0.1

    def test_params_validated(self):
        with pytest.raises(ValueError):
            MLParams(0.0, 1.0)
        with pytest.raises(ValueError):
            MLParams(1.0, math.inf)

    def test_shape_preserved(self):
        z = -np.linspace(0, 5, 12).reshape(3, 4)
        assert mittag_leffler(0.8, 1.1, z).shape == (3, 4)

    @given(
        st.floats(0.1, 2.0),
        st.floats(0.1, 4.0),
        st.floats(-10.0, 10.0),
    )
    def test_recurrence(self, a, b, z):
        lhs = mittag_leffler(a, b, z)
        rhs = z * mittag_leffler(a, a + b, z) + rgamma(b)
        assert lhs == pytest.approx(rhs, rel=1e-9, abs=1e-9)

    @given(st.floats(0.5, 1.99), st.floats(0.2, 3.0), st.floats(-15.0, 3.0))
    def test_against_high_precision_series(self, a, b, z):
        ref = _series(a, b, z)
        assert mittag_leffler(a, b, z) == pytest.approx(ref, rel=1e-9, abs=1e-14)

    def test_prabhakar_series(self):
        a, b, z = 0.6, 1.4, -1.7
        with mpmath.workdps(40):
            ref = float(mpmath.nsum(lambda q: (q + 1) * mpmath.mpf(z) ** q / mpmath.gamma(a * q + b), [0, mpmath.inf]))
        assert prabhakar2(a, b, z) == pytest.approx(ref, rel=1e-10)

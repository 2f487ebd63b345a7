import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from qheat.errors import SpectrumError
from qheat.operators import involution_spectrum
from qheat.qlattice import QLattice
from qheat.spectral import (
    CoeffTrajectory, Spectrum, apply_L, plancherel_norm, sobolev_norm, tail_estimate, tail_nonincreasing,
    trajectory_norms, mode_dq,
)

S = Spectrum(np.array([1.0, 2.0, 4.0, 9.0]), 0.5)
coeffs = arrays(np.float64, 4, elements=st.floats(-1e3, 1e3))


class TestSpectrum:
    def test_valid(self):
        assert S.K == len(S) == 4

    def test_order_violation_names_index(self):
        with pytest.raises(SpectrumError) as e:
            Spectrum(np.array([1.0, 0.7, 3.0]), 0.5)
        assert e.value.index == 2

    def test_lower_bound_violation(self):
        with pytest.raises(SpectrumError) as e:
            Spectrum(np.array([0.4, 1.0]), 0.5)
        assert e.value.index == 1

    @pytest.mark.parametrize("lam0", [0.0, -1.0])
    def test_lambda0_positive(self, lam0):
        with pytest.raises(SpectrumError):
            Spectrum(np.array([1.0]), lam0)

    def test_empty_and_nonfinite(self):
        with pytest.raises(SpectrumError):
            Spectrum(np.array([]), 0.5)
        with pytest.raises(SpectrumError):
            Spectrum(np.array([1.0, np.inf]), 0.5)

    def test_immutable(self):
        with pytest.raises(ValueError):
            S.eigenvalues[0] = 3.0


class TestNorms:
    @pytest.mark.parametrize("c,expected", [([0, 0, 0, 0], 0.0), ([0, 1, 0, 0], 1.0), ([3, 4, 0, 0], 5.0)])
    def test_plancherel(self, c, expected):
        assert plancherel_norm(np.array(c, float)) == expected

    @given(coeffs)
    def test_order_zero_is_plancherel(self, c):
        assert sobolev_norm(c, 0, S) == plancherel_norm(c)

    @pytest.mark.parametrize("k", range(4))
    def test_unit_vector(self, k):
        c = np.eye(4)[k]
        assert sobolev_norm(c, 3.0, S) == pytest.approx(S.eigenvalues[k] ** 1.5, rel=1e-15)

    def test_involution_example(self):
        s = involution_spectrum(0.0, 2)
        assert sobolev_norm(np.array([1.0, 1.0]), 2, s) == pytest.approx(math.sqrt(17), rel=1e-15)
        assert math.fsum(lam**2 for lam in s.eigenvalues) == 17.0

    @given(coeffs, st.floats(-2, 4))
    def test_apply_L_shifts_order_by_two(self, c, d):
        assert sobolev_norm(apply_L(c, S), d, S) == pytest.approx(sobolev_norm(c, d + 2, S), rel=1e-12, abs=1e-300)

    @given(coeffs, st.floats(0, 3), st.floats(0, 3))
    def test_monotone_in_order(self, c, d1, d2):
        lo, hi = sorted((d1, d2))
        assert sobolev_norm(c, lo, S) <= sobolev_norm(c, hi, S) * (1 + 1e-14)

    def test_apply_L_unit(self):
        np.testing.assert_array_equal(apply_L(np.eye(4)[2], S), [0, 0, 4.0, 0])
        np.testing.assert_array_equal(apply_L(np.zeros(4), S), np.zeros(4))

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            sobolev_norm(np.ones(3), 0, S)

    def test_complex_coefficients(self):
        assert plancherel_norm(np.array([3j, 4.0])) == 5.0

    def test_tail_diagnostics(self):
        s = Spectrum(np.arange(1.0, 11.0) ** 2, 0.5)
        c = s.eigenvalues ** -3.0
        assert tail_estimate(c, 0, s) == pytest.approx(100.0 * 1e-6)
        assert tail_nonincreasing(c, 0, s)
        assert not tail_nonincreasing(np.ones(10), 0, s)


class TestTrajectory:
    lat = QLattice(1.0, 0.5, 10)

    def test_shape_validation(self):
        with pytest.raises(ValueError):
            CoeffTrajectory(self.lat, np.zeros((5, 2)))
        with pytest.raises(ValueError):
            CoeffTrajectory(self.lat, np.full((12, 2), np.nan))

    def test_endpoints(self):
        v = np.arange(24.0).reshape(12, 2)
        tr = CoeffTrajectory(self.lat, v)
        np.testing.assert_array_equal(tr.final, v[0])
        np.testing.assert_array_equal(tr.initial, v[-1])
        np.testing.assert_array_equal(tr.at(0.25), v[2])

    def test_constant_trajectory(self):
        tr = CoeffTrajectory(self.lat, np.ones((12, 4)))
        n = trajectory_norms(tr, 1.0, S)
        assert n.sup_dq_norm == 0.0
        assert n.sup_norm == pytest.approx(sobolev_norm(np.ones(4), 1.0, S))

    def test_zero_trajectory(self):
        n = trajectory_norms(CoeffTrajectory(self.lat, np.zeros((12, 4))), 0, S)
        assert n.sup_norm == 0.0 and n.sup_dq_norm == 0.0

    def test_dq_matches_pointwise(self):
        t = self.lat.points
        tr = CoeffTrajectory(self.lat, np.column_stack([t**2, t**3]))
        dqv = tr.dq_values()
        for m in (0, 4, 9):
            assert dqv[m, 0] == pytest.approx(mode_dq(tr, 0, m), rel=1e-15)
            assert dqv[m, 1] == pytest.approx(1.75 * t[m] ** 2, rel=1e-12)

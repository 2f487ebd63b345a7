import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from qheat.errors import LatticeError, QDomainError
from qheat.qlattice import (
    E_q, E_q_series, E_q_tail_bound, LatticeFn, QLattice, QParams, default_n_terms, dq, dq_poly, e_q,
    jackson_integral, jackson_tail_bound, log_E_q, q_factorial, q_number, window_sum,
)
from qheat.verify import exp_product_errors, ftc_errors, parts_errors, product_rule_errors

from oracles import E_BIG_MINUS_1_2, E_Q_ONE, E_SMALL_1_2

Q05 = QParams(0.5)


@pytest.mark.parametrize("q", [0.0, 1.0, -0.2, 1.2])
def test_qparams_rejects_q_outside_open_interval(q):
    with pytest.raises(QDomainError, match=r"\(0, 1\)"):
        QParams(q)


def test_qparams_rejects_bad_truncation():
    with pytest.raises(QDomainError):
        QParams(0.5, n_terms=0)
    with pytest.raises(QDomainError):
        QParams(0.5, tol=0.0)


@pytest.mark.parametrize("q", [0.3, 0.5, 0.9])
def test_default_n_terms_makes_tail_negligible(q):
    n = QParams(q).n_terms
    assert n >= 64 and n == default_n_terms(q)
    assert q ** (n + 1) < 1e-20
    assert jackson_tail_bound(1.0, 1.0, QParams(q)) < QParams(q).tol


@pytest.mark.parametrize("alpha,expected", [(2, 1.5), (0, 0.0), (3, 1.75)])
def test_q_number(alpha, expected):
    assert q_number(alpha, 0.5) == pytest.approx(expected, abs=1e-15)


@pytest.mark.parametrize("n,expected", [(0, 1.0), (2, 1.5), (3, 2.625)])
def test_q_factorial(n, expected):
    assert q_factorial(n, 0.5) == pytest.approx(expected, abs=1e-15)


def test_q_factorial_rejects_non_integer():
    with pytest.raises(QDomainError):
        q_factorial(1.5, 0.5)


class TestLattice:
    def test_points_geometric_and_closed(self):
        lat = QLattice(2.0, 0.5, 10)
        pts = lat.points
        assert len(lat) == 12 and pts[-1] == 0.0
        assert np.all(np.diff(pts) < 0)
        np.testing.assert_allclose(pts[1:-1], 0.5 * pts[:-2], rtol=1e-15)
        for m in range(lat.depth):
            assert lat.is_interior(m)
            assert lat.index_of(lat.q * pts[m]) == m + 1

    def test_off_lattice_rejected(self):
        lat = QLattice(1.0, 0.5, 8)
        with pytest.raises(LatticeError):
            lat.index_of(0.3)
        with pytest.raises(LatticeError):
            lat.index_of(0.5**9)

    def test_lattice_fn_validation(self):
        lat = QLattice(1.0, 0.5, 4)
        with pytest.raises(LatticeError):
            LatticeFn(lat, np.zeros(3))
        with pytest.raises(LatticeError):
            LatticeFn(lat, np.array([1, 2, np.nan, 0, 0, 0.0]))
        f = LatticeFn.sample(lat, lambda t: t**2)
        assert f.values[lat.zero_index] == 0.0


class TestDq:
    lat = QLattice(1.0, 0.5, 20)

    @pytest.mark.parametrize("power,expected", [(2, 1.5), (3, 1.75)])
    def test_monomials_at_one(self, power, expected):
        assert dq(LatticeFn.sample(self.lat, lambda t: t**power), 0) == pytest.approx(expected, abs=1e-15)

    def test_constant(self):
        f = LatticeFn.sample(self.lat, lambda t: np.full_like(t, 3.0))
        assert all(dq(f, m) == 0.0 for m in range(self.lat.depth))

    def test_zero_and_deepest_rejected(self):
        f = LatticeFn.sample(self.lat, lambda t: t)
        with pytest.raises(LatticeError):
            dq(f, self.lat.zero_index)
        with pytest.raises(LatticeError):
            dq(f, self.lat.depth)

    def test_dq_poly(self):
        np.testing.assert_allclose(dq_poly([5.0, 0.0, 1.0], 0.5), [0.0, 1.5])
        np.testing.assert_allclose(dq_poly([7.0], 0.5), [0.0])


class TestJackson:
    def test_constant(self):
        assert jackson_integral(lambda t: np.ones_like(t), 1.0, Q05) == pytest.approx(1.0, abs=1e-15)

    def test_identity_function(self):
        assert jackson_integral(lambda t: t, 1.0, Q05) == pytest.approx(2 / 3, abs=1e-15)

    def test_of_derivative(self):
        # D_q t^2 = [2]_q t
        assert jackson_integral(lambda t: 1.5 * t, 1.0, Q05) == pytest.approx(1.0, abs=1e-15)

    def test_scalar_callable(self):
        assert jackson_integral(lambda t: math.cos(t), 1.0, Q05) == pytest.approx(
            jackson_integral(np.cos, 1.0, Q05), abs=1e-15
        )

    def test_zero_and_negative(self):
        assert jackson_integral(np.exp, 0.0, Q05) == 0.0
        with pytest.raises(QDomainError):
            jackson_integral(np.exp, -1.0, Q05)

    @given(st.lists(st.floats(-10, 10), min_size=3, max_size=40), st.integers(1, 3))
    def test_window_sum_matches_loop(self, vals, width):
        v = np.array(vals)
        if width > v.size:
            return
        out = window_sum(v, width)
        ref = [math.fsum(v[m : m + width]) for m in range(v.size - width + 1)]
        np.testing.assert_allclose(out, ref, atol=1e-12 * max(1.0, np.abs(v).sum()))


class TestExponentials:
    def test_at_zero(self):
        assert e_q(0.0, Q05) == 1.0
        assert E_q(0.0, Q05) == 1.0

    @pytest.mark.parametrize("q", [0.3, 0.5, 0.9])
    def test_against_frozen_values(self, q):
        p = QParams(q)
        assert E_q(1.0, p) == pytest.approx(E_Q_ONE[q], rel=1e-14)
        assert e_q(1.2, p) == pytest.approx(E_SMALL_1_2[q], rel=1e-13)
        assert E_q(-1.2, p) == pytest.approx(E_BIG_MINUS_1_2[q], rel=1e-13)

    def test_e_q_reference_x1(self):
        # 64-term partial sum with remainder bound
        q, x = 0.5, 1.0
        terms = [x**k / q_factorial(k, q) for k in range(65)]
        assert e_q(x, Q05) == pytest.approx(math.fsum(terms), rel=1e-15)
        assert 1.0 / E_q(-x, Q05) == pytest.approx(math.fsum(terms), rel=1e-14)

    def test_product_vs_series(self):
        assert E_q(1.0, Q05) == pytest.approx(E_q_series(1.0, Q05), rel=1e-12)
        assert E_q(2.0, Q05) == pytest.approx(E_q_series(2.0, Q05), rel=1e-12)

    def test_tail_bound(self):
        p = QParams(0.5, n_terms=10)
        full = E_q(2.0, Q05)
        assert abs(E_q(2.0, p) / full - 1) <= E_q_tail_bound(2.0, p)

    def test_inverse_pair_at_point(self):
        assert e_q(0.3, Q05) * E_q(-0.3, Q05) == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.parametrize("q", [0.3, 0.5, 0.9])
    def test_inverse_pair_across_disc(self, q):
        p = QParams(q)
        a = 0.9 / (1 - q)
        for x in np.linspace(-a, a, 20):
            assert abs(e_q(x, p) * E_q(-x, p) - 1.0) <= 1e-10

    def test_e_q_domain(self):
        with pytest.raises(QDomainError):
            e_q(2.0, Q05)
        with pytest.raises(QDomainError):
            E_q(-2.0, Q05)

    @given(st.floats(0, 50), st.floats(0, 50))
    def test_E_q_monotone(self, a, b):
        lo, hi = sorted((a, b))
        assert E_q(lo, Q05) <= E_q(hi, Q05)

    def test_log_E_q_survives_overflow(self):
        assert math.isfinite(log_E_q(1e300, Q05))

    def test_classical_limit(self):
        errs = [abs(E_q(1.0, QParams(q)) - math.e) for q in (0.9, 0.99, 0.999)]
        assert errs[0] > errs[1] > errs[2]


class TestIdentities:
    """Random polynomial suites (degree <= 5)."""

    def test_product_rule(self, qp, rng):
        assert product_rule_errors(qp, rng, 50).max() <= 1e-12

    def test_fundamental_theorem(self, qp, rng):
        assert ftc_errors(qp, rng, 50).max() <= qp.tol

    def test_integration_by_parts(self, qp, rng):
        assert parts_errors(qp, rng, 50).max() <= qp.tol

    def test_exp_inverse(self, qp, rng):
        assert exp_product_errors(qp, rng, 50).max() <= 1e-10

    def test_truncation_is_detected(self, rng):
        p = QParams(0.5, n_terms=4)
        assert ftc_errors(p, rng, 20).max() > 1e-3
        assert exp_product_errors(p, rng, 20).max() > 1e-3

"""Polynomial sublevel/averaging inequalities and structural identities.

The closed-form oracles here were derived by hand (antiderivatives of
power-law integrands, explicit sublevel sets of low-degree polynomials) and
are asserted against the quadrature-based implementations.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from alloylab.lattice import (
    BoxSpec,
    DisorderSpec,
    SingleSitePotential,
    required_region,
    sample_disorder,
)
from alloylab import polyavg
from alloylab.polyavg import (
    MonicPolynomial,
    cartan_disc,
    cartan_polydisc,
    cartan_rhs,
    determinant_average,
    fractional_bound_constant,
    green_determinant_identity_1d,
    integrate_with_singularities,
    inverse_norm_average,
    polya_sublevel_measure,
    polynomial_fractional_integral,
    sublevel_measure,
    weak_l1_tail,
)

UNIFORM01 = DisorderSpec.uniform(0.0, 1.0)


class TestMonicPolynomial:
    def test_evaluation_horner(self):
        P = MonicPolynomial([2.0, -3.0])  # x^2 - 3x + 2 = (x-1)(x-2)
        assert P(1.0) == pytest.approx(0.0)
        assert P(2.0) == pytest.approx(0.0)
        assert P(0.0) == pytest.approx(2.0)

    def test_from_roots(self):
        P = MonicPolynomial.from_roots([1.0, -2.0, 0.5])
        for r in (1.0, -2.0, 0.5):
            assert abs(P(r)) < 1e-12

    @pytest.mark.parametrize("n", range(1, 11))
    def test_companion_determinant_identity(self, n):
        rng = np.random.default_rng(n)
        P = MonicPolynomial(rng.uniform(-2, 2, n))
        A = P.companion()
        # det(xI + A) = P(x) at 2n+1 scaled Chebyshev nodes
        nodes = 3.0 * np.cos(np.pi * np.arange(2 * n + 1) / (2 * n))
        for x in nodes:
            det = np.linalg.det(x * np.eye(n) + A)
            scale = max(abs(P(x)), 1.0)
            assert abs(det - P(x)) / scale < 1e-8

    def test_roots_match_numpy(self):
        P = MonicPolynomial.from_roots([0.3, -1.7, 2.2, 0.3])
        got = sorted(P.roots().real)
        assert got == pytest.approx([-1.7, 0.3, 0.3, 2.2], abs=1e-6)


class TestSingularQuadrature:
    def test_plain_integral(self):
        val, err = integrate_with_singularities(np.cos, 0.0, 1.0, [])
        assert val == pytest.approx(math.sin(1.0), abs=1e-12)

    def test_interior_inverse_sqrt(self):
        # int_0^1 |x - 1/2|^{-1/2} dx = 2*sqrt(1/2)*2
        f = lambda x: abs(x - 0.5) ** -0.5
        val, err = integrate_with_singularities(f, 0.0, 1.0, [(0.5, 0.5)])
        assert val == pytest.approx(4 * math.sqrt(0.5), rel=1e-7)
        assert abs(val - 4 * math.sqrt(0.5)) <= 10 * err

    def test_endpoint_singularity(self):
        f = lambda x: x ** -0.75
        val, err = integrate_with_singularities(f, 0.0, 1.0, [(0.0, 0.75)])
        assert val == pytest.approx(4.0, rel=1e-9)


class TestSublevelMeasure:
    def test_linear(self):
        assert sublevel_measure(MonicPolynomial([0.0]), 0.3) == pytest.approx(0.6)

    def test_quadratic(self):
        # {x^2 <= 1} = [-1, 1]
        P = MonicPolynomial([0.0, 0.0])
        assert sublevel_measure(P, 1.0) == pytest.approx(2.0)

    def test_two_wells(self):
        # (x-3)(x+3): sublevel set at alpha near 0 splits into two intervals
        P = MonicPolynomial.from_roots([3.0, -3.0])
        m = sublevel_measure(P, 0.1)
        # near each root, |P'| = 6, so each interval has length ~ 2*0.1/6
        assert m == pytest.approx(2 * 2 * 0.1 / 6, rel=1e-3)

    def test_against_grid_oracle(self):
        rng = np.random.default_rng(12)
        P = MonicPolynomial.from_roots(rng.uniform(-2, 2, 5))
        alpha = 0.05
        xs = np.linspace(-3, 3, 2_000_001)
        grid = float((np.abs([P(x) for x in xs[:: 1]]) <= alpha).mean() * 6.0) \
            if False else None
        vals = np.abs(np.polynomial.polynomial.polyval(xs, P.full_coeffs))
        grid = float((vals <= alpha).mean() * 6.0)
        assert sublevel_measure(P, alpha) == pytest.approx(grid, abs=2e-5)


class TestPolya:
    def test_linear_saturates(self):
        rep = polya_sublevel_measure(MonicPolynomial([0.0]), 0.3)
        assert rep.lhs == pytest.approx(0.6)
        assert rep.rhs == pytest.approx(0.6)
        assert rep.passed

    def test_quadratic(self):
        rep = polya_sublevel_measure(MonicPolynomial([0.0, 0.0]), 1.0)
        assert rep.lhs == pytest.approx(2.0)
        assert rep.rhs == pytest.approx(4 * math.sqrt(0.5))
        assert rep.passed

    def test_monotone_in_alpha(self):
        P = MonicPolynomial.from_roots([0.0, 1.0, -1.5])
        alphas = [1e-3, 1e-2, 1e-1, 1.0]
        reps = [polya_sublevel_measure(P, a) for a in alphas]
        lhs = [r.lhs for r in reps]
        rhs = [r.rhs for r in reps]
        assert lhs == sorted(lhs)
        assert rhs == sorted(rhs)
        assert all(r.passed for r in reps)

    @given(st.integers(1, 6), st.floats(1e-4, 1.0), st.integers(0, 10 ** 6))
    @settings(max_examples=80, deadline=None)
    def test_random_instances(self, deg, alpha, seed):
        rng = np.random.default_rng(seed)
        P = MonicPolynomial.from_roots(rng.uniform(-2, 2, deg))
        rep = polya_sublevel_measure(P, alpha)
        assert rep.passed


class TestFractionalIntegral:
    def test_pure_power(self):
        for n in (1, 3, 5):
            for s in (0.2, 0.5, 0.8):
                P = MonicPolynomial([0.0] * n)
                rep = polynomial_fractional_integral(P, UNIFORM01, s)
                assert rep.lhs == pytest.approx(1.0 / (1.0 - s), rel=1e-6)
                assert rep.rhs == pytest.approx(
                    fractional_bound_constant(s) / 1.0, rel=1e-12)
                assert rep.passed

    def test_shifted_root_closed_form(self):
        rep = polynomial_fractional_integral(
            MonicPolynomial.from_roots([5.0]), UNIFORM01, 0.5)
        assert rep.lhs == pytest.approx(2 * (math.sqrt(5) - 2), rel=1e-9)
        assert rep.passed

    def test_random_sweep(self):
        rho = DisorderSpec.uniform(-1.0, 1.0)
        rng = np.random.default_rng(77)
        for _ in range(25):
            deg = int(rng.integers(1, 9))
            P = MonicPolynomial.from_roots(rng.uniform(-2, 2, deg))
            s = float(rng.uniform(0.1, 0.9))
            rep = polynomial_fractional_integral(P, rho, s)
            assert rep.passed, (deg, s)


class TestDeterminantAverage:
    def test_scalar_case(self):
        rep = determinant_average(np.array([[0.0]]), np.array([[1.0]]),
                                  UNIFORM01, 0.5)
        assert rep.lhs == pytest.approx(2.0, rel=1e-8)
        assert rep.rhs == pytest.approx(4.0, rel=1e-12)
        assert rep.passed

    @pytest.mark.parametrize("n", [2, 3, 4])
    def test_identity_pencil(self, n):
        # det(I + rI)^{-s/n} = (1+r)^{-s} on [0,1]
        s = 0.4
        rep = determinant_average(np.eye(n), np.eye(n), UNIFORM01, s)
        assert rep.lhs == pytest.approx(
            (2 ** (1 - s) - 1) / (1 - s), rel=1e-8)
        assert rep.passed

    def test_sign_indefinite_v(self):
        rng = np.random.default_rng(8)
        A = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        V = np.diag([1.0, -1.0, 2.0, -2.0])
        rep = determinant_average(A, V, UNIFORM01, 0.5)
        assert rep.passed

    def test_unitary_conjugation_invariance(self):
        rng = np.random.default_rng(21)
        A = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
        V = np.diag([1.0, 2.0, -1.0]).astype(complex)
        q, _ = np.linalg.qr(rng.normal(size=(3, 3))
                            + 1j * rng.normal(size=(3, 3)))
        base = determinant_average(A, V, UNIFORM01, 0.3)
        conj = determinant_average(q @ A @ q.conj().T, q @ V @ q.conj().T,
                                   UNIFORM01, 0.3)
        assert conj.lhs == pytest.approx(base.lhs, rel=1e-9)


class TestInverseNormAverage:
    def test_scalar_case(self):
        rep = inverse_norm_average(np.array([[0.0]]), np.array([[1.0]]),
                                   0.5, 1.0)
        assert rep.lhs == pytest.approx(4.0, rel=1e-6)
        assert rep.rhs == pytest.approx(
            2.0 / (math.sqrt(0.5) * 0.5), rel=1e-12)
        assert rep.passed

    def test_far_from_singular(self):
        A = 10.0 * np.eye(3)
        rep = inverse_norm_average(A, np.eye(3), 0.5, 0.1)
        assert rep.lhs == pytest.approx((1 / 9.9) ** (0.5 / 3) * 0.2, rel=1e-2)
        assert rep.passed and rep.margin > 0

    def test_random_sweep(self):
        rng = np.random.default_rng(31)
        for _ in range(20):
            n = int(rng.integers(1, 4))
            A = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
            V = np.diag(rng.choice([-1.0, 1.0], n) * rng.uniform(0.5, 2, n))
            rep = inverse_norm_average(A, V, float(rng.uniform(0.1, 0.9)),
                                       float(rng.uniform(0.5, 2.0)))
            assert rep.passed


class TestWeakL1Tail:
    def test_scalar_closed_form(self):
        prof = weak_l1_tail(np.array([[1j]]), np.array([[1.0]]), 1.0, 1.0,
                            np.linspace(0.2, 0.95, 8))
        for t, meas in zip(prof.thresholds, prof.measures):
            exact = 2 * math.sqrt(1 / t ** 2 - 1)
            assert meas == pytest.approx(exact, abs=2e-3)
        # normalized profile t * measure = 2 sqrt(1 - t^2) <= 2
        assert prof.empirical_constant <= 2.0 + 1e-2

    def test_tail_vanishes_at_large_t(self):
        prof = weak_l1_tail(np.array([[1j]]), np.array([[1.0]]), 1.0, 1.0,
                            [50.0, 100.0])
        assert prof.measures[-1] <= prof.measures[0]
        assert prof.measures[-1] < 0.05

    def test_matrix_profile_finite(self):
        rng = np.random.default_rng(14)
        H0 = rng.normal(size=(4, 4))
        A = (H0 + H0.T) / 2 + 1j * np.eye(4)
        V = np.diag(rng.uniform(0.5, 2.0, 4))
        M = rng.normal(size=(4, 4))
        prof = weak_l1_tail(A, V, M, M, np.geomspace(0.1, 10, 12))
        assert np.isfinite(prof.empirical_constant)
        assert (np.diff(prof.measures) <= 1e-12).all()

    def test_rejects_non_dissipative(self):
        with pytest.raises(ValueError):
            weak_l1_tail(np.array([[-1j]]), np.array([[1.0]]), 1.0, 1.0, [1.0])


class TestCartan:
    def test_constant_function_low_level(self):
        eps = 0.01
        s = 2.0  # e^{-2} > 0.01, so the whole interval is in the sublevel set
        rep = cartan_disc(np.array([eps]), eps, s)
        assert rep.lhs == pytest.approx(2.0)
        assert rep.passed

    def test_constant_function_below_level(self):
        eps = 0.5
        s = 3.0  # e^{-3} < 0.5: empty sublevel set
        rep = cartan_disc(np.array([eps]), eps, s)
        assert rep.lhs == 0.0
        assert rep.passed

    def test_lhs_bounded_by_domain(self):
        rng = np.random.default_rng(4)
        for _ in range(20):
            deg = int(rng.integers(1, 5))
            roots = rng.uniform(-1, 1, deg)
            coeffs = np.polynomial.polynomial.polyfromroots(roots) \
                / (4 * math.e) ** deg
            eps = max(abs(coeffs[0]), 1e-12)
            rep = cartan_disc(coeffs, eps, float(rng.uniform(0.1, 4.0)))
            assert rep.rhs >= 0
            if rep.hypotheses_met:
                assert rep.lhs <= 2.0 + 1e-12
                assert rep.passed

    def test_hypothesis_violation_reported(self):
        # constant 2 violates the sup bound
        rep = cartan_disc(np.array([2.0]), 1.0, 0.5)
        assert not rep.hypotheses_met

    def test_polydisc_consistency_with_disc(self):
        coeffs = np.polynomial.polynomial.polyfromroots([0.4]) / (4 * math.e)
        eps = abs(coeffs[0])
        s = 1.0
        disc = cartan_disc(coeffs, eps, s)

        def f(x):
            x = np.asarray(x)
            return (x[..., 0] - 0.4) / (4 * math.e)

        poly = cartan_polydisc(f, 1, eps, s, np.random.default_rng(2),
                               n_mc=200_000)
        # disc lhs is a measure on [-1,1]; poly-disc lhs is normalized by 2^n
        assert poly.lhs * 2.0 == pytest.approx(disc.lhs, abs=0.01)
        assert poly.passed and disc.passed

    def test_polydisc_products(self):
        rng = np.random.default_rng(9)
        for n in (2, 3):
            a = rng.uniform(-1, 1, n)

            def f(x, a=a, n=n):
                x = np.asarray(x)
                return np.prod((x - a) / (4 * math.e), axis=-1)

            eps = abs(f(np.zeros(n)))
            rep = cartan_polydisc(f, n, eps, 1.5, rng, n_mc=50_000)
            assert rep.hypotheses_met
            assert rep.passed

    def test_rhs_formula(self):
        assert cartan_rhs(0.1, 1.0, 1) == pytest.approx(
            30 * math.e ** 3 * math.exp(-1.0 / math.log(10.0)))
        assert cartan_rhs(0.1, 1.0, 3) == pytest.approx(
            3 * cartan_rhs(0.1, 1.0, 1))


class TestGreenDeterminantIdentity:
    def _setup(self, u_pairs, lam, seed, L=5):
        box = BoxSpec(1, L)
        u = SingleSitePotential.from_pairs(1, u_pairs)
        mu = DisorderSpec.uniform(0.0, 1.0)
        region = required_region(box.sites(), u)
        sample = sample_disorder(mu, region, np.random.default_rng(seed))
        return box, u, sample

    def test_rank_one_slope(self):
        box, u, sample = self._setup([((0,), 1.0)], 3.0, 1)
        rep = green_determinant_identity_1d(box, u, sample, 3.0, 1j, 0)
        assert rep.ok
        assert rep.expected_leading == pytest.approx(3.0)

    def test_two_site_profile(self):
        box, u, sample = self._setup([((0,), 1.0), ((1,), -0.5)], 1.0, 2, L=3)
        rep = green_determinant_identity_1d(box, u, sample, 1.0, 1j, -1)
        assert rep.residual_rel < 1e-8
        assert rep.leading_abs == pytest.approx(0.5, rel=1e-8)

    def test_lambda_homogeneity(self):
        pairs = [((0,), 1.0), ((1,), -0.5), ((2,), 1.0)]
        box, u, sample = self._setup(pairs, 1.0, 3)
        r1 = green_determinant_identity_1d(box, u, sample, 1.0, 0.7j, -2)
        r2 = green_determinant_identity_1d(box, u, sample, 2.0, 0.7j, -2)
        assert r2.expected_leading == pytest.approx(
            8.0 * r1.expected_leading)
        assert r1.ok and r2.ok

    def test_gapped_support_rejected(self):
        box, u, sample = self._setup([((0,), 1.0), ((2,), 1.0)], 1.0, 4)
        with pytest.raises(ValueError):
            green_determinant_identity_1d(box, u, sample, 1.0, 1j, 0)

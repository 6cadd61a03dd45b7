"""Disorder-averaged estimators: Wegner counts, moment decay, regularity,
suitability, transport moments, envelope curves."""

import math

import numpy as np
import pytest

from alloylab.diagnostics import (
    ModelSpec,
    dynamical_moment,
    exceptional_event_rate,
    finite_volume_sum,
    frac_moment_decay_fit,
    frac_moment_estimate,
    is_gamma_suitable,
    is_regular,
    regular_pair_probability,
    spectrum_envelope,
    spectrum_union_estimate,
    stone_inequality_check,
    suitability_probability,
    wegner_apriori_bound,
    wegner_count,
    wegner_scaling_fit,
    xi_s,
)
from alloylab.ensemble import EnsembleConfig
from alloylab.lattice import DisorderSample, DisorderSpec, SingleSitePotential
from alloylab.spectral import eigen_decomposition

UNIFORM01 = DisorderSpec.uniform(0.0, 1.0)


def anderson(lam=1.0, d=1):
    return ModelSpec(d, SingleSitePotential.dirac(d), UNIFORM01, lam)


def indefinite(lam=30.0):
    u = SingleSitePotential.from_pairs(
        1, [((0,), 1.0), ((1,), -0.5), ((2,), 1.0)])
    return ModelSpec(1, u, UNIFORM01, lam)


class TestXiS:
    def test_large_lambda_branch(self):
        # for lambda > 1 the shallower exponent dominates
        assert xi_s(10.0, 0.5, 3) == pytest.approx(10.0 ** (-0.5 / 6))

    def test_small_lambda_branch(self):
        assert xi_s(0.5, 0.5, 3) == pytest.approx(0.5 ** (-1.0))

    def test_continuity_at_one(self):
        assert xi_s(1.0, 0.3, 2) == pytest.approx(1.0)


class TestFracMoment:
    def test_diagonal_moment_positive(self):
        m = anderson()
        res = frac_moment_estimate(m, m.box(6), 1j, 0.5, (0,), (0,),
                                   EnsembleConfig(200, 1))
        assert res.stat.mean > 0
        assert res.stat.stderr < res.stat.mean

    def test_one_site_closed_form(self):
        # single-site box: G(i; 0, 0) = 1/(lam*omega - i), so
        # E|G|^s = int_0^1 (1 + r^2)^{-s/2} dr at lam = 1
        m = anderson(lam=1.0)
        s = 0.4
        res = frac_moment_estimate(m, m.box(0), 1j, s, (0,), (0,),
                                   EnsembleConfig(20000, 2))
        from scipy.integrate import quad
        exact, _ = quad(lambda r: (1 + r * r) ** (-s / 2), 0, 1)
        assert abs(res.stat.mean - exact) < 4 * res.stat.stderr

    def test_decay_fit_strong_disorder(self):
        fit = frac_moment_decay_fit(indefinite(), 1j, 0.2, 10,
                                    [0, 2, 4, 6, 8], EnsembleConfig(400, 3))
        assert fit.resolved
        assert fit.rate > 0
        assert fit.r_squared > 0.9

    def test_reduced_exponent_flag(self):
        fit = frac_moment_decay_fit(indefinite(), 1j, 0.2, 6, [0, 2, 4],
                                    EnsembleConfig(100, 4),
                                    reduced_exponent=True)
        # |Theta| = 3 so the reduced power is s/(2*3)
        assert fit.exponent_used == pytest.approx(0.2 / 6)


class TestWegner:
    def test_count_scales_with_eps(self):
        m = anderson()
        cfg = EnsembleConfig(2000, 5)
        small = wegner_count(m, m.box(10), 0.5, 0.02, cfg)
        large = wegner_count(m, m.box(10), 0.5, 0.08, cfg)
        assert large.count_mean > small.count_mean

    def test_apriori_bound_formula(self):
        # (4/|ubar|) * rank * TV(rho) * eps * (2L + n)^d
        # the Dirac profile sits in the degenerate cube [0, 0], so the
        # volume factor is (2L + 0)^d
        m = anderson()
        assert wegner_apriori_bound(m, 0.05, 20) == pytest.approx(
            4.0 * 1 * 2.0 * 0.05 * 40)

    def test_empirical_count_below_apriori_bound(self):
        m = anderson()
        wc = wegner_count(m, m.box(10), 0.5, 0.05, EnsembleConfig(2000, 6))
        bound = wegner_apriori_bound(m, 0.05, 10)
        assert wc.count_mean <= bound + 3 * wc.count_stderr

    def test_scaling_fit_shape(self):
        m = anderson()
        fit = wegner_scaling_fit(m, 0.5, [0.04, 0.08, 0.16], [10, 20, 40],
                                 EnsembleConfig(1500, 7))
        assert not fit.degenerate
        assert 0.7 < fit.eps_exponent < 1.3
        assert 0.7 < fit.volume_exponent < 1.3


class TestStone:
    def test_one_by_one_closed_form(self):
        # 1x1 operator H = v: lhs = indicator(a <= v <= b); rhs =
        # (4/pi)(arctan((b-v)/eps) - arctan((a-v)/eps))
        m = anderson()
        box = m.box(0)
        sample = DisorderSample(((0,),), {(0,): 0.4})
        H = m.hamiltonian(box, sample)
        a, b, eps = 0.0, 1.0, 0.3
        rep = stone_inequality_check(H, (0,), a, b, eps)
        v = 0.4
        expected = (4 / math.pi) * (math.atan((b - v) / eps)
                                    - math.atan((a - v) / eps))
        assert rep.lhs == 1.0
        assert rep.rhs == pytest.approx(expected, rel=1e-8)
        assert rep.passed

    def test_random_instances(self):
        m = anderson()
        rng = np.random.default_rng(8)
        for i in range(10):
            H = m.random_hamiltonian(m.box(int(rng.integers(1, 6))), rng)
            a = float(rng.uniform(-2, 2))
            b = a + float(rng.uniform(0.1, 1.0))
            eps = float(rng.uniform(0.05, 1.0)) * (b - a)
            rep = stone_inequality_check(H, (0,), a, b, eps)
            assert rep.passed


class TestRegularity:
    def test_eigenvalue_energy_is_irregular(self):
        m = anderson()
        H = m.random_hamiltonian(m.box(5), np.random.default_rng(9))
        E = float(eigen_decomposition(H).eigenvalues[3])
        v = is_regular(H, E, 0.5)
        assert not v.regular

    def test_strong_disorder_mostly_regular(self):
        m = ModelSpec(1, indefinite().u, UNIFORM01, 30.0)
        rng = np.random.default_rng(10)
        hits = 0
        for _ in range(60):
            H = m.random_hamiltonian(m.box(10), rng)
            if is_regular(H, 0.0, 0.5).regular:
                hits += 1
        assert hits > 30

    def test_pair_separation_enforced(self):
        m = indefinite()
        with pytest.raises(ValueError):
            regular_pair_probability(m, (-0.5, 0.5), 0.3, 8, (0,), (10,),
                                     EnsembleConfig(10, 11))

    def test_gershgorin_disjoint_interval_certain(self):
        # interval far outside the possible spectrum: both boxes are always
        # regular at m = 0 (no eigenvalues, tiny resolvent)
        m = anderson()
        res = regular_pair_probability(m, (90.0, 91.0), 0.0, 3, (0,), (8,),
                                       EnsembleConfig(50, 12))
        assert res.probability == 1.0
        assert res.uncertified == 0

    def test_strong_disorder_pair_probability(self):
        m = indefinite()
        res = regular_pair_probability(m, (-0.5, 0.5), 0.3, 8, (0,), (19,),
                                       EnsembleConfig(300, 13))
        assert res.probability > 0.95


class TestSuitability:
    def test_threshold_arithmetic(self):
        ests = suitability_probability(anderson(), -50.0, 0.0, [2],
                                       EnsembleConfig(20, 14))
        assert ests[0].threshold == pytest.approx(1.0 / 16)

    def test_collision_fails_condition(self):
        m = anderson()
        H = m.random_hamiltonian(m.box(4), np.random.default_rng(15))
        E = float(eigen_decomposition(H).eigenvalues[0])
        v = is_gamma_suitable(H, E, 0.1)
        assert not v.suitable

    def test_far_energy_is_suitable(self):
        m = anderson()
        H = m.random_hamiltonian(m.box(4), np.random.default_rng(16))
        v = is_gamma_suitable(H, -50.0, 0.0)
        assert v.suitable

    def test_bad_event_rare_below_edge(self):
        m = anderson(lam=30.0)
        ests = suitability_probability(m, -5.0, 0.2, [4], EnsembleConfig(400, 17))
        assert ests[0].p_bad == 0.0


class TestExceptionalEvents:
    def test_rate_shrinks_with_levels(self):
        m = indefinite()
        rep = exceptional_event_rate(m, 0.0, 2.0, 4, 3,
                                     EnsembleConfig(40, 18), resamples=16)
        per = rep.per_level
        assert all(0.0 <= p <= 1.0 for p in per)
        assert rep.intersection <= min(per) + 1e-12


class TestDynamics:
    def test_initial_moment(self):
        m = anderson()
        H = m.random_hamiltonian(m.box(8), np.random.default_rng(19))
        M = dynamical_moment(H, (0,), (-100.0, 100.0), 2.0, [0.0])
        assert M[0] == pytest.approx(1.0)

    def test_free_ballistic_growth(self):
        m = anderson()
        box = m.box(40)
        zero = DisorderSample(tuple(box.sites()),
                              dict.fromkeys(box.sites(), 0.0))
        H = m.hamiltonian(box, zero)
        M = dynamical_moment(H, (0,), (-100.0, 100.0), 2.0, [0.0, 10.0])
        assert M[1] / M[0] > 50

    def test_localized_moments_flat(self):
        m = indefinite()
        H = m.random_hamiltonian(m.box(30), np.random.default_rng(20))
        M = dynamical_moment(H, (0,), (-1e6, 1e6), 2.0, [1.0, 10.0, 100.0])
        assert max(M) / M[0] < 3.0


class TestEnvelope:
    def test_flat_for_zero_configuration(self):
        m = anderson()
        box = m.box(5)
        zero = DisorderSample(tuple(box.sites()),
                              dict.fromkeys(box.sites(), 0.0))
        env = spectrum_envelope(m, box, zero, np.linspace(0, 1, 5))
        assert np.ptp(env.minima) < 1e-12
        assert np.ptp(env.maxima) < 1e-12

    def test_free_extremes_at_t_zero(self):
        m = anderson()
        box = m.box(20)
        sample = m.sample_for(box.sites(), np.random.default_rng(21))
        env = spectrum_envelope(m, box, sample, np.linspace(0, 1, 9))
        assert -2.0 <= env.minima[0] <= -1.9
        assert 1.9 <= env.maxima[0] <= 2.0

    def test_lipschitz_certificate(self):
        m = anderson()
        box = m.box(10)
        sample = m.sample_for(box.sites(), np.random.default_rng(22))
        env = spectrum_envelope(m, box, sample, np.linspace(0, 1, 21))
        assert env.lipschitz_ok

    def test_union_is_interval_containing_free_band(self):
        m = anderson()
        box = m.box(10)
        for seed in range(10):
            sample = m.sample_for(box.sites(), np.random.default_rng(seed))
            env = spectrum_envelope(m, box, sample, np.linspace(0, 1, 11))
            lo, hi = env.hull
            assert lo <= env.minima[0] and hi >= env.maxima[0]

    def test_grid_must_include_endpoints(self):
        m = anderson()
        box = m.box(4)
        sample = m.sample_for(box.sites(), np.random.default_rng(23))
        with pytest.raises(ValueError):
            spectrum_envelope(m, box, sample, [0.2, 0.5, 0.9])


class TestSpectrumUnion:
    def test_hull_containment(self):
        m = anderson()
        hull = spectrum_union_estimate(m, m.box(30), EnsembleConfig(50, 24))
        assert -2.0 <= hull.minimum <= hull.maximum <= 3.0

    def test_traces_are_monotone(self):
        m = anderson()
        hull = spectrum_union_estimate(m, m.box(15), EnsembleConfig(40, 25))
        assert (np.diff(hull.min_trace) <= 0).all()
        assert (np.diff(hull.max_trace) >= 0).all()

    def test_zero_coupling_no_variance(self):
        m = ModelSpec(1, SingleSitePotential.dirac(1), UNIFORM01, 1e-300)
        hull = spectrum_union_estimate(m, m.box(10), EnsembleConfig(20, 26))
        assert hull.maximum - hull.max_trace[0] < 1e-12


class TestFiniteVolumeSum:
    def test_geometry_and_positivity(self):
        m = indefinite()
        rep = finite_volume_sum(m, m.box(30), (0,), 6, 1j, 0.2,
                                EnsembleConfig(60, 27))
        assert rep.raw_sum > 0
        assert rep.criterion_product > 0
        assert len(rep.collar_boundary) > 0
        assert rep.depleted_size < (2 * 30 + 1)

    def test_monotone_in_lambda(self):
        # the criterion sum shrinks as the disorder strengthens
        u = indefinite().u
        cfg = EnsembleConfig(150, 28)
        weak = finite_volume_sum(ModelSpec(1, u, UNIFORM01, 10.0),
                                 ModelSpec(1, u, UNIFORM01, 10.0).box(30),
                                 (0,), 6, 1j, 0.2, cfg)
        strong = finite_volume_sum(ModelSpec(1, u, UNIFORM01, 30.0),
                                   ModelSpec(1, u, UNIFORM01, 30.0).box(30),
                                   (0,), 6, 1j, 0.2, cfg)
        assert strong.raw_sum < weak.raw_sum

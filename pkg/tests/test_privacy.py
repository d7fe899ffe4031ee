"""Tests for the privacy mechanisms and the exact privacy verifier."""
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from privgof.distributions import FamilySpec, ProbVector, make_family, sample
from privgof.privacy import (
    PrivacyParams,
    SupportSet,
    Stage2Record,
    c_alpha,
    censor,
    indicator_log_density,
    indicator_worst_log_ratio,
    laplace_array,
    laplace_draw,
    privatize_indicator_block,
    privatize_indicator_vector,
    privatize_stage2,
    privatize_tail_block,
    privatize_tail_indicator,
    stage2_table,
    tau_of,
    verify_ldp_finite,
)


class TestPrivacyParams:
    @pytest.mark.parametrize("alpha", [0.0, -0.2, 1.5, 2.0])
    def test_alpha_range(self, alpha):
        with pytest.raises(ValueError):
            PrivacyParams(alpha, 0.1, 10)

    @pytest.mark.parametrize("gamma", [0.0, 1.0, -0.1])
    def test_gamma_range(self, gamma):
        with pytest.raises(ValueError):
            PrivacyParams(0.5, gamma, 10)


class TestLaplace:
    def test_median_near_zero(self):
        draws = laplace_array(np.random.default_rng(5), 1.0, 1_000_000)
        assert abs(float(np.median(draws))) < 0.01

    def test_variance(self):
        # Var Laplace(s) = 2 s^2 within 3%.
        for s in (0.5, 2.0):
            draws = laplace_array(np.random.default_rng(6), s, 1_000_000)
            assert float(np.var(draws)) == pytest.approx(2 * s * s, rel=0.03)

    def test_invalid_scale(self):
        with pytest.raises(ValueError):
            laplace_draw(np.random.default_rng(0), 0.0)
        with pytest.raises(ValueError):
            laplace_array(np.random.default_rng(0), -1.0, 3)

    def test_deterministic(self):
        a = laplace_array(np.random.default_rng(9), 1.0, 100)
        b = laplace_array(np.random.default_rng(9), 1.0, 100)
        assert np.array_equal(a, b)


class TestIndicatorMechanism:
    def test_noiseless_unit_vector(self):
        b = SupportSet(members=(1, 3, 5), d=6)
        params = PrivacyParams(0.5, 0.1, 10)
        rec = privatize_indicator_vector(3, b, params, noise=np.zeros(3))
        assert rec.z.tolist() == [0.0, 1.0, 0.0]
        rec = privatize_indicator_vector(2, b, params, noise=np.zeros(3))
        assert rec.z.tolist() == [0.0, 0.0, 0.0]

    def test_out_of_range(self):
        b = SupportSet(members=(1, 2), d=4)
        with pytest.raises(ValueError):
            privatize_indicator_vector(5, b, PrivacyParams(0.5, 0.1, 1), noise=np.zeros(2))

    def test_coordinate_mean(self):
        # Mean of coordinate j over 1e5 users with x ~ p is p(j) within
        # 4 * sqrt((p(j)(1-p(j)) + 8/alpha^2) / 1e5).
        alpha = 0.8
        p = make_family(FamilySpec("polynomial", 5, beta=1.0))
        b = SupportSet(members=(1, 2, 3, 4, 5), d=5)
        params = PrivacyParams(alpha, 0.1, 1)
        rng = np.random.default_rng(12)
        xs = sample(p, 100_000, rng)
        z = privatize_indicator_block(xs, b, params, rng)
        means = z.mean(axis=0)
        for k in range(5):
            pj = p.mass[k]
            tol = 4 * math.sqrt((pj * (1 - pj) + 8 / alpha**2) / 100_000)
            assert abs(means[k] - pj) < tol

    def test_block_matches_per_user_layout(self):
        b = SupportSet(members=(2, 4), d=4)
        params = PrivacyParams(1.0, 0.1, 1)
        z = privatize_indicator_block(np.array([2, 4, 1]), b, params, np.random.default_rng(3))
        noiseless = z - laplace_array(np.random.default_rng(3), 2.0, (3, 2))
        assert np.allclose(noiseless, [[1, 0], [0, 1], [0, 0]])

    def test_worst_case_log_ratio_on_grid(self):
        # The log-density difference between two inputs, maximized over a
        # grid of outputs, equals the analytic worst case alpha.
        rng = np.random.default_rng(21)
        for _ in range(20):
            d = int(rng.integers(2, 8))
            size = int(rng.integers(2, d + 1))
            members = tuple(sorted(rng.choice(np.arange(1, d + 1), size=size, replace=False).tolist()))
            b = SupportSet(members=members, d=d)
            alpha = float(rng.uniform(0.1, 1.0))
            x, x_prime = b.members[0], b.members[1]
            grid = np.linspace(-2.0, 3.0, 9)
            best = -math.inf
            for zx in grid:
                for zxp in grid:
                    z = np.zeros(b.size)
                    z[0], z[1] = zx, zxp
                    diff = indicator_log_density(z, x, b, alpha) - indicator_log_density(
                        z, x_prime, b, alpha
                    )
                    best = max(best, diff)
            assert best == pytest.approx(alpha, abs=1e-12)
            assert indicator_worst_log_ratio(b, alpha, x, x_prime) == pytest.approx(alpha, abs=1e-15)

    def test_outside_support_ratio_is_half(self):
        # Only one indicator can change when the other input is outside B.
        b = SupportSet(members=(1, 2), d=4)
        assert indicator_worst_log_ratio(b, 0.6, 1, 3) == pytest.approx(0.3)
        assert indicator_worst_log_ratio(b, 0.6, 3, 4) == 0.0


class TestTailMechanism:
    def test_noiseless(self):
        b = SupportSet(members=(1, 2), d=4)
        params = PrivacyParams(0.5, 0.1, 1)
        assert privatize_tail_indicator(1, b, params, noise=0.0) == 0.0
        assert privatize_tail_indicator(3, b, params, noise=0.0) == 1.0

    def test_monte_carlo_mean(self):
        alpha = 0.6
        p = make_family(FamilySpec("polynomial", 6, beta=0.5))
        b = SupportSet(members=(1, 2, 3), d=6)
        params = PrivacyParams(alpha, 0.1, 1)
        rng = np.random.default_rng(14)
        xs = sample(p, 100_000, rng)
        z = privatize_tail_block(xs, b, params, rng)
        tail = float(p.mass[3:].sum())
        tol = 4 * math.sqrt((0.25 + 8 / alpha**2) / 100_000)
        assert abs(float(z.mean()) - tail) < tol

    def test_log_ratio_bounded_by_half_alpha(self):
        # The tail indicator changes by at most 1 between inputs, so the
        # scale-2/alpha Laplace ratio is alpha/2 <= alpha.
        alpha = 0.9
        scale = 2 / alpha
        for z in np.linspace(-3, 4, 31):
            diff = (abs(z - 1) - abs(z)) / scale
            assert abs(diff) <= alpha / 2 + 1e-15


class TestCensor:
    def test_examples(self):
        assert censor(0.5, 1.0) == 0.5
        assert censor(2.0, 1.0) == 1.0
        assert censor(-3.0, 0.1) == -0.1

    def test_invalid_tau(self):
        with pytest.raises(ValueError):
            censor(0.0, 0.0)

    @given(
        st.floats(-100, 100, allow_nan=False),
        st.floats(-100, 100, allow_nan=False),
        st.floats(1e-6, 10.0),
    )
    @settings(max_examples=300, deadline=None)
    def test_lipschitz_and_idempotent(self, v, w, tau):
        cv, cw = censor(v, tau), censor(w, tau)
        assert abs(cv - cw) <= abs(v - w) + 1e-12
        assert censor(cv, tau) == cv


class TestConstants:
    def test_c_alpha(self):
        assert c_alpha(1.0) == pytest.approx((math.e + 1) / (math.e - 1), abs=1e-15)
        assert c_alpha(1.0) == pytest.approx(2.163953, abs=1e-6)

    def test_tau(self):
        assert tau_of(100, 1.0) == pytest.approx(0.1, abs=1e-15)
        assert tau_of(400, 0.5) == pytest.approx(0.1, abs=1e-15)
        with pytest.raises(ValueError):
            tau_of(0, 0.5)


class TestStage2:
    def test_balanced_when_estimate_matches(self):
        p0 = make_family(FamilySpec("uniform", 4))
        params = PrivacyParams(0.5, 0.1, 100)
        table = stage2_table(p0.mass.copy(), p0, params)
        assert np.allclose(table[:, 0], 0.5, atol=1e-15)

    def test_conditional_expectation_identity(self):
        # (c*tau) * P(+) - (c*tau) * P(-) = censored deviation, exactly.
        p0 = make_family(FamilySpec("polynomial", 6, beta=1.0))
        params = PrivacyParams(0.7, 0.1, 500)
        rng = np.random.default_rng(3)
        p_hat = p0.mass + rng.normal(0, 0.05, 6)
        tau = tau_of(500, 0.7)
        scale = c_alpha(0.7) * tau
        table = stage2_table(p_hat, p0, params)
        for j in range(6):
            expected = censor(float(p_hat[j] - p0.mass[j]), tau)
            cond_mean = scale * table[j, 0] - scale * table[j, 1]
            assert cond_mean == pytest.approx(expected, abs=1e-15)

    def test_monte_carlo_expectation(self):
        p0 = make_family(FamilySpec("uniform", 5))
        params = PrivacyParams(0.5, 0.1, 200)
        rng = np.random.default_rng(8)
        p_hat = p0.mass + np.array([0.03, -0.02, 0.0, 0.08, -0.09])
        tau = tau_of(200, 0.5)
        scale = c_alpha(0.5) * tau
        for j in (1, 4):
            draws = np.array(
                [privatize_stage2(j, p_hat, p0, params, rng).z for _ in range(2000)]
            )
            expected = censor(float(p_hat[j - 1] - p0.mass[j - 1]), tau)
            tol = 4 * scale / math.sqrt(2000)
            assert abs(float(draws.mean()) - expected) < tol

    def test_enumerated_ratio_below_budget(self):
        rng = np.random.default_rng(17)
        for _ in range(20):
            d = int(rng.integers(2, 30))
            alpha = float(rng.choice([0.1, 0.5, 1.0]))
            p0 = ProbVector(rng.dirichlet(np.ones(d)))
            p_hat = p0.mass + rng.normal(0, 0.1, d)
            params = PrivacyParams(alpha, 0.1, int(rng.integers(50, 2000)))
            ok, ratio = verify_ldp_finite(stage2_table(p_hat, p0, params), alpha)
            assert ok
            assert ratio <= alpha + 1e-12

    def test_ratio_attained_at_saturation(self):
        # Deviations censored at +tau and -tau give the ratio exactly alpha.
        p0 = make_family(FamilySpec("uniform", 2))
        alpha = 0.5
        params = PrivacyParams(alpha, 0.1, 100)
        tau = tau_of(100, alpha)
        p_hat = p0.mass + np.array([2 * tau, -2 * tau])
        _, ratio = verify_ldp_finite(stage2_table(p_hat, p0, params), alpha)
        assert ratio == pytest.approx(alpha, abs=1e-12)

    def test_record_invariant(self):
        with pytest.raises(ValueError):
            Stage2Record(z=0.5, magnitude=0.4)


class TestVerifier:
    def test_identity_mechanism_fails(self):
        ok, ratio = verify_ldp_finite(np.eye(3), 1.0)
        assert not ok
        assert math.isinf(ratio)

    def test_uniform_output_passes(self):
        ok, ratio = verify_ldp_finite(np.full((4, 5), 0.2), 0.3)
        assert ok
        assert ratio == 0.0

    def test_bad_rows_rejected(self):
        with pytest.raises(ValueError):
            verify_ldp_finite(np.array([[0.5, 0.4], [0.5, 0.5]]), 1.0)

    def test_randomized_response_known_ratio(self):
        # Binary randomized response with P(keep) = e^a / (1 + e^a) has log
        # ratio exactly a.
        a = 0.7
        keep = math.exp(a) / (1 + math.exp(a))
        table = np.array([[keep, 1 - keep], [1 - keep, keep]])
        ok, ratio = verify_ldp_finite(table, a)
        assert ok
        assert ratio == pytest.approx(a, abs=1e-12)
        ok, _ = verify_ldp_finite(table, a - 0.01)
        assert not ok

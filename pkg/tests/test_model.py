"""Structural-condition checker and power-sum model arithmetic."""

import math

import numpy as np
import pytest

from normwave.model import (
    HypothesisError,
    ModelKind,
    NonlinearityModel,
    check_hypotheses,
    require,
    two_star,
)


def brute_force_F_positive(model, points=1000):
    """Scan max F over a geometric t-grid reaching the decaying regime."""
    top = 1.0
    # extend until the top (negative) term dominates and F is falling
    for _ in range(60):
        if model.F(top) < model.F(0.5 * top) and model.F(top) < 0:
            break
        top *= 2.0
    ts = np.geomspace(1e-6, top, points)
    return float(np.max(model.F(ts))) > 0.0


class TestConstruction:
    def test_terms_sorted_by_exponent(self):
        m = NonlinearityModel.power_sum([(-1.0, 6.0), (1.0, 3.5)], 3)
        assert [p for _, p in m.terms] == [3.5, 6.0]

    def test_exponent_at_most_two_rejected(self):
        with pytest.raises(ValueError):
            NonlinearityModel.power_sum([(1.0, 2.0)], 3)

    def test_supercritical_exponent_rejected(self):
        with pytest.raises(ValueError):
            NonlinearityModel.power_sum([(1.0, 6.5)], 3)

    def test_supercritical_cap_absent_in_2d(self):
        m = NonlinearityModel.power_sum([(1.0, 9.0)], 2)
        assert m.p_max == 9.0
        assert math.isinf(two_star(2))

    def test_duplicate_exponents_rejected(self):
        with pytest.raises(ValueError):
            NonlinearityModel.power_sum([(1.0, 4.0), (2.0, 4.0)], 3)

    def test_zero_coefficient_rejected(self):
        with pytest.raises(ValueError):
            NonlinearityModel.power_sum([(0.0, 4.0), (-1.0, 6.0)], 3)

    def test_kind_tags(self, cq3):
        assert cq3.kind is ModelKind.CUBIC_QUINTIC
        assert cq3.terms == ((1.0, 4.0), (-1.0, 6.0))


class TestEvaluation:
    def test_f_is_derivative_of_F(self, cq3):
        ts = np.linspace(-2.0, 2.0, 41)
        eps = 1e-6
        fd = (cq3.F(ts + eps) - cq3.F(ts - eps)) / (2 * eps)
        assert np.allclose(fd, cq3.f(ts), atol=1e-8)

    def test_f_prime_matches_difference(self, cq3):
        ts = np.linspace(0.1, 1.8, 18)
        eps = 1e-6
        fd = (cq3.f(ts + eps) - cq3.f(ts - eps)) / (2 * eps)
        assert np.allclose(fd, cq3.f_prime(ts), rtol=1e-7)

    def test_f_is_odd_F_is_even(self, cq3):
        ts = np.linspace(0.1, 1.5, 7)
        assert np.allclose(cq3.f(-ts), -cq3.f(ts))
        assert np.allclose(cq3.F(-ts), cq3.F(ts))

    def test_f_over_t_continuous_at_zero(self, cq3):
        assert cq3.f_over_t(0.0) == 0.0
        assert abs(cq3.f_over_t(1e-8)) < 1e-15


class TestCubicQuinticFlags:
    def test_three_dimensional_flags(self, cq3):
        rep = check_hypotheses(cq3)
        assert rep.all_f_hold()
        assert rep.ground_state_comparison == "holds"
        assert rep.mass_positive_threshold == "holds"
        assert rep.mass_zero_threshold == "fails"

    def test_theta_witness_is_four(self, cq3):
        rep = check_hypotheses(cq3)
        assert rep.theta == 4.0
        # the witness actually satisfies theta F >= f(t) t on a sample
        ts = np.linspace(-3.0, 3.0, 301)
        assert np.all(rep.theta * cq3.F(ts) >= cq3.f(ts) * ts - 1e-12)

    def test_zeta_witness_has_positive_F(self, cq3):
        rep = check_hypotheses(cq3)
        assert rep.zeta is not None and cq3.F(rep.zeta) > 0.0

    def test_two_dimensional_small_t_condition_fails(self, cq2):
        rep = check_hypotheses(cq2)
        assert rep.F_supercritical_at_zero == "fails"
        assert rep.ground_state_comparison == "fails"
        assert not rep.local_theory_holds()


class TestTwoPowerFamily:
    @pytest.mark.parametrize("terms", [
        ((1.0, 3.5), (-1.0, 6.0)),
        ((2.0, 4.0), (-0.5, 5.5)),
    ])
    def test_all_conditions_hold(self, terms):
        rep = check_hypotheses(NonlinearityModel.power_sum(terms, 3))
        assert rep.all_f_hold()


class TestPositivityDecision:
    @pytest.mark.parametrize("c_mid", [0.5, 1.0, 1.4, 1.45, 1.5, 2.0, 4.0])
    def test_three_power_matches_brute_force(self, c_mid):
        # a focusing middle hump fighting defocusing neighbors; positivity
        # of F flips as the middle coefficient grows
        m = NonlinearityModel.power_sum(
            [(-1.0, 3.0), (c_mid, 4.0), (-1.0, 6.0)], 3)
        rep = check_hypotheses(m)
        assert rep.F_positive_somewhere in ("holds", "fails")
        expected = "holds" if brute_force_F_positive(m) else "fails"
        assert rep.F_positive_somewhere == expected


class TestRequire:
    def test_saddle_stage_needs_small_t_condition(self, cq2):
        with pytest.raises(HypothesisError):
            require(cq2, "saddle")

    def test_global_stage_accepts_two_dimensional_model(self, cq2):
        rep = require(cq2, "global")
        assert rep.F_positive_somewhere == "holds"

    def test_all_stages_accept_cubic_quintic(self, cq3):
        for stage in ("global", "local", "saddle"):
            require(cq3, stage)

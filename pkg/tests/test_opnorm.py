import numpy as np
import pytest

from pertfool.network import forward, jacobian
from pertfool.numeric import pnorm
from pertfool.opnorm import (attack_l1, attack_l2, attack_linf_bruteforce,
                             network_regression_attack, regression_objective)

from oracles import eig_oracle, sample_lp_ball


class TestObjective:
    def test_identity(self):
        assert regression_objective(np.eye(2), [3.0, 4.0]) == pytest.approx(5.0)

    def test_zero_perturbation(self):
        assert regression_objective(np.ones((3, 2)), np.zeros(2)) == 0.0

    def test_homogeneity(self, rng):
        j = rng.normal(size=(4, 3))
        eta = rng.normal(size=3)
        base = regression_objective(j, eta)
        for c in (-2.0, 0.5, 10.0):
            assert regression_objective(j, c * eta) == pytest.approx(abs(c) * base)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            regression_objective(np.eye(2), np.zeros(3))


class TestL2:
    def test_diagonal(self):
        res = attack_l2(np.diag([1.0, 3.0]), eps=0.5)
        np.testing.assert_allclose(np.abs(res.eta), [0.0, 0.5], atol=1e-7)
        assert res.output_gain == pytest.approx(1.5)
        assert res.exact

    def test_isotropic(self):
        res = attack_l2(np.eye(3), eps=0.25)
        assert res.output_gain == pytest.approx(0.25)
        assert pnorm(res.eta, 2) == pytest.approx(0.25)

    def test_matches_eig_oracle(self, rng):
        for trial in range(20):
            j = rng.normal(size=(5, 5))
            res = attack_l2(j, eps=1.0, seed=trial)
            lam, _ = eig_oracle(j.T @ j)
            assert res.output_gain == pytest.approx(np.sqrt(lam), rel=1e-6)


class TestL1:
    def test_strongest_column(self):
        j = np.array([[1.0, 0.0], [0.0, 3.0]])
        res = attack_l1(j, eps=0.5)
        np.testing.assert_allclose(res.eta, [0.0, 0.5])
        assert res.output_gain == pytest.approx(1.5)

    def test_equal_columns_tie_low(self):
        j = np.ones((3, 4))
        res = attack_l1(j, eps=1.0)
        assert res.eta[0] == 1.0
        assert not res.eta[1:].any()

    def test_zero_matrix_degenerate(self):
        res = attack_l1(np.zeros((2, 3)), eps=1.0)
        assert res.degenerate
        assert res.output_gain == 0.0
        np.testing.assert_allclose(res.eta, [1.0, 0.0, 0.0])

    def test_beats_canonical_and_sampled_points(self, rng):
        j = rng.normal(size=(6, 6))
        eps = 0.8
        res = attack_l1(j, eps)
        for i in range(6):
            for sign in (1.0, -1.0):
                e = np.zeros(6)
                e[i] = sign * eps
                assert res.output_gain >= regression_objective(j, e) - 1e-12
        pts = sample_lp_ball(rng, 6, 1.0, eps, 10_000)
        gains = np.linalg.norm(j @ pts.T, axis=0)
        assert res.output_gain >= gains.max() - 1e-9


class TestLinfBruteforce:
    def test_hand_enumerated_two_by_two(self):
        res = attack_linf_bruteforce(np.array([[1.0, -1.0], [1.0, 1.0]]), eps=1.0)
        assert res.output_gain == pytest.approx(2.0)

    def test_diagonal_all_ones_optimal(self):
        d = np.array([1.0, 2.0, 3.0])
        res = attack_linf_bruteforce(np.diag(d), eps=0.5)
        assert res.output_gain == pytest.approx(0.5 * np.linalg.norm(d))
        np.testing.assert_allclose(np.abs(res.eta), 0.5)

    def test_width_cap(self):
        with pytest.raises(ValueError):
            attack_linf_bruteforce(np.ones((2, 17)), eps=1.0)

    def test_ball_inclusion_ordering(self, rng):
        for _ in range(20):
            j = rng.normal(size=(rng.integers(2, 7), rng.integers(2, 9)))
            eps = float(rng.uniform(0.1, 2.0))
            g_inf = attack_linf_bruteforce(j, eps).output_gain
            g_l2 = attack_l2(j, eps).output_gain
            g_l1 = attack_l1(j, eps).output_gain
            assert g_inf >= g_l2 - 1e-9
            assert g_l2 >= g_l1 - 1e-9

    def test_no_sampled_point_beats_it(self, rng):
        j = rng.normal(size=(4, 8))
        eps = 0.6
        res = attack_linf_bruteforce(j, eps)
        pts = sample_lp_ball(rng, 8, np.inf, eps, 100_000)
        gains = np.linalg.norm(j @ pts.T, axis=0)
        assert res.output_gain >= gains.max() - 1e-9


class TestNetworkRegressionAttack:
    @pytest.mark.parametrize("p", [1.0, 2.0, np.inf])
    def test_budget_and_linear_consistency(self, tanh_net, rng, p):
        x = rng.normal(size=4) * 0.3
        eps = 1e-3
        result, realized = network_regression_attack(tanh_net, x, p, eps)
        assert pnorm(result.eta, p) <= eps * (1 + 1e-12)
        j = jacobian(tanh_net, forward(tanh_net, x))
        assert result.output_gain == pytest.approx(
            regression_objective(j, result.eta), rel=1e-9)
        # at a tiny budget the realized output change tracks the linear gain
        assert realized == pytest.approx(result.output_gain, rel=1e-2)

    def test_unsupported_exponent(self, tanh_net):
        with pytest.raises(ValueError):
            network_regression_attack(tanh_net, np.zeros(4), 3.0, 0.1)

import numpy as np
import pytest

from sysid import (
    Criterion,
    IdentMode,
    LtiSystem,
    criterion_value,
    design_cost,
    expected_gramian,
)


def random_pd(rng, n, floor=0.1):
    r = rng.standard_normal((n, n))
    return r @ r.T + floor * np.eye(n)


class TestCriterionValue:
    def test_identity_a_opt(self):
        assert criterion_value(Criterion.A, np.eye(3)) == pytest.approx(-3.0)

    def test_diag_d_opt(self):
        assert criterion_value(Criterion.D, np.diag([1.0, 2.0])) == pytest.approx(np.log(2.0))

    def test_e_opt_min_eigenvalue(self):
        assert criterion_value(Criterion.E, np.diag([4.0, 0.25, 2.0])) == pytest.approx(0.25)

    def test_a_opt_matches_inverse_trace(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            m = random_pd(rng, 4)
            want = -np.trace(np.linalg.inv(m))
            assert criterion_value(Criterion.A, m) == pytest.approx(want, rel=1e-10)

    def test_singular_sentinels(self):
        m = np.diag([1.0, 0.0])
        assert criterion_value(Criterion.A, m) == float("-inf")
        assert criterion_value(Criterion.D, m) == float("-inf")
        assert criterion_value(Criterion.E, m) == 0.0

    def test_asymmetric_rejected(self):
        m = np.array([[1.0, 0.5], [0.0, 1.0]])
        with pytest.raises(ValueError, match="symmetric"):
            criterion_value(Criterion.A, m)

    def test_sentinel_orders_correctly(self):
        singular = criterion_value(Criterion.D, np.zeros((2, 2)))
        regular = criterion_value(Criterion.D, 1e-6 * np.eye(2))
        assert singular < regular

    def test_from_string(self):
        assert Criterion.from_string(" d ") is Criterion.D
        with pytest.raises(ValueError, match="unknown criterion"):
            Criterion.from_string("Z")


class TestCriterionProperties:
    def test_loewner_monotonicity(self):
        rng = np.random.default_rng(1)
        for _ in range(100):
            n = int(rng.integers(2, 5))
            m = random_pd(rng, n)
            nn = m + random_pd(rng, n, floor=0.05)
            for crit in Criterion:
                assert criterion_value(crit, m) <= criterion_value(crit, nn) + 1e-10

    def test_concavity_spot_check(self):
        rng = np.random.default_rng(2)
        for _ in range(100):
            n = int(rng.integers(2, 5))
            m, nn = random_pd(rng, n), random_pd(rng, n)
            for crit in (Criterion.A, Criterion.D):
                mid = criterion_value(crit, 0.5 * m + 0.5 * nn)
                avg = 0.5 * criterion_value(crit, m) + 0.5 * criterion_value(crit, nn)
                assert mid >= avg - 1e-10

    def test_logdet_gain_decreases_in_loewner_order(self):
        rng = np.random.default_rng(3)
        for _ in range(200):
            n = int(rng.integers(2, 5))
            a = random_pd(rng, n)
            b = a + random_pd(rng, n, floor=0.05)
            x = rng.standard_normal(n)
            gain_a = criterion_value(Criterion.D, a + np.outer(x, x)) - criterion_value(
                Criterion.D, a
            )
            gain_b = criterion_value(Criterion.D, b + np.outer(x, x)) - criterion_value(
                Criterion.D, b
            )
            assert gain_a >= gain_b - 1e-10


class TestDesignCost:
    def setup_method(self):
        rng = np.random.default_rng(4)
        a = rng.standard_normal((3, 3))
        a *= 0.7 / np.max(np.abs(np.linalg.eigvals(a)))
        b = rng.standard_normal((3, 2))
        self.sys = LtiSystem(a=a, b=b, sigma=0.2, gamma=1.0)
        self.theta = np.hstack([a, b])
        self.inputs = rng.standard_normal((8, 2))

    def test_matches_scaled_expected_gramian(self):
        mode = IdentMode.full()
        for crit in Criterion:
            got = design_cost(crit, self.theta, self.inputs, 0.2, 6, mode)
            info = 6 * expected_gramian(self.theta, self.inputs[:6], 0.2, mode)
            assert got == pytest.approx(-criterion_value(crit, info), rel=1e-10)

    def test_zero_information_sentinel(self):
        mode = IdentMode.with_known_b(self.sys.b)
        cost = design_cost(Criterion.A, self.sys.a, np.zeros((4, 2)), 0.0, 4, mode)
        assert cost == float("inf")

    def test_known_b_a_opt_is_inverse_trace_cost(self):
        mode = IdentMode.with_known_b(self.sys.b)
        got = design_cost(Criterion.A, self.sys.a, self.inputs, 0.2, 8, mode)
        info = 8 * expected_gramian(self.sys.a, self.inputs, 0.2, mode)
        assert got == pytest.approx(np.trace(np.linalg.inv(info)), rel=1e-10)

    def test_requires_enough_inputs(self):
        with pytest.raises(ValueError, match="inputs"):
            design_cost(Criterion.A, self.theta, self.inputs, 0.2, 20, IdentMode.full())

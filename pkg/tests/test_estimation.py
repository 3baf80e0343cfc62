import numpy as np
import pytest

from sysid import (
    EstimatorState,
    IdentMode,
    LtiSystem,
    SingularMomentError,
    Trajectory,
    ols_fit,
    rls_update,
    simulate,
    squared_error,
)


def make_sys(seed, d=3, m=2, sigma=0.1, rho=0.8):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((d, d))
    a *= rho / np.max(np.abs(np.linalg.eigvals(a)))
    b = rng.standard_normal((d, m))
    return LtiSystem(a=a, b=b, sigma=sigma, gamma=1.0)


def exciting_trajectory(sys, horizon, seed):
    u = np.random.default_rng(seed).standard_normal((horizon, sys.m))
    return simulate(sys, u, seed=seed)


class TestOlsFit:
    def test_noiseless_interpolation_recovers_theta(self):
        sys = make_sys(0, d=3, m=2, sigma=0.0)
        mode = IdentMode.full()
        q = sys.d + sys.m
        # canonical-basis inputs scaled by the budget make Z full rank fast
        u = np.zeros((q, sys.m))
        for t in range(q):
            u[t, t % sys.m] = 1.0 * (1 + t)
        traj = simulate(sys, u, seed=0)
        theta = ols_fit(traj, mode)
        np.testing.assert_allclose(theta, np.hstack([sys.a, sys.b]), atol=1e-8)

    def test_residual_matches_pseudo_inverse_of_noise(self):
        sys = make_sys(1)
        traj = exciting_trajectory(sys, 40, seed=2)
        mode = IdentMode.full()
        theta = ols_fit(traj, mode)
        z = mode.covariates(traj.states, traj.inputs)
        w = traj.noises
        want = (np.linalg.pinv(z) @ w).T
        np.testing.assert_allclose(theta - np.hstack([sys.a, sys.b]), want, atol=1e-10)

    def test_underdetermined_raises_with_rank(self):
        sys = make_sys(3)
        traj = exciting_trajectory(sys, 2, seed=4)  # T=2 < q=5
        with pytest.raises(SingularMomentError) as err:
            ols_fit(traj, IdentMode.full())
        assert err.value.rank < err.value.needed

    def test_known_b_mode_targets(self):
        sys = make_sys(5, sigma=0.0)
        traj = exciting_trajectory(sys, 20, seed=6)
        theta = ols_fit(traj, IdentMode.with_known_b(sys.b))
        np.testing.assert_allclose(theta, sys.a, atol=1e-8)


class TestRlsUpdate:
    def test_zero_covariate_is_noop(self):
        est = EstimatorState.fresh(q=3, d=2, ridge=1e-6)
        out = rls_update(est, np.zeros(3), np.ones(2))
        np.testing.assert_array_equal(out.theta, est.theta)
        np.testing.assert_array_equal(out.m, est.m)

    def test_single_update_solves_normal_equation(self):
        ridge = 1e-6
        est = EstimatorState.fresh(q=2, d=2, ridge=ridge)
        e1 = np.array([1.0, 0.0])
        out = rls_update(est, e1, e1)
        assert out.theta[0, 0] == pytest.approx(1.0 / (1.0 + ridge), rel=1e-12)

    def test_matches_batch_fit(self):
        ridge = 1e-10
        sys = make_sys(7)
        mode = IdentMode.full()
        traj = exciting_trajectory(sys, 30, seed=8)
        z = mode.covariates(traj.states, traj.inputs)
        y = mode.targets(traj.states, traj.inputs)
        est = EstimatorState.fresh(q=sys.d + sys.m, d=sys.d, ridge=ridge)
        for t in range(30):
            est = rls_update(est, z[t], y[t])
        batch = ols_fit(traj, mode, ridge=ridge)
        rel = np.linalg.norm(est.theta - batch) / np.linalg.norm(batch)
        assert rel <= 1e-8

    def test_order_independent_final_estimate(self):
        sys = make_sys(9)
        mode = IdentMode.full()
        traj = exciting_trajectory(sys, 25, seed=10)
        z = mode.covariates(traj.states, traj.inputs)
        y = mode.targets(traj.states, traj.inputs)
        order = np.random.default_rng(11).permutation(25)
        est_fwd = EstimatorState.fresh(q=z.shape[1], d=sys.d, ridge=1e-8)
        est_perm = EstimatorState.fresh(q=z.shape[1], d=sys.d, ridge=1e-8)
        for t in range(25):
            est_fwd = rls_update(est_fwd, z[t], y[t])
            est_perm = rls_update(est_perm, z[order[t]], y[order[t]])
        rel = np.linalg.norm(est_fwd.theta - est_perm.theta) / np.linalg.norm(est_fwd.theta)
        assert rel <= 1e-8

    def test_refresh_keeps_inverse_accurate(self):
        # run past the refresh period and check m_inv against the true inverse
        rng = np.random.default_rng(12)
        est = EstimatorState.fresh(q=3, d=1, ridge=1e-4)
        for _ in range(200):
            z = rng.standard_normal(3)
            est = rls_update(est, z, rng.standard_normal(1))
        np.testing.assert_allclose(est.m_inv, np.linalg.inv(est.m), rtol=1e-6, atol=1e-10)

    def test_ridge_floor_required(self):
        with pytest.raises(ValueError, match="ridge"):
            EstimatorState.fresh(q=2, d=2, ridge=0.0)


class TestSquaredError:
    def test_zero_on_equal(self):
        theta = np.random.default_rng(13).standard_normal((2, 4))
        assert squared_error(theta, theta) == 0.0

    def test_padded_identity(self):
        star = np.zeros((2, 3))
        hat = star.copy()
        hat[:2, :2] += np.eye(2)
        assert squared_error(hat, star) == pytest.approx(2.0)

    def test_trace_identity(self):
        rng = np.random.default_rng(14)
        a, b = rng.standard_normal((3, 5)), rng.standard_normal((3, 5))
        want = np.trace((a - b) @ (a - b).T)
        assert squared_error(a, b) == pytest.approx(want, rel=1e-12)

    def test_shape_mismatch(self):
        with pytest.raises(ValueError, match="shape"):
            squared_error(np.zeros((2, 2)), np.zeros((2, 3)))


def test_noiseless_persistent_excitation_exact_recovery():
    sys = make_sys(15, sigma=0.0)
    mode = IdentMode.full()
    traj = exciting_trajectory(sys, 12, seed=16)
    z = mode.covariates(traj.states, traj.inputs)
    y = mode.targets(traj.states, traj.inputs)
    est = EstimatorState.fresh(q=sys.d + sys.m, d=sys.d, ridge=1e-12)
    theta_star = np.hstack([sys.a, sys.b])
    for t in range(12):
        est = rls_update(est, z[t], y[t])
    assert squared_error(est.theta, theta_star) <= 1e-12

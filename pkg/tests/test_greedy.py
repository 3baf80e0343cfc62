import numpy as np
import pytest

from sysid import (
    Criterion,
    EstimatorState,
    IdentMode,
    LtiSystem,
    OneStepProblem,
    build_one_step,
    criterion_value,
    gramian,
    greedy_identify,
    greedy_step,
    reduce_to_qp,
    solve_sphere_qp,
)


def make_sys(seed, d=3, m=2, sigma=0.05, rho=0.8):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((d, d))
    a *= rho / np.max(np.abs(np.linalg.eigvals(a)))
    b = rng.standard_normal((d, m))
    return LtiSystem(a=a, b=b, sigma=sigma, gamma=1.0)


class TestBuildOneStep:
    def test_known_b_initial_state(self):
        b = np.eye(2)
        mode = IdentMode.with_known_b(b)
        est = EstimatorState.fresh(q=2, d=2, ridge=1e-6)
        p = build_one_step(mode, est, np.zeros(2), sigma=0.3, t=0, gamma=1.0)
        np.testing.assert_allclose(p.m_bar, (1e-6 + 0.09) * np.eye(2), atol=1e-15)
        np.testing.assert_allclose(p.z0, 0.0)

    def test_full_mode_shapes(self):
        mode = IdentMode.full()
        est = EstimatorState.fresh(q=5, d=3, ridge=1e-6)
        p = build_one_step(mode, est, np.ones(3), sigma=0.1, t=1, gamma=1.0)
        assert p.m_bar.shape == (5, 5)
        assert p.lin.shape == (5, 2)
        np.testing.assert_allclose(p.z0[:3], 1.0)
        np.testing.assert_allclose(p.z0[3:], 0.0)

    def test_matches_hand_assembly(self):
        sys = make_sys(0)
        mode = IdentMode.with_known_b(sys.b)
        rng = np.random.default_rng(1)
        est = EstimatorState.fresh(q=3, d=3, ridge=1e-4)
        from sysid import rls_update

        for _ in range(6):
            est = rls_update(est, rng.standard_normal(3), rng.standard_normal(3))
        x = rng.standard_normal(3)
        t = 6
        p = build_one_step(mode, est, x, sigma=0.05, t=t, gamma=1.0)
        want = est.m + np.outer(x, x) + 0.05**2 * gramian(est.theta, t + 1)
        np.testing.assert_allclose(p.m_bar, want, atol=1e-12)
        np.testing.assert_allclose(p.z0, est.theta @ x, atol=1e-12)

    def test_full_mode_gramian_block(self):
        sys = make_sys(2)
        mode = IdentMode.full()
        est = EstimatorState.fresh(q=5, d=3, ridge=1e-4)
        x = np.ones(3)
        p = build_one_step(mode, est, x, sigma=0.2, t=3, gamma=1.0)
        a_t = est.theta[:, :3]
        want = est.m.copy()
        want[:3, :3] += 0.2**2 * gramian(a_t, 3)
        np.testing.assert_allclose(p.m_bar, want, atol=1e-12)


class TestReduceToQp:
    def test_identity_known_b(self):
        v = np.array([0.3, -0.7])
        p = OneStepProblem(
            m_bar=np.eye(2), z0=v, lin=np.eye(2), gamma=1.0, crit=Criterion.A
        )
        qp = reduce_to_qp(p)
        np.testing.assert_allclose(qp.q, -np.eye(2), atol=1e-14)
        np.testing.assert_allclose(qp.b, v, atol=1e-14)

    def test_identity_full_mode(self):
        d, m = 2, 2
        z0 = np.array([1.0, 2.0, 0.0, 0.0])
        lin = np.vstack([np.zeros((d, m)), np.eye(m)])
        p = OneStepProblem(
            m_bar=np.eye(d + m), z0=z0, lin=lin, gamma=1.0, crit=Criterion.D
        )
        qp = reduce_to_qp(p)
        np.testing.assert_allclose(qp.q, -np.eye(m), atol=1e-14)
        np.testing.assert_allclose(qp.b, 0.0, atol=1e-14)

    def test_objective_equivalence_random(self):
        # u^T Q u - 2 b^T u must equal -z(u)^T Mbar^-1 z(u) up to one constant
        rng = np.random.default_rng(3)
        r = rng.standard_normal((3, 3))
        m_bar = r @ r.T + 0.5 * np.eye(3)
        lin = rng.standard_normal((3, 2))
        z0 = rng.standard_normal(3)
        p = OneStepProblem(m_bar=m_bar, z0=z0, lin=lin, gamma=1.0, crit=Criterion.A)
        qp = reduce_to_qp(p)
        minv = np.linalg.inv(m_bar)
        const = None
        for _ in range(100):
            u = rng.standard_normal(2)
            z = z0 + lin @ u
            lhs = qp.objective(u)
            rhs = -z @ minv @ z
            if const is None:
                const = lhs - rhs
            assert lhs - rhs == pytest.approx(const, abs=1e-10)

    def test_rejects_e_criterion(self):
        p = OneStepProblem(
            m_bar=np.eye(2), z0=np.zeros(2), lin=np.eye(2), gamma=1.0, crit=Criterion.E
        )
        with pytest.raises(ValueError, match="A and D"):
            reduce_to_qp(p)


class TestGreedyStep:
    def test_isotropic_tie_break_deterministic(self):
        mode = IdentMode.with_known_b(np.eye(2))
        est = EstimatorState.fresh(q=2, d=2, ridge=1e-6)
        u1 = greedy_step(mode, est, np.zeros(2), sigma=0.1, t=0, gamma=2.0)
        u2 = greedy_step(mode, est, np.zeros(2), sigma=0.1, t=0, gamma=2.0)
        np.testing.assert_array_equal(u1, u2)
        assert np.linalg.norm(u1) == pytest.approx(2.0, rel=1e-12)

    def test_one_step_logdet_optimality_vs_sampling(self):
        # exhaustive sphere sampling cannot beat the planned input
        rng = np.random.default_rng(4)
        sys = make_sys(5, d=2, m=2, sigma=0.0)
        mode = IdentMode.with_known_b(sys.b)
        est = EstimatorState.fresh(q=2, d=2, ridge=1e-3)
        from sysid import rls_update

        for _ in range(4):
            est = rls_update(est, rng.standard_normal(2), rng.standard_normal(2))
        x = rng.standard_normal(2)
        gamma = 1.3
        u_star = greedy_step(mode, est, x, sigma=0.0, t=4, gamma=gamma)
        problem = build_one_step(mode, est, x, sigma=0.0, t=4, gamma=gamma)

        phi = np.linspace(0, 2 * np.pi, 100_000, endpoint=False)
        samples = gamma * np.column_stack([np.cos(phi), np.sin(phi)])
        z = problem.z0 + samples @ problem.lin.T
        updated = problem.m_bar + z[:, :, None] * z[:, None, :]
        sampled_best = np.linalg.slogdet(updated)[1].max()

        z_star = problem.z0 + problem.lin @ u_star
        best = np.linalg.slogdet(problem.m_bar + np.outer(z_star, z_star))[1]
        assert best >= sampled_best - 1e-9

    def test_a_and_d_criteria_agree(self):
        rng = np.random.default_rng(6)
        sys = make_sys(7)
        mode = IdentMode.with_known_b(sys.b)
        est = EstimatorState.fresh(q=3, d=3, ridge=1e-4)
        from sysid import rls_update

        for _ in range(5):
            est = rls_update(est, rng.standard_normal(3), rng.standard_normal(3))
        x = rng.standard_normal(3)
        u_a = greedy_step(mode, est, x, sigma=0.1, t=5, gamma=1.0, crit=Criterion.A)
        u_d = greedy_step(mode, est, x, sigma=0.1, t=5, gamma=1.0, crit=Criterion.D)
        np.testing.assert_allclose(u_a, u_d, atol=1e-12)


class TestGreedyIdentify:
    def test_noiseless_identifiability(self):
        for seed in range(5):
            rng = np.random.default_rng(1000 + seed)
            a = rng.standard_normal((4, 4))
            a *= 0.8 / np.max(np.abs(np.linalg.eigvals(a)))
            b = rng.standard_normal((4, 2))
            sys = LtiSystem(a=a, b=b, sigma=0.0, gamma=1.0)
            result = greedy_identify(
                sys, IdentMode.full(), 30, seed=seed, ridge=1e-10, backend="python"
            )
            assert result.errors[-1] <= 1e-10

    def test_unit_energy_every_step(self):
        sys = make_sys(8)
        result = greedy_identify(sys, IdentMode.with_known_b(sys.b), 50, seed=3)
        np.testing.assert_allclose(result.energy, sys.gamma**2, rtol=1e-10)

    def test_deterministic_given_seed(self):
        sys = make_sys(9)
        r1 = greedy_identify(sys, IdentMode.full(), 40, seed=5, backend="python")
        r2 = greedy_identify(sys, IdentMode.full(), 40, seed=5, backend="python")
        np.testing.assert_array_equal(r1.errors, r2.errors)
        np.testing.assert_array_equal(r1.inputs, r2.inputs)

    def test_error_decreases_with_noise(self):
        sys = make_sys(10, d=4, m=4, sigma=1e-2)
        sys = LtiSystem(a=sys.a, b=np.eye(4), sigma=1e-2, gamma=1.0)
        result = greedy_identify(sys, IdentMode.with_known_b(sys.b), 120, seed=1)
        assert result.errors[-1] < result.errors[10] < result.errors[2]

    def test_per_step_time_flat_in_t(self):
        sys = make_sys(11, d=4, m=4, sigma=1e-2)
        result = greedy_identify(
            sys, IdentMode.with_known_b(sys.b), 210, seed=2, backend="python"
        )
        early = np.median(result.ctrl_seconds[5:25])
        late = np.median(result.ctrl_seconds[185:205])
        assert late <= 2.0 * early

    def test_rejects_e_criterion(self):
        sys = make_sys(12)
        with pytest.raises(ValueError, match="A and D"):
            greedy_identify(sys, IdentMode.full(), 10, crit=Criterion.E)

"""One-step-ahead input planning by sphere-constrained quadratic programming.

At each step the input is chosen to maximize the one-step information
criterion Phi(Mbar + z(u) z(u)^T) under the per-step energy budget. For the
A and D criteria this reduces to maximizing the quadratic z(u)^T Mbar^-1 z(u),
i.e. a quadratic program over the sphere ||u|| = gamma, solved exactly by
eigendecomposition plus a scalar secular equation.
"""

import time
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg

from .criteria import Criterion
from .estimation import EstimatorState, rls_update, squared_error
from .system import STREAM_TRAJECTORY, IdentMode, LtiSystem, gramian, stream_rng

SYMMETRY_TOL = 1e-10
MAX_SECULAR_ITERATIONS = 200


class SecularSolveError(RuntimeError):
    """Raised when the secular root-finding fails to converge."""

    def __init__(self, residual: float, iterations: int):
        self.residual = residual
        self.iterations = iterations
        super().__init__(
            f"secular equation not solved after {iterations} iterations "
            f"(residual {residual:.3e})"
        )


@dataclass(frozen=True)
class SphereQp:
    """min u^T Q u - 2 b^T u over the sphere of radius gamma."""

    q: np.ndarray
    b: np.ndarray
    gamma: float

    def __post_init__(self):
        q = np.asarray(self.q, dtype=float)
        b = np.asarray(self.b, dtype=float)
        asym = np.max(np.abs(q - q.T)) if q.size else 0.0
        if asym > SYMMETRY_TOL * (1.0 + np.max(np.abs(q))):
            raise ValueError(f"Q is not symmetric (max asymmetry {asym:.3e})")
        if q.shape != (b.size, b.size):
            raise ValueError(f"Q {q.shape} does not match b of size {b.size}")
        if not (self.gamma > 0.0):
            raise ValueError("gamma must be positive")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "b", b)

    def objective(self, u: np.ndarray) -> float:
        u = np.asarray(u, dtype=float)
        return float(u @ self.q @ u - 2.0 * self.b @ u)


@dataclass(frozen=True)
class OneStepProblem:
    """One-step design state: information so far plus the affine covariate map.

    The next covariate is z(u) = z0 + lin @ u; m_bar is the accumulated
    information including the noise-Gramian term at the current estimate.
    """

    m_bar: np.ndarray
    z0: np.ndarray
    lin: np.ndarray
    gamma: float
    crit: Criterion


def _canonical_sign(v: np.ndarray) -> np.ndarray:
    for x in v:
        if abs(x) > 1e-14:
            return v if x > 0 else -v
    return v


def _bottom_space_direction(vecs: np.ndarray, bottom: np.ndarray) -> np.ndarray:
    """Deterministic unit vector in the minimal eigenspace.

    Eigenvector bases of a repeated eigenvalue are arbitrary, so take the
    projection of the first canonical axis with nonnegligible overlap; the
    projector is basis-independent, which keeps tie-breaking stable across
    LAPACK drivers and backends.
    """
    basis = vecs[:, bottom]
    for k in range(basis.shape[0]):
        proj = basis @ basis[k, :]
        nrm = np.linalg.norm(proj)
        if nrm > 1e-8:
            return proj / nrm
    return _canonical_sign(basis[:, 0].copy())


def _secular_root(gaps: np.ndarray, beta: np.ndarray, gamma: float, tol: float):
    """Solve sum beta_i^2/(gaps_i + s)^2 = gamma^2 for s > 0.

    Works in coordinates shifted by the bottom eigenvalue (gaps_i =
    alpha_i - alpha_min >= 0 with gaps_0 = 0 exactly), so the pole sits at
    s = 0 and evaluations near it do not cancel. phi is strictly decreasing
    and convex on (0, inf); safeguarded Newton/bisection converges. Returns
    (s, hard_case); hard_case means phi stays below gamma^2 everywhere
    (b orthogonal to the bottom eigenspace and the budget too large).
    """
    g2 = gamma * gamma
    b2 = beta * beta
    zero = b2 == 0.0

    def phi(s):
        denom = (gaps + s) ** 2
        with np.errstate(divide="ignore"):
            terms = np.divide(b2, denom, out=np.zeros_like(b2), where=~zero)
        if np.any(~zero & (denom == 0.0)):
            return np.inf
        return float(np.sum(terms)) - g2

    if phi(0.0) <= 0.0:
        return 0.0, True
    hi = np.linalg.norm(beta) / gamma  # phi(hi) <= 0 by Cauchy-Schwarz
    lo_b, hi_b = 0.0, hi
    s = hi
    f = phi(s)
    for _ in range(MAX_SECULAR_ITERATIONS):
        if abs(f) <= tol * g2:
            return s, False
        if f > 0.0:
            lo_b = max(lo_b, s)
        else:
            hi_b = min(hi_b, s)
        d = -2.0 * float(np.sum(b2 / (gaps + s) ** 3))
        s_next = s - f / d if np.isfinite(f) and d < 0.0 else None
        if s_next is None or not (lo_b < s_next < hi_b):
            s_next = 0.5 * (lo_b + hi_b)
        s = s_next
        f = phi(s)
        if hi_b - lo_b <= 1e-17 * (1.0 + abs(s)):
            if abs(f) <= max(tol * g2, 1e-7 * g2):
                return s, False
            break
    raise SecularSolveError(abs(f), MAX_SECULAR_ITERATIONS)


def solve_sphere_qp(qp: SphereQp, tol: float = 1e-10) -> np.ndarray:
    """Global minimizer of u^T Q u - 2 b^T u over the energy sphere.

    Eigendecompose Q, find the Lagrange multiplier from the secular equation
    by safeguarded Newton/bisection, and reconstruct u. The hard case (b
    orthogonal to the bottom eigenspace with an interior secular value) adds
    a bottom-eigenvector component sized to reach the sphere. When Q is
    positive definite and the unconstrained stationary point lies strictly
    inside the ball, that point is returned when it improves the objective.
    """
    alpha, vecs = scipy.linalg.eigh((qp.q + qp.q.T) / 2.0)
    beta = vecs.T @ qp.b
    gamma = qp.gamma
    m = beta.size
    # components at construction-roundoff level are treated as exact zeros:
    # they are condition-number noise, and near-hard instances then take the
    # deterministic hard-case branch instead of chasing a noise-determined
    # point on the (objective-flat) tie manifold
    beta[np.abs(beta) <= 1e-8 * np.linalg.norm(beta)] = 0.0

    interior = None
    if alpha[0] > 0.0:
        u_unc = vecs @ (beta / alpha)
        if np.linalg.norm(u_unc) < gamma:
            interior = u_unc

    eig_tol = 1e-12 * max(1.0, abs(alpha[0]), abs(alpha[-1]))
    gaps = alpha - alpha[0]
    bottom = gaps <= eig_tol

    if np.linalg.norm(beta) == 0.0:
        boundary = gamma * _bottom_space_direction(vecs, bottom)
    else:
        s, hard = _secular_root(gaps, beta, gamma, tol)
        if hard:
            coords = np.zeros(m)
            free = ~bottom
            coords[free] = beta[free] / gaps[free]
            partial = float(coords @ coords)
            tau = np.sqrt(max(gamma * gamma - partial, 0.0))
            boundary = vecs @ coords + tau * _bottom_space_direction(vecs, bottom)
        else:
            boundary = vecs @ (beta / (gaps + s))
            nrm = np.linalg.norm(boundary)
            if nrm > 0.0:
                boundary = boundary * (gamma / nrm)

    if interior is not None and qp.objective(interior) < qp.objective(boundary):
        return interior
    return boundary


def build_one_step(
    mode: IdentMode,
    est: EstimatorState,
    x: np.ndarray,
    sigma: float,
    t: int,
    gamma: float,
    crit: Criterion = Criterion.A,
    gramian_term: Optional[np.ndarray] = None,
) -> OneStepProblem:
    """Assemble the one-step design problem at the current estimate.

    KnownB: m_bar = M_t + sigma^2 G_{t+1}(A_t) with z(u) = A_t x + B u; the
    covariate x_t is already observed, so it is folded into the information.
    FullTheta: m_bar = M_{t-1} + sigma^2 diag(G_t(A_t), 0) with z(u) = (x; u).
    The optional gramian_term overrides the exact Gramian (the sequential
    loop maintains it incrementally).
    """
    x = np.asarray(x, dtype=float)
    a_t, b_known = mode.split_theta(est.theta)
    d = a_t.shape[0]
    if mode.is_known_b:
        m = b_known.shape[1]
        g = gramian(a_t, t + 1) if gramian_term is None else gramian_term
        m_bar = est.m + np.outer(x, x) + sigma**2 * g
        z0 = a_t @ x
        lin = b_known
    else:
        m = est.theta.shape[1] - d
        g = gramian(a_t, t) if gramian_term is None else gramian_term
        m_bar = est.m + sigma**2 * mode.embed_gramian(g, m)
        z0 = np.concatenate([x, np.zeros(m)])
        lin = np.vstack([np.zeros((d, m)), np.eye(m)])
    return OneStepProblem(m_bar=m_bar, z0=z0, lin=lin, gamma=gamma, crit=crit)


def reduce_to_qp(p: OneStepProblem) -> SphereQp:
    """Reduce the one-step problem to a sphere QP via P = m_bar^-1.

    Maximizing z(u)^T P z(u) with z = z0 + L u is minimizing
    u^T(-L^T P L)u - 2(L^T P z0)^T u; for KnownB this is Q = -B^T P B,
    b = B^T P A_t x, and for FullTheta Q = -P_uu, b = P_ux x.
    """
    if p.crit not in (Criterion.A, Criterion.D):
        raise ValueError("one-step planning is defined for the A and D criteria")
    m_bar = (p.m_bar + p.m_bar.T) / 2.0
    try:
        c, low = scipy.linalg.cho_factor(m_bar)
    except np.linalg.LinAlgError as exc:
        raise ValueError("information matrix is singular beyond the ridge floor") from exc
    p_lin = scipy.linalg.cho_solve((c, low), p.lin)
    q = -(p.lin.T @ p_lin)
    b = p_lin.T @ p.z0
    return SphereQp(q=(q + q.T) / 2.0, b=b, gamma=p.gamma)


def greedy_step(
    mode: IdentMode,
    est: EstimatorState,
    x: np.ndarray,
    sigma: float,
    t: int,
    gamma: float,
    crit: Criterion = Criterion.A,
    qp_tol: float = 1e-10,
) -> np.ndarray:
    """Plan one maximally informative input of energy gamma."""
    problem = build_one_step(mode, est, x, sigma, t, gamma, crit)
    return solve_sphere_qp(reduce_to_qp(problem), tol=qp_tol)


@dataclass(frozen=True)
class RunResult:
    """Trace of one identification run.

    errors[t] is the squared Frobenius parameter error after absorbing the
    observation at time t; ctrl_seconds[t] the controller time (planning plus
    estimator update) spent at step t; energy[t] the input energy ||u_t||^2.
    """

    theta: np.ndarray
    errors: np.ndarray
    ctrl_seconds: np.ndarray
    energy: np.ndarray
    inputs: np.ndarray


def _greedy_run_python(
    sys: LtiSystem,
    mode: IdentMode,
    horizon: int,
    noises: np.ndarray,
    gamma: float,
    crit: Criterion,
    ridge: float,
    qp_tol: float,
) -> RunResult:
    d, m = sys.d, sys.m
    q = mode.q(d, m)
    theta_star = sys.a if mode.is_known_b else np.hstack([sys.a, sys.b])
    est = EstimatorState.fresh(q, d, ridge)
    x = np.zeros(d)
    g = np.zeros((d, d))
    eye = np.eye(d)
    errors = np.empty(horizon)
    ctrl = np.empty(horizon)
    energy = np.empty(horizon)
    inputs = np.empty((horizon, m))
    sig2 = sys.sigma**2
    for t in range(horizon):
        tic = time.perf_counter()
        a_t, _ = mode.split_theta(est.theta)
        if mode.is_known_b:
            g = eye + a_t @ g @ a_t.T
            m_bar = est.m + np.outer(x, x) + sig2 * g
            z0 = a_t @ x
            lin = mode.known_b
        else:
            m_bar = est.m + sig2 * mode.embed_gramian(g, m)
            z0 = np.concatenate([x, np.zeros(m)])
            lin = np.vstack([np.zeros((d, m)), np.eye(m)])
            g = eye + a_t @ g @ a_t.T
        u = solve_sphere_qp(
            reduce_to_qp(OneStepProblem(m_bar, z0, lin, gamma, crit)), tol=qp_tol
        )
        x_next = sys.a @ x + sys.b @ u + noises[t]
        if mode.is_known_b:
            z, y = x, x_next - mode.known_b @ u
        else:
            z, y = np.concatenate([x, u]), x_next
        est = rls_update(est, z, y)
        ctrl[t] = time.perf_counter() - tic
        errors[t] = squared_error(est.theta, theta_star)
        energy[t] = float(u @ u)
        inputs[t] = u
        x = x_next
    return RunResult(est.theta, errors, ctrl, energy, inputs)


def greedy_identify(
    sys: LtiSystem,
    mode: IdentMode,
    horizon: int,
    seed: int = 0,
    crit: Criterion = Criterion.A,
    gamma: Optional[float] = None,
    ridge: float = 1e-6,
    qp_tol: float = 1e-10,
    backend: str = "auto",
) -> RunResult:
    """Run the full greedy identification loop against the true system.

    Each step plans the one-step optimal input, plays it, observes the next
    state and folds the observation into the recursive estimate. The noise
    Gramian term is maintained by its one-multiply recursion at the running
    estimate, keeping the per-step cost independent of t.
    """
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    if crit not in (Criterion.A, Criterion.D):
        raise ValueError("greedy planning supports the A and D criteria only")
    gamma = sys.gamma if gamma is None else gamma
    if sys.sigma > 0.0:
        noises = sys.sigma * stream_rng(seed, STREAM_TRAJECTORY).standard_normal(
            (horizon, sys.d)
        )
    else:
        noises = np.zeros((horizon, sys.d))
    kernel = _compiled_kernel() if backend in ("auto", "compiled") else None
    if backend == "compiled" and kernel is None:
        raise RuntimeError("compiled kernel requested but not available")
    if kernel is not None:
        return kernel.greedy_run(sys, mode, horizon, noises, gamma, ridge, qp_tol)
    return _greedy_run_python(sys, mode, horizon, noises, gamma, crit, ridge, qp_tol)


def _compiled_kernel():
    from . import _accel

    return _accel.kernel()

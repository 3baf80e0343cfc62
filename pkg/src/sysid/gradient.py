"""Planning whole input sequences by projected gradient descent.

Two objectives are supported over a planning segment: the optimal-design
cost of the expected information matrix, whose exact gradient is obtained by
reverse accumulation through the affine state rollout, and a Monte-Carlo
estimate of the least-squares error itself (the oracle objective), whose
per-sample gradient follows from the pseudo-inverse differential. The module
also hosts the sequential identification loop tying estimation and planning
together under an arbitrary schedule, including the random baseline and the
offline oracle controller.
"""

import logging
import time
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .criteria import Criterion
from .estimation import EstimatorState, rls_update, squared_error
from .greedy import RunResult, greedy_identify
from .system import (
    STREAM_ORACLE_BATCH,
    STREAM_PLAN_INIT,
    STREAM_PLAN_NOISE,
    STREAM_POLICY,
    STREAM_TRAJECTORY,
    IdentMode,
    LtiSystem,
    deterministic_covariates,
    stream_rng,
)

logger = logging.getLogger(__name__)

POLICIES = ("random", "greedy", "gradient", "mse-gradient", "oracle")

# Per-sample ridge applied to rank-deficient Monte-Carlo design matrices and
# the largest tolerated fraction of such samples.
MSE_SAMPLE_RIDGE = 1e-8
MSE_MAX_STABILIZED = 0.10


def _rollout_clip(b: np.ndarray, u: np.ndarray) -> float:
    """Saturation bound for model-based rollouts.

    Planning with an unstable parameter estimate can blow the predicted
    states past float range over a long segment; saturating them keeps the
    predicted information finite and invertible. The bound sits orders of
    magnitude above any sanely excited state, so it only engages on
    genuinely explosive estimates.
    """
    input_scale = float(np.max(np.linalg.norm(np.atleast_2d(u), axis=1), initial=0.0))
    return 1e3 * (1.0 + input_scale) * (1.0 + np.linalg.norm(b, 2))


class PlanningError(RuntimeError):
    """Raised when gradient planning hits a non-finite objective."""

    def __init__(self, iteration: int, message: str):
        self.iteration = iteration
        super().__init__(f"{message} (iteration {iteration})")


@dataclass(frozen=True)
class DesignObjective:
    """Plan against the optimal-design cost of the expected information.

    With batch = 0 the expected information matrix is the closed-form sum of
    deterministic covariates plus noise-Gramian terms. With batch > 0 it is
    estimated from that many sampled noise rollouts drawn once per planning
    call (the closed form is the infinite-batch limit).
    """

    crit: Criterion = Criterion.A
    batch: int = 0
    seed: int = 0


@dataclass(frozen=True)
class OracleMseObjective:
    """Plan against the sampled least-squares error under known dynamics.

    A fixed batch of noise matrices is drawn once per planning call from the
    given seed, making the objective deterministic during descent.
    """

    batch: int = 100
    seed: int = 0


@dataclass(frozen=True)
class Schedule:
    """Replanning breakpoints 0 = t_0 < t_1 < ... < t_n = T."""

    breakpoints: tuple

    def __post_init__(self):
        pts = tuple(int(t) for t in self.breakpoints)
        if len(pts) < 2 or pts[0] != 0:
            raise ValueError("schedule must start at 0 and contain at least one segment")
        if any(b <= a for a, b in zip(pts, pts[1:])):
            raise ValueError(f"schedule must be strictly increasing, got {pts}")
        object.__setattr__(self, "breakpoints", pts)

    @classmethod
    def parse(cls, text: str, horizon: int) -> "Schedule":
        """Parse a comma list; tokens may be integers, "T" or "T/k".

        Breakpoints are clipped to the horizon, sorted and deduplicated, so a
        nominal schedule like "0,10,T/2,T" stays valid at any horizon.
        """
        points = {0, horizon}
        for token in text.split(","):
            token = token.strip()
            if token == "T":
                value = horizon
            elif token.startswith("T/"):
                value = horizon // int(token[2:])
            else:
                value = int(token)
            if value < 0:
                raise ValueError(f"negative breakpoint {value} in {text!r}")
            points.add(min(value, horizon))
        return cls(tuple(sorted(points)))

    @classmethod
    def one_shot(cls, horizon: int) -> "Schedule":
        return cls((0, horizon))

    @property
    def horizon(self) -> int:
        return self.breakpoints[-1]

    def segments(self):
        return list(zip(self.breakpoints[:-1], self.breakpoints[1:]))


def project_power(u: np.ndarray, gamma: float, horizon: Optional[int] = None) -> np.ndarray:
    """Rescale an input sequence to Frobenius norm gamma * sqrt(horizon)."""
    u = np.atleast_2d(np.asarray(u, dtype=float))
    horizon = len(u) if horizon is None else horizon
    target = gamma * np.sqrt(horizon)
    nrm = np.linalg.norm(u)
    if nrm == 0.0:
        logger.warning("projecting a zero input sequence; using canonical direction")
        out = np.zeros_like(u)
        out[:, 0] = gamma
        return out
    return u * (target / nrm)


def _gramian_embed_sum(
    a: np.ndarray,
    mode: IdentMode,
    m: int,
    horizon: int,
    trace_cap: float = np.inf,
) -> np.ndarray:
    """sum_{j=0}^{horizon-1} embed(G_j(A)) in covariate coordinates.

    trace_cap saturates the recursion like the state clip: an unstable
    parameter estimate otherwise blows the predicted noise covariance past
    float range over a long planning segment.
    """
    d = a.shape[0]
    g = np.zeros((d, d))
    total = np.zeros((d, d))
    eye = np.eye(d)
    for _ in range(1, horizon):
        g = eye + a @ g @ a.T
        tr = np.trace(g)
        if tr > trace_cap:
            g = g * (trace_cap / tr)
        total += g
    return mode.embed_gramian(total, m)


def _design_eval(
    crit: Criterion,
    a: np.ndarray,
    b: np.ndarray,
    mode: IdentMode,
    u: np.ndarray,
    x0: np.ndarray,
    m_base: np.ndarray,
    want_grad: bool,
):
    """Value and (optionally) gradient of the segment design cost.

    The information matrix is m_base + sum_j zbar_j zbar_j^T with zbar the
    deterministic covariates rolled out from x0; m_base carries the realized
    past information and the noise-Gramian terms, which do not depend on U.
    """
    horizon, m = u.shape
    d = a.shape[0]
    clip = _rollout_clip(b, u)
    xbar = np.empty((horizon, d))
    x = x0
    for j in range(horizon):
        xbar[j] = x
        x = a @ x + b @ u[j]
        nrm = np.linalg.norm(x)
        if nrm > clip:  # saturation; treated as constant in the adjoint
            x = x * (clip / nrm)
    zbar = xbar if mode.is_known_b else np.hstack([xbar, u])
    info = m_base + zbar.T @ zbar
    w, vecs = np.linalg.eigh((info + info.T) / 2.0)
    if w[0] <= 1e-12 * max(1.0, abs(w[-1])):
        if want_grad:
            raise PlanningError(
                0, "information matrix is singular; plan a warm-up segment first"
            )
        return np.inf, None
    if crit is Criterion.A:
        value = float(np.sum(1.0 / w))
        shaping = vecs @ ((1.0 / w**2)[:, None] * vecs.T)
    else:
        value = float(-np.sum(np.log(w)))
        shaping = vecs @ ((1.0 / w)[:, None] * vecs.T)
    if not want_grad:
        return value, None
    g_z = -2.0 * zbar @ shaping
    if mode.is_known_b:
        g_x, grad = g_z, np.zeros_like(u)
    else:
        g_x, grad = g_z[:, :d], g_z[:, d:].copy()
    p = np.zeros(d)
    for j in range(horizon - 1, 0, -1):
        p = g_x[j] + p @ a
        grad[j - 1] += p @ b
    return value, grad


def _sampled_design_eval(
    crit: Criterion,
    a: np.ndarray,
    b: np.ndarray,
    mode: IdentMode,
    u: np.ndarray,
    noise: np.ndarray,
    x0: np.ndarray,
    m_base: np.ndarray,
    want_grad: bool,
):
    """Design cost on a batch-estimated information matrix.

    The expected information is estimated as m_base plus the average of
    z z^T over stochastic rollouts driven by the fixed noise draws, so the
    noise-Gramian contribution enters through the samples themselves.
    """
    batch, horizon, d = noise.shape
    m = u.shape[1]
    clip = _rollout_clip(b, u)
    x_rows = np.empty((batch, horizon, d))
    x = np.broadcast_to(x0, (batch, d)).copy()
    for j in range(horizon):
        x_rows[:, j] = x
        x = x @ a.T + u[j] @ b.T + noise[:, j]
        nrm = np.linalg.norm(x, axis=1)
        over = nrm > clip
        if np.any(over):  # saturation; treated as constant in the adjoint
            x[over] *= (clip / nrm[over])[:, None]
    if mode.is_known_b:
        z = x_rows
    else:
        z = np.concatenate(
            [x_rows, np.broadcast_to(u, (batch, horizon, m))], axis=2
        )
    info = m_base + np.einsum("bti,btj->ij", z, z) / batch
    w, vecs = np.linalg.eigh((info + info.T) / 2.0)
    if w[0] <= 1e-12 * max(1.0, abs(w[-1])):
        if want_grad:
            raise PlanningError(
                0, "information matrix is singular; plan a warm-up segment first"
            )
        return np.inf, None
    if crit is Criterion.A:
        value = float(np.sum(1.0 / w))
        shaping = vecs @ ((1.0 / w**2)[:, None] * vecs.T)
    else:
        value = float(-np.sum(np.log(w)))
        shaping = vecs @ ((1.0 / w)[:, None] * vecs.T)
    if not want_grad:
        return value, None
    g_z = (-2.0 / batch) * (z @ shaping)
    if mode.is_known_b:
        g_x = g_z
        grad = np.zeros((horizon, m))
    else:
        g_x = g_z[:, :, :d]
        grad = g_z[:, :, d:].sum(axis=0)
    p = np.zeros((batch, d))
    for j in range(horizon - 1, 0, -1):
        p = g_x[:, j] + p @ a
        grad[j - 1] += (p @ b).sum(axis=0)
    return value, grad


def design_cost_gradient(
    theta: np.ndarray,
    u: np.ndarray,
    sigma: float,
    crit: Criterion,
    mode: IdentMode,
    x0: Optional[np.ndarray] = None,
    m_hist: Optional[np.ndarray] = None,
) -> np.ndarray:
    """Exact gradient of the design cost with respect to the input sequence."""
    u = np.atleast_2d(np.asarray(u, dtype=float))
    a, b = mode.split_theta(theta)
    d, m = a.shape[0], u.shape[1]
    q = mode.q(d, m)
    x0 = np.zeros(d) if x0 is None else np.asarray(x0, dtype=float)
    m_base = np.zeros((q, q)) if m_hist is None else np.asarray(m_hist, dtype=float)
    if sigma > 0.0:
        cap = d * _rollout_clip(b, u) ** 2
        m_base = m_base + sigma**2 * _gramian_embed_sum(a, mode, m, len(u), cap)
    _, grad = _design_eval(crit, a, b, mode, u, x0, m_base, want_grad=True)
    return grad


def _oracle_eval(
    a: np.ndarray,
    b: np.ndarray,
    mode: IdentMode,
    u: np.ndarray,
    noise: np.ndarray,
    x0: np.ndarray,
    z_hist: Optional[np.ndarray],
    want_grad: bool,
):
    """Sample-average squared estimation error and its gradient in U.

    noise has shape (batch, t0 + horizon, d): the first t0 rows stand in for
    the unknown realized noise behind the fixed history covariates z_hist,
    the rest drive the simulated rollout from x0.
    """
    batch, total, d = noise.shape
    horizon, m = u.shape
    t0 = total - horizon
    q = mode.q(d, m)

    clip = _rollout_clip(b, u)
    x_rows = np.empty((batch, horizon, d))
    x = np.broadcast_to(x0, (batch, d)).copy()
    for j in range(horizon):
        x_rows[:, j] = x
        x = x @ a.T + u[j] @ b.T + noise[:, t0 + j]
        nrm = np.linalg.norm(x, axis=1)
        over = nrm > clip
        if np.any(over):  # saturation; treated as constant in the adjoint
            x[over] *= (clip / nrm[over])[:, None]
    if mode.is_known_b:
        z_fut = x_rows
    else:
        z_fut = np.concatenate(
            [x_rows, np.broadcast_to(u, (batch, horizon, m))], axis=2
        )
    if t0 > 0:
        z = np.concatenate([np.broadcast_to(z_hist, (batch, t0, q)).copy(), z_fut], axis=1)
    else:
        z = z_fut

    ztz = np.einsum("bti,btj->bij", z, z)
    lam = np.linalg.eigvalsh(ztz)
    deficient = lam[:, 0] <= 1e-12 * np.maximum(1.0, lam[:, -1])
    n_stab = int(np.sum(deficient))
    if n_stab > MSE_MAX_STABILIZED * batch:
        raise PlanningError(
            0, f"{n_stab}/{batch} Monte-Carlo samples have rank-deficient designs"
        )
    if n_stab:
        ztz[deficient] += MSE_SAMPLE_RIDGE * np.eye(q)
    c = np.linalg.inv(ztz)
    ztw = np.einsum("bti,btd->bid", z, noise)
    bm = c @ ztw
    value = float(np.mean(np.sum(bm * bm, axis=(1, 2))))
    if not want_grad:
        return value, None

    zc = z @ c
    bbt = bm @ np.transpose(bm, (0, 2, 1))
    resid = noise - z @ bm
    g_z = -2.0 * (zc @ bbt) + 2.0 * (resid @ np.transpose(bm, (0, 2, 1)) @ c)
    if mode.is_known_b:
        g_x = g_z[:, t0:, :]
        grad = np.zeros((batch, horizon, m))
    else:
        g_x = g_z[:, t0:, :d]
        grad = g_z[:, t0:, d:].copy()
    p = np.zeros((batch, d))
    for j in range(horizon - 1, 0, -1):
        p = g_x[:, j] + p @ a
        grad[:, j - 1] += p @ b
    return value, grad.mean(axis=0)


def _oracle_setup(theta, u, sigma, batch, seed, mode, x0, z_hist, noise):
    if batch < 1:
        raise ValueError("batch size must be >= 1")
    u = np.atleast_2d(np.asarray(u, dtype=float))
    a, b = mode.split_theta(theta)
    d = a.shape[0]
    t0 = 0 if z_hist is None else len(z_hist)
    if noise is None:
        noise = sigma * stream_rng(seed, STREAM_ORACLE_BATCH).standard_normal(
            (batch, t0 + len(u), d)
        )
    x0 = np.zeros(d) if x0 is None else np.asarray(x0, dtype=float)
    return a, b, u, noise, x0


def oracle_mse_value(
    theta: np.ndarray,
    u: np.ndarray,
    sigma: float,
    batch: int,
    seed: int,
    mode: IdentMode,
    x0: Optional[np.ndarray] = None,
    z_hist: Optional[np.ndarray] = None,
    noise: Optional[np.ndarray] = None,
) -> float:
    """Sample-average squared estimation error of a planned sequence."""
    a, b, u, noise, x0 = _oracle_setup(theta, u, sigma, batch, seed, mode, x0, z_hist, noise)
    value, _ = _oracle_eval(a, b, mode, u, noise, x0, z_hist, want_grad=False)
    return value


def oracle_mse_gradient(
    theta: np.ndarray,
    u: np.ndarray,
    sigma: float,
    batch: int,
    seed: int,
    mode: IdentMode,
    x0: Optional[np.ndarray] = None,
    z_hist: Optional[np.ndarray] = None,
    noise: Optional[np.ndarray] = None,
) -> np.ndarray:
    """Monte-Carlo gradient of the mean squared estimation error.

    theta plays the role of the true parameters generating the sampled
    rollouts; the batch of noise matrices is drawn once from the seed.
    """
    a, b, u, noise, x0 = _oracle_setup(theta, u, sigma, batch, seed, mode, x0, z_hist, noise)
    _, grad = _oracle_eval(a, b, mode, u, noise, x0, z_hist, want_grad=True)
    return grad


def plan_gradient(
    objective,
    theta: np.ndarray,
    horizon: int,
    gamma: float,
    mode: IdentMode,
    seed: int = 0,
    n_grad: int = 120,
    eta: Optional[float] = None,
    x0: Optional[np.ndarray] = None,
    m_hist: Optional[np.ndarray] = None,
    z_hist: Optional[np.ndarray] = None,
    sigma: float = 0.0,
    stop_tol: float = 0.0,
    max_backtracks: int = 20,
    u_init: Optional[np.ndarray] = None,
) -> np.ndarray:
    """Projected gradient descent over an input segment.

    Starts from a projected Gaussian draw keyed by the seed (or the given
    warm start), iterates U <- project(U - eta * grad) with Armijo
    backtracking (halving, so the objective never increases), and returns
    the final sequence. The default step is
    0.1 * gamma * sqrt(horizon) / ||grad(U_0)||. A positive stop_tol ends
    descent once the relative improvement stalls.
    """
    if n_grad < 1:
        raise ValueError("n_grad must be >= 1")
    a, b = mode.split_theta(theta)
    d = a.shape[0]
    m = b.shape[1]
    q = mode.q(d, m)
    x0 = np.zeros(d) if x0 is None else np.asarray(x0, dtype=float)

    if isinstance(objective, DesignObjective) and objective.batch > 0:
        m_base = np.zeros((q, q)) if m_hist is None else np.asarray(m_hist, dtype=float)
        plan_noise = sigma * stream_rng(
            objective.seed, STREAM_PLAN_NOISE
        ).standard_normal((objective.batch, horizon, d))

        def evaluate(u, want_grad):
            return _sampled_design_eval(
                objective.crit, a, b, mode, u, plan_noise, x0, m_base, want_grad
            )

    elif isinstance(objective, DesignObjective):
        m_base = np.zeros((q, q)) if m_hist is None else np.asarray(m_hist, dtype=float)
        if sigma > 0.0:
            gramian_cap = d * (1e3 * (1.0 + gamma) * (1.0 + np.linalg.norm(b, 2))) ** 2
            m_base = m_base + sigma**2 * _gramian_embed_sum(a, mode, m, horizon, gramian_cap)

        def evaluate(u, want_grad):
            return _design_eval(objective.crit, a, b, mode, u, x0, m_base, want_grad)

    elif isinstance(objective, OracleMseObjective):
        t0 = 0 if z_hist is None else len(z_hist)
        noise = sigma * stream_rng(objective.seed, STREAM_ORACLE_BATCH).standard_normal(
            (objective.batch, t0 + horizon, d)
        )

        def evaluate(u, want_grad):
            return _oracle_eval(a, b, mode, u, noise, x0, z_hist, want_grad)

    else:
        raise TypeError(f"unknown objective {objective!r}")

    if u_init is None:
        u = project_power(
            stream_rng(seed, STREAM_PLAN_INIT).standard_normal((horizon, m)), gamma
        )
    else:
        u = project_power(np.asarray(u_init, dtype=float), gamma)
    value, grad = evaluate(u, want_grad=True)
    if not np.isfinite(value):
        raise PlanningError(0, f"objective is non-finite at the initial sequence ({value})")
    step0 = eta
    stalled = 0
    for it in range(n_grad):
        gnorm = np.linalg.norm(grad)
        if gnorm == 0.0:
            break
        if step0 is None:
            step0 = 0.1 * gamma * np.sqrt(horizon) / gnorm
        step = step0
        accepted = False
        cand_grad = None
        for attempt in range(max_backtracks + 1):
            candidate = project_power(u - step * grad, gamma)
            # the first candidate is almost always accepted: evaluate its
            # gradient in the same pass to avoid a redundant rollout
            fused = attempt == 0 and it < n_grad - 1
            cand_value, cand_grad = evaluate(candidate, want_grad=fused)
            if np.isnan(cand_value):
                raise PlanningError(it, "objective returned NaN during backtracking")
            if cand_value <= value:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            break
        improvement = value - cand_value
        u = candidate
        value = cand_value
        if stop_tol > 0.0:
            stalled = stalled + 1 if improvement <= stop_tol * abs(value) else 0
            if stalled >= 3:
                break
        if it < n_grad - 1 and cand_grad is None:
            _, cand_grad = evaluate(u, want_grad=True)
        grad = cand_grad
    return u


def _policy_theta_star(sys: LtiSystem, mode: IdentMode) -> np.ndarray:
    return sys.a if mode.is_known_b else np.hstack([sys.a, sys.b])


def _oracle_plan(
    theta_star: np.ndarray,
    horizon: int,
    gamma: float,
    mode: IdentMode,
    sigma: float,
    seed: int,
    n_grad: int,
    batch: int,
    eta: Optional[float],
    stop_tol: float,
    crit: Criterion,
) -> np.ndarray:
    """Offline oracle plan for the whole horizon at the true parameters.

    Stage one optimizes the design cost block-coordinately (each block planned
    against the expected information of the previous ones), which converges
    far better than one monolithic descent on long horizons. Stage two runs
    the Monte-Carlo error descent from that warm start and keeps whichever
    iterate wins on an independent validation batch, guarding against
    sample-average overfitting.
    """
    a, b = mode.split_theta(theta_star)
    d, m = a.shape[0], b.shape[1]
    q = mode.q(d, m)
    m_hist = np.zeros((q, q))
    x0 = np.zeros(d)
    blocks = []
    for t0, t1 in Schedule.parse("0,10,T/2,T", horizon).segments():
        u_block = plan_gradient(
            DesignObjective(crit), theta_star, t1 - t0, gamma, mode,
            seed=seed + 7919 * t0, n_grad=n_grad, eta=eta,
            x0=x0, m_hist=m_hist, sigma=sigma, stop_tol=max(stop_tol, 1e-7),
        )
        blocks.append(u_block)
        zbar, x0 = deterministic_covariates(theta_star, u_block, mode, x0=x0)
        m_hist = m_hist + zbar.T @ zbar
        if sigma > 0.0:
            cap = d * (1e3 * (1.0 + gamma) * (1.0 + np.linalg.norm(b, 2))) ** 2
            m_hist = m_hist + sigma**2 * _gramian_embed_sum(a, mode, m, t1 - t0, cap)
    warm = np.vstack(blocks)
    if sigma == 0.0:
        return warm
    polished = plan_gradient(
        OracleMseObjective(batch=batch, seed=seed + 104729),
        theta_star, horizon, gamma, mode,
        seed=seed, n_grad=n_grad, eta=eta, sigma=sigma,
        stop_tol=max(stop_tol, 1e-5), u_init=warm,
    )
    val_noise = sigma * stream_rng(seed + 224737, STREAM_ORACLE_BATCH).standard_normal(
        (batch, horizon, d)
    )
    candidates = [warm, polished]
    scores = [
        _oracle_eval(a, b, mode, u, val_noise, np.zeros(d), None, want_grad=False)[0]
        for u in candidates
    ]
    return candidates[int(np.argmin(scores))]


def sequential_identify(
    sys: LtiSystem,
    mode: IdentMode,
    policy: str,
    schedule: Schedule,
    seed: int = 0,
    crit: Criterion = Criterion.A,
    gamma: Optional[float] = None,
    ridge: float = 1e-6,
    n_grad: int = 120,
    batch: int = 100,
    eta: Optional[float] = None,
    qp_tol: float = 1e-10,
    stop_tol: float = 0.0,
    backend: str = "auto",
) -> RunResult:
    """Alternate estimation and planning per the schedule and a policy.

    Policies: "random" plays N(0, gamma^2/m) inputs each step; "greedy"
    delegates to the one-step planner; "gradient" replans the design cost per
    schedule segment; "mse-gradient" replans the Monte-Carlo error objective
    at the current estimate; "oracle" plans the whole horizon offline at the
    true parameters.
    """
    if policy not in POLICIES:
        raise ValueError(f"unknown policy {policy!r}, expected one of {POLICIES}")
    gamma = sys.gamma if gamma is None else gamma
    horizon = schedule.horizon
    if policy == "greedy":
        return greedy_identify(
            sys, mode, horizon, seed=seed, crit=crit, gamma=gamma,
            ridge=ridge, qp_tol=qp_tol, backend=backend,
        )

    d, m = sys.d, sys.m
    q = mode.q(d, m)
    theta_star = _policy_theta_star(sys, mode)
    if sys.sigma > 0.0:
        noises = sys.sigma * stream_rng(seed, STREAM_TRAJECTORY).standard_normal((horizon, d))
    else:
        noises = np.zeros((horizon, d))

    est = EstimatorState.fresh(q, d, ridge)
    x = np.zeros(d)
    states = np.zeros((horizon + 1, d))
    inputs = np.empty((horizon, m))
    errors = np.empty(horizon)
    ctrl = np.empty(horizon)
    energy = np.empty(horizon)

    if policy == "random":
        draws = (gamma / np.sqrt(m)) * stream_rng(seed, STREAM_POLICY).standard_normal(
            (horizon, m)
        )
        kernel = None
        if backend in ("auto", "compiled"):
            from . import _accel

            kernel = _accel.kernel()
            if backend == "compiled" and kernel is None:
                raise RuntimeError("compiled kernel requested but not available")
        if kernel is not None:
            return kernel.random_run(sys, mode, horizon, noises, draws, ridge)
        for t in range(horizon):
            tic = time.perf_counter()
            u = draws[t]
            x_next = sys.a @ x + sys.b @ u + noises[t]
            z, y = mode.covariates_pair(x, u, x_next)
            est = rls_update(est, z, y)
            ctrl[t] = time.perf_counter() - tic
            errors[t] = squared_error(est.theta, theta_star)
            energy[t] = float(u @ u)
            inputs[t] = u
            states[t + 1] = x_next
            x = x_next
        return RunResult(est.theta, errors, ctrl, energy, inputs)

    if policy == "oracle":
        segs = [(0, horizon)]
    else:
        segs = schedule.segments()

    for seg_index, (t0, t1) in enumerate(segs):
        seg_len = t1 - t0
        tic = time.perf_counter()
        if policy == "gradient":
            u_seg = plan_gradient(
                DesignObjective(crit, batch=batch, seed=seed + 104729 * seg_index),
                est.theta, seg_len, gamma, mode,
                seed=seed + 7919 * seg_index, n_grad=n_grad, eta=eta,
                x0=x, m_hist=est.m, sigma=sys.sigma, stop_tol=stop_tol,
            )
        elif policy == "oracle":
            u_seg = _oracle_plan(
                theta_star, seg_len, gamma, mode, sys.sigma,
                seed=seed, n_grad=n_grad, batch=batch, eta=eta,
                stop_tol=stop_tol, crit=crit,
            )
        else:
            z_hist = mode.covariates(states[: t0 + 1], inputs[:t0]) if t0 > 0 else None
            # warm-start the error-objective descent at the design optimum:
            # a random start leaves it short of the design solution within
            # the iteration budget
            warm = plan_gradient(
                DesignObjective(crit), est.theta, seg_len, gamma, mode,
                seed=seed + 7919 * seg_index, n_grad=n_grad, eta=eta,
                x0=x, m_hist=est.m, sigma=sys.sigma,
                stop_tol=max(stop_tol, 1e-7),
            )
            u_seg = plan_gradient(
                OracleMseObjective(batch=batch, seed=seed + 104729 * seg_index),
                est.theta, seg_len, gamma, mode,
                seed=seed + 7919 * seg_index, n_grad=n_grad, eta=eta,
                x0=x, z_hist=z_hist, sigma=sys.sigma, stop_tol=stop_tol,
                u_init=warm,
            )
        plan_time = time.perf_counter() - tic
        for j in range(seg_len):
            t = t0 + j
            tic = time.perf_counter()
            u = u_seg[j]
            x_next = sys.a @ x + sys.b @ u + noises[t]
            z, y = mode.covariates_pair(x, u, x_next)
            est = rls_update(est, z, y)
            ctrl[t] = time.perf_counter() - tic + (plan_time if j == 0 else 0.0)
            errors[t] = squared_error(est.theta, theta_star)
            energy[t] = float(u @ u)
            inputs[t] = u
            states[t + 1] = x_next
            x = x_next
    return RunResult(est.theta, errors, ctrl, energy, inputs)

"""Least-squares estimation of the system parameters, batch and recursive."""

from dataclasses import dataclass, replace

import numpy as np
import scipy.linalg

from .linalg import RankOneUpdate, sm_inverse
from .system import IdentMode, Trajectory

# Rank-one inverse updates drift; rebuild the inverse and the estimate from
# a fresh factorization this often, and immediately after any step whose
# Sherman-Morrison denominator signals heavy cancellation.
REFRESH_PERIOD = 64
REFRESH_DENOMINATOR = 1e4


class SingularMomentError(np.linalg.LinAlgError):
    """Raised when the unridged design matrix is rank deficient."""

    def __init__(self, rank: int, needed: int):
        self.rank = rank
        self.needed = needed
        super().__init__(f"design matrix has rank {rank}, need {needed}")


@dataclass(frozen=True)
class EstimatorState:
    """Recursive least-squares state.

    m is the ridge-floored moment matrix ridge*I + sum z_s z_s^T, m_inv its
    maintained inverse, theta the current d x q estimate (rows are output
    coordinates). Values are immutable; updates return new states.
    """

    m: np.ndarray
    m_inv: np.ndarray
    theta: np.ndarray
    count: int
    ridge: float
    zy_sum: np.ndarray = None
    since_refresh: int = 0

    @classmethod
    def fresh(cls, q: int, d: int, ridge: float = 1e-6) -> "EstimatorState":
        if ridge <= 0.0:
            raise ValueError("recursive estimation needs a positive ridge floor")
        return cls(
            m=ridge * np.eye(q),
            m_inv=np.eye(q) / ridge,
            theta=np.zeros((d, q)),
            count=0,
            ridge=ridge,
            zy_sum=np.zeros((q, d)),
        )


def _spd_inverse(m: np.ndarray) -> np.ndarray:
    c, low = scipy.linalg.cho_factor((m + m.T) / 2.0)
    return scipy.linalg.cho_solve((c, low), np.eye(m.shape[0]))


def rls_update(est: EstimatorState, z: np.ndarray, y: np.ndarray) -> EstimatorState:
    """Absorb one observation pair (z, y) into the estimate.

    m' = m + z z^T and theta'^T = m'^-1 (m theta^T + z y^T), evaluated in the
    innovation form theta' = theta + (y - theta z)(m'^-1 z)^T with the inverse
    maintained by Sherman-Morrison. The inverse and estimate are rebuilt from
    the exact accumulated sums on a fixed period and right after any step
    whose denominator 1 + z^T m^-1 z signals catastrophic cancellation (a new
    direction entering against the bare ridge floor).
    """
    z = np.asarray(z, dtype=float)
    y = np.asarray(y, dtype=float)
    m_new = est.m + np.outer(z, z)
    zy_new = est.zy_sum + np.outer(z, y)
    denom = 1.0 + float(z @ est.m_inv @ z)
    if est.since_refresh + 1 >= REFRESH_PERIOD or denom >= REFRESH_DENOMINATOR:
        m_inv = _spd_inverse(m_new)
        theta = (m_inv @ zy_new).T
        since = 0
    else:
        m_inv = sm_inverse(est.m_inv, RankOneUpdate(z, z))
        theta = est.theta + np.outer(y - est.theta @ z, m_inv @ z)
        since = est.since_refresh + 1
    return replace(
        est,
        m=m_new,
        m_inv=m_inv,
        theta=theta,
        count=est.count + 1,
        zy_sum=zy_new,
        since_refresh=since,
    )


def ols_fit(traj: Trajectory, mode: IdentMode, ridge: float = 0.0) -> np.ndarray:
    """Batch least-squares estimate ((Z^T Z + ridge I)^-1 Z^T Y)^T."""
    if traj.horizon < 1:
        raise ValueError("trajectory has no observations")
    z = mode.covariates(traj.states, traj.inputs)
    y = mode.targets(traj.states, traj.inputs)
    q = z.shape[1]
    if ridge < 0.0:
        raise ValueError("ridge must be nonnegative")
    if ridge == 0.0:
        sv = np.linalg.svd(z, compute_uv=False)
        rank = int(np.sum(sv > max(z.shape) * np.finfo(float).eps * sv[0])) if sv[0] > 0 else 0
        if rank < q:
            raise SingularMomentError(rank, q)
    gram = z.T @ z + ridge * np.eye(q)
    sol = scipy.linalg.solve(gram, z.T @ y, assume_a="pos")
    return sol.T


def squared_error(theta_hat: np.ndarray, theta_star: np.ndarray) -> float:
    """Squared Frobenius distance between parameter matrices."""
    theta_hat = np.asarray(theta_hat, dtype=float)
    theta_star = np.asarray(theta_star, dtype=float)
    if theta_hat.shape != theta_star.shape:
        raise ValueError(f"shape mismatch: {theta_hat.shape} vs {theta_star.shape}")
    diff = theta_hat - theta_star
    return float(np.sum(diff * diff))

"""Controlled discrete-time LTI systems and their information structure.

The plant is x_{t+1} = A x_t + B u_t + w_t with x_0 = 0, isotropic Gaussian
noise of known standard deviation, and an average input-power budget. This
module holds the ground-truth system, simulated trajectories, the regression
mode (estimating (A, B) jointly or A with B known), and the deterministic
quantities every planner consumes: the mean/fluctuation state split, noise
Gramians, moment matrices and the expected information matrix.
"""

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

# Stream ids for counter-based noise generation; each (seed, stream) pair is
# an independent Philox stream so replays are order-independent.
STREAM_TRAJECTORY = 1
STREAM_SYSTEM_DRAW = 2
STREAM_POLICY = 3
STREAM_PLAN_INIT = 4
STREAM_ORACLE_BATCH = 5
STREAM_PLAN_NOISE = 6

CONTROLLABILITY_RTOL = 1e-10


class ControllabilityError(ValueError):
    """Raised when (A, B) fails the controllability rank test."""


def stream_rng(seed: int, stream: int) -> np.random.Generator:
    """Counter-based generator keyed by (seed, stream)."""
    key = np.array([np.uint64(seed & 0xFFFFFFFFFFFFFFFF), np.uint64(stream)], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _frozen(a: np.ndarray) -> np.ndarray:
    out = np.array(a, dtype=float)
    out.setflags(write=False)
    return out


def controllability_matrix(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Block matrix (B, AB, ..., A^{d-1} B)."""
    d = a.shape[0]
    blocks = [b]
    for _ in range(d - 1):
        blocks.append(a @ blocks[-1])
    return np.hstack(blocks)


@dataclass(frozen=True)
class LtiSystem:
    """Ground-truth plant: matrices (A, B), noise level and power budget.

    Attributes
    ----------
    a : (d, d) state matrix
    b : (d, m) input matrix
    sigma : noise standard deviation, >= 0
    gamma : input power budget (average per-step input norm), > 0
    """

    a: np.ndarray
    b: np.ndarray
    sigma: float
    gamma: float

    def __post_init__(self):
        a = _frozen(self.a)
        b = _frozen(np.atleast_2d(self.b))
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError(f"A must be square, got {a.shape}")
        if b.ndim != 2 or b.shape[0] != a.shape[0]:
            raise ValueError(f"B must be {a.shape[0]} x m, got {b.shape}")
        if a.shape[0] < 1 or b.shape[1] < 1:
            raise ValueError("state and input dimensions must be >= 1")
        if not (self.sigma >= 0.0):
            raise ValueError(f"sigma must be nonnegative, got {self.sigma}")
        if not (self.gamma > 0.0):
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        sv = np.linalg.svd(controllability_matrix(a, b), compute_uv=False)
        rank = int(np.sum(sv > CONTROLLABILITY_RTOL * sv[0])) if sv[0] > 0 else 0
        if rank < a.shape[0]:
            raise ControllabilityError(
                f"(A, B) is not controllable: block matrix rank {rank} < {a.shape[0]}"
            )
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def d(self) -> int:
        return self.a.shape[0]

    @property
    def m(self) -> int:
        return self.b.shape[1]


@dataclass(frozen=True)
class Trajectory:
    """States x_0..x_T, inputs u_0..u_{T-1}, optional noise record w_0..w_{T-1}."""

    states: np.ndarray
    inputs: np.ndarray
    noises: Optional[np.ndarray] = None

    def __post_init__(self):
        states = _frozen(np.atleast_2d(self.states))
        inputs = _frozen(np.atleast_2d(self.inputs))
        if len(states) != len(inputs) + 1:
            raise ValueError(
                f"need len(states) = len(inputs) + 1, got {len(states)} and {len(inputs)}"
            )
        if np.any(states[0] != 0.0):
            raise ValueError("trajectories start at x_0 = 0")
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "inputs", inputs)
        if self.noises is not None:
            noises = _frozen(np.atleast_2d(self.noises))
            if noises.shape != (len(inputs), states.shape[1]):
                raise ValueError(f"noise record has shape {noises.shape}")
            object.__setattr__(self, "noises", noises)

    @property
    def horizon(self) -> int:
        return len(self.inputs)


class IdentMode:
    """Regression target selector.

    FullTheta estimates theta = (A B) from covariates z_t = (x_t; u_t) and
    targets y_t = x_{t+1}. KnownB estimates theta = A from z_t = x_t and
    y_t = x_{t+1} - B u_t, carrying the known input matrix.
    """

    __slots__ = ("known_b",)

    def __init__(self, known_b: Optional[np.ndarray] = None):
        self.known_b = None if known_b is None else _frozen(known_b)

    @classmethod
    def full(cls) -> "IdentMode":
        return cls(None)

    @classmethod
    def with_known_b(cls, b: np.ndarray) -> "IdentMode":
        return cls(np.asarray(b, dtype=float))

    @property
    def is_known_b(self) -> bool:
        return self.known_b is not None

    def q(self, d: int, m: int) -> int:
        return d if self.is_known_b else d + m

    def split_theta(self, theta: np.ndarray):
        """(A, B) encoded by a parameter matrix under this mode."""
        theta = np.asarray(theta, dtype=float)
        if self.is_known_b:
            return theta, self.known_b
        d = theta.shape[0]
        return theta[:, :d], theta[:, d:]

    def covariates(self, states: np.ndarray, inputs: np.ndarray) -> np.ndarray:
        """Rows z_0..z_{T-1} of the regression design matrix."""
        if self.is_known_b:
            return np.asarray(states)[:-1]
        return np.hstack([np.asarray(states)[:-1], np.asarray(inputs)])

    def targets(self, states: np.ndarray, inputs: np.ndarray) -> np.ndarray:
        """Rows y_0..y_{T-1} of the regression targets."""
        if self.is_known_b:
            return np.asarray(states)[1:] - np.asarray(inputs) @ self.known_b.T
        return np.asarray(states)[1:]

    def covariates_pair(self, x: np.ndarray, u: np.ndarray, x_next: np.ndarray):
        """Single observation pair (z_t, y_t) from one transition."""
        if self.is_known_b:
            return x, x_next - self.known_b @ u
        return np.concatenate([x, u]), x_next

    def embed_gramian(self, g: np.ndarray, m: int) -> np.ndarray:
        """Noise-covariance block of E[z z^T] in covariate coordinates."""
        if self.is_known_b:
            return g
        d = g.shape[0]
        out = np.zeros((d + m, d + m))
        out[:d, :d] = g
        return out

    def __repr__(self):
        return "IdentMode.known_b" if self.is_known_b else "IdentMode.full"


def step(sys: LtiSystem, x: np.ndarray, u: np.ndarray, w: np.ndarray) -> np.ndarray:
    """One transition A x + B u + w."""
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    w = np.asarray(w, dtype=float)
    if x.shape != (sys.d,) or u.shape != (sys.m,) or w.shape != (sys.d,):
        raise ValueError(
            f"dimension mismatch: x {x.shape}, u {u.shape}, w {w.shape} "
            f"for d={sys.d}, m={sys.m}"
        )
    return sys.a @ x + sys.b @ u + w


def simulate(sys: LtiSystem, inputs: Sequence[np.ndarray], seed: int) -> Trajectory:
    """Run the plant under the given inputs with seeded Gaussian noise.

    The noise block is drawn in one shot from a Philox stream keyed by
    (seed, STREAM_TRAJECTORY), so the same seed and inputs reproduce the
    trajectory bit for bit.
    """
    u = np.atleast_2d(np.asarray(inputs, dtype=float))
    if not np.all(np.isfinite(u)):
        raise ValueError("inputs must be finite")
    horizon = len(u)
    if sys.sigma > 0.0:
        noises = sys.sigma * stream_rng(seed, STREAM_TRAJECTORY).standard_normal((horizon, sys.d))
    else:
        noises = np.zeros((horizon, sys.d))
    states = np.zeros((horizon + 1, sys.d))
    x = states[0]
    for t in range(horizon):
        x = sys.a @ x + sys.b @ u[t] + noises[t]
        states[t + 1] = x
    return Trajectory(states=states, inputs=u, noises=noises)


def mean_fluctuation_decomposition(sys: LtiSystem, traj: Trajectory):
    """Split states into the input-driven mean and the noise-driven part.

    Returns (xbar, xtilde), each of shape (T+1, d), with
    xbar_t = sum_{s<t} A^{t-1-s} B u_s and xtilde_t = sum_{s<t} A^{t-1-s} w_s,
    computed by the forward recursions rather than explicit matrix powers.
    """
    if traj.noises is None:
        raise ValueError("trajectory has no noise record")
    horizon = traj.horizon
    xbar = np.zeros((horizon + 1, sys.d))
    xtilde = np.zeros((horizon + 1, sys.d))
    for t in range(horizon):
        xbar[t + 1] = sys.a @ xbar[t] + sys.b @ traj.inputs[t]
        xtilde[t + 1] = sys.a @ xtilde[t] + traj.noises[t]
    return xbar, xtilde


def gramian(a: np.ndarray, t: int) -> np.ndarray:
    """Noise Gramian sum_{s=0}^{t-1} A^s (A^s)^T via G_{s+1} = I + A G_s A^T."""
    a = np.asarray(a, dtype=float)
    if t < 0:
        raise ValueError("t must be nonnegative")
    d = a.shape[0]
    g = np.zeros((d, d))
    eye = np.eye(d)
    for _ in range(t):
        g = eye + a @ g @ a.T
    return g


def moment_matrix(traj: Trajectory, mode: IdentMode, t: int) -> np.ndarray:
    """Running covariate information M_t = sum_{s<=t} z_s z_s^T."""
    if not (0 <= t < traj.horizon):
        raise ValueError(f"t must be in [0, {traj.horizon}), got {t}")
    z = mode.covariates(traj.states, traj.inputs)[: t + 1]
    return z.T @ z


def deterministic_covariates(
    theta: np.ndarray,
    inputs: np.ndarray,
    mode: IdentMode,
    x0: Optional[np.ndarray] = None,
):
    """Mean covariate rows zbar_0..zbar_{T-1} under the estimate theta.

    Returns (zbar, xbar_final) where xbar_final is the mean state after the
    last input, useful for chaining planning segments.
    """
    a, b = mode.split_theta(theta)
    u = np.atleast_2d(np.asarray(inputs, dtype=float))
    d = a.shape[0]
    x = np.zeros(d) if x0 is None else np.asarray(x0, dtype=float)
    xbar = np.empty((len(u), d))
    for t in range(len(u)):
        xbar[t] = x
        x = a @ x + b @ u[t]
    if mode.is_known_b:
        return xbar, x
    return np.hstack([xbar, u]), x


def expected_gramian(
    theta: np.ndarray,
    inputs: np.ndarray,
    sigma: float,
    mode: IdentMode,
) -> np.ndarray:
    """Expected per-step information Gamma_T of a planned input sequence.

    Gamma_T = (1/T) sum_t (zbar_t zbar_t^T + sigma^2 E_t) where zbar is the
    deterministic covariate under theta and E_t embeds the noise Gramian
    G_t(A) into covariate coordinates (state block only in FullTheta mode).
    """
    u = np.atleast_2d(np.asarray(inputs, dtype=float))
    horizon = len(u)
    if horizon < 1:
        raise ValueError("need at least one input")
    a, _ = mode.split_theta(theta)
    m = u.shape[1]
    zbar, _ = deterministic_covariates(theta, u, mode)
    total = zbar.T @ zbar
    if sigma > 0.0:
        d = a.shape[0]
        g = np.zeros((d, d))
        g_sum = np.zeros((d, d))
        eye = np.eye(d)
        for _ in range(1, horizon):
            g = eye + a @ g @ a.T
            g_sum += g
        total += sigma**2 * mode.embed_gramian(g_sum, m)
    return total / horizon


def fisher_information(
    theta: np.ndarray,
    inputs: np.ndarray,
    sigma: float,
    mode: IdentMode,
) -> np.ndarray:
    """Fisher information (T/sigma^2) blockdiag(Gamma_T, ..., d blocks)."""
    if sigma <= 0.0:
        raise ValueError("Fisher information needs sigma > 0")
    a, _ = mode.split_theta(theta)
    gam = expected_gramian(theta, inputs, sigma, mode)
    horizon = len(np.atleast_2d(inputs))
    return (horizon / sigma**2) * np.kron(np.eye(a.shape[0]), gam)

"""Alphabetical optimal-design criteria and the design cost functional."""

import enum

import numpy as np

from .system import IdentMode, expected_gramian

SYMMETRY_TOL = 1e-10


class Criterion(enum.Enum):
    """Information criterion on the eigenvalues of a PSD matrix.

    A: -sum(1/lambda_i), D: sum(log lambda_i), E: min lambda_i. Larger is
    more informative; A and D collapse to -inf on singular matrices, E to 0.
    """

    A = "A"
    D = "D"
    E = "E"

    @classmethod
    def from_string(cls, text: str) -> "Criterion":
        try:
            return cls(text.strip().upper())
        except ValueError:
            raise ValueError(f"unknown criterion {text!r}, expected A, D or E") from None


def criterion_value(crit: Criterion, m: np.ndarray) -> float:
    """Evaluate a criterion on a symmetric PSD matrix."""
    m = np.asarray(m, dtype=float)
    asym = np.max(np.abs(m - m.T)) if m.size else 0.0
    if asym > SYMMETRY_TOL * (1.0 + np.max(np.abs(m))):
        raise ValueError(f"matrix is not symmetric (max asymmetry {asym:.3e})")
    w = np.linalg.eigvalsh((m + m.T) / 2.0)
    singular = w[0] <= 1e-12 * max(1.0, abs(w[-1]))
    if crit is Criterion.A:
        return float("-inf") if singular else float(-np.sum(1.0 / w))
    if crit is Criterion.D:
        return float("-inf") if singular else float(np.sum(np.log(w)))
    return float(max(w[0], 0.0))


def design_cost(
    crit: Criterion,
    theta: np.ndarray,
    inputs: np.ndarray,
    sigma: float,
    t: int,
    mode: IdentMode,
) -> float:
    """Design cost -Phi[sum_{s<t}(zbar_s zbar_s^T + sigma^2 G_s)]; lower is better."""
    u = np.atleast_2d(np.asarray(inputs, dtype=float))
    if len(u) < t:
        raise ValueError(f"need at least {t} inputs, got {len(u)}")
    info = t * expected_gramian(theta, u[:t], sigma, mode)
    return -criterion_value(crit, info)

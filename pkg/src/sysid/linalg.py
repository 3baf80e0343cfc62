"""Rank-one update identities and the pseudo-inverse differential.

These are the small exact identities the planners lean on: determinant and
inverse updates under M -> M + x y^T, the induced trace update, and the
derivative of the Moore-Penrose pseudo-inverse on the full-column-rank
domain.
"""

from typing import NamedTuple

import numpy as np


class RankOneUpdate(NamedTuple):
    """Vectors (x, y) of a rank-one modification M + x y^T."""

    x: np.ndarray
    y: np.ndarray


class NearSingularUpdateError(ValueError):
    """Raised when 1 + y^T M^-1 x is too close to zero to update through."""

    def __init__(self, denominator: float, tolerance: float):
        self.denominator = denominator
        self.tolerance = tolerance
        super().__init__(
            f"rank-one update denominator {denominator:.3e} is within "
            f"{tolerance:.3e} of zero; updated matrix is numerically singular"
        )


def _denominator_tolerance(minv: np.ndarray, upd: RankOneUpdate) -> float:
    # Scale-invariant threshold: |1 + y^T M^-1 x| measured against the sizes
    # of the factors entering it.
    scale = 1.0 + np.linalg.norm(upd.x) * np.linalg.norm(minv, 2) * np.linalg.norm(upd.y)
    return 1e-12 * scale


def det_rank_one(det_m: float, minv: np.ndarray, upd: RankOneUpdate) -> float:
    """det(M + x y^T) given det(M) and M^-1."""
    return float(det_m * (1.0 + upd.y @ minv @ upd.x))


def sm_inverse(minv: np.ndarray, upd: RankOneUpdate) -> np.ndarray:
    """(M + x y^T)^-1 by the Sherman-Morrison update of M^-1."""
    mx = minv @ upd.x
    ym = upd.y @ minv
    denom = 1.0 + float(upd.y @ mx)
    tol = _denominator_tolerance(minv, upd)
    if abs(denom) < tol:
        raise NearSingularUpdateError(denom, tol)
    return minv - np.outer(mx, ym) / denom


def trace_rank_one(trace_minv: float, minv: np.ndarray, upd: RankOneUpdate) -> float:
    """tr[(M + x y^T)^-1] given tr[M^-1] and M^-1."""
    mx = minv @ upd.x
    denom = 1.0 + float(upd.y @ mx)
    tol = _denominator_tolerance(minv, upd)
    if abs(denom) < tol:
        raise NearSingularUpdateError(denom, tol)
    # tr[M^-1 x y^T M^-1] = y^T M^-2 x
    return float(trace_minv - (upd.y @ minv @ mx) / denom)


def pinv_differential(x: np.ndarray, dx: np.ndarray) -> np.ndarray:
    """Directional derivative of the pseudo-inverse at a full-column-rank X.

    For X of shape (n, q) with independent columns, returns

        dX^+ = -X^+ dX X^+ + X^+ X^+T dX^T (I - X X^+),

    an array with the (q, n) shape of X^+ itself.
    """
    x = np.asarray(x, dtype=float)
    dx = np.asarray(dx, dtype=float)
    if x.shape != dx.shape:
        raise ValueError(f"shape mismatch: X {x.shape} vs dX {dx.shape}")
    sv = np.linalg.svd(x, compute_uv=False)
    if sv[-1] < 1e-8 * sv[0]:
        raise ValueError(
            f"X is numerically rank deficient (sigma_min/sigma_max = {sv[-1] / sv[0]:.3e})"
        )
    pinv = np.linalg.pinv(x)
    proj_residual = np.eye(x.shape[0]) - x @ pinv
    return -pinv @ dx @ pinv + pinv @ pinv.T @ dx.T @ proj_residual

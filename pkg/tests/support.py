"""Shared oracles and runners for the test suite."""

import concurrent.futures
import os
import time

import numpy as np

from sysid import IdentMode, Schedule, SphereQp, sequential_identify
from sysid.harness import build_system

M2_GRID = 1_000_000
M3_GRID = 100_000


def circle_points(n=M2_GRID):
    phi = np.linspace(0.0, 2.0 * np.pi, n, endpoint=False)
    return np.column_stack([np.cos(phi), np.sin(phi)])


def fibonacci_sphere(n=M3_GRID):
    i = np.arange(n) + 0.5
    z = 1.0 - 2.0 * i / n
    r = np.sqrt(np.maximum(0.0, 1.0 - z * z))
    phi = np.pi * (1.0 + np.sqrt(5.0)) * i
    return np.column_stack([r * np.cos(phi), r * np.sin(phi), z])


_GRIDS = {}


def sphere_grid(m):
    """Unit-sphere sample points plus cached monomials x_i * x_j."""
    if m not in _GRIDS:
        pts = circle_points() if m == 2 else fibonacci_sphere()
        feats = {
            (i, j): pts[:, i] * pts[:, j] for i in range(m) for j in range(i, m)
        }
        _GRIDS[m] = (pts, feats)
    return _GRIDS[m]


def grid_minimum(qp: SphereQp) -> float:
    """Dense sphere-sampling upper bound on the constrained minimum."""
    m = len(qp.b)
    pts, feats = sphere_grid(m)
    g2 = qp.gamma * qp.gamma
    vals = np.zeros(len(pts))
    for i in range(m):
        vals += (qp.q[i, i] * g2) * feats[(i, i)]
        for j in range(i + 1, m):
            vals += (2.0 * qp.q[i, j] * g2) * feats[(i, j)]
        vals -= (2.0 * qp.gamma * qp.b[i]) * pts[:, i]
    return float(vals.min())


def random_qp(rng, m, hard=False):
    if hard:
        alpha = np.sort(np.abs(rng.standard_normal(m)))
        alpha[0] = -(0.2 + 0.5 * abs(rng.standard_normal()))
        q = np.diag(alpha)
        rot, _ = np.linalg.qr(rng.standard_normal((m, m)))
        q = rot @ q @ rot.T
        b_eig = np.zeros(m)
        b_eig[1:] = 0.05 * rng.standard_normal(m - 1)
        b = rot @ b_eig
        gamma = float(10.0 + rng.uniform(0.0, 5.0))
        return SphereQp(q=(q + q.T) / 2.0, b=b, gamma=gamma)
    q = rng.standard_normal((m, m))
    q = (q + q.T) / 2.0
    return SphereQp(q=q, b=rng.standard_normal(m), gamma=float(rng.uniform(0.3, 3.0)))


def run_trial(job):
    """One (cfg, policy, horizon, seed) trial; returns a summary dict.

    Top-level so process pools can pickle it. wall is the full trial wall
    time, the computational-rate measure (total cost of the run over T).
    """
    cfg, policy, horizon, seed = job
    sys_ = build_system(cfg, seed)
    mode = IdentMode.with_known_b(sys_.b) if cfg.mode == "known-b" else IdentMode.full()
    tic = time.perf_counter()
    result = sequential_identify(
        sys_, mode, policy, Schedule.parse(cfg.schedule, horizon),
        seed=seed, crit=cfg.crit, gamma=cfg.gamma, ridge=cfg.ridge,
        n_grad=cfg.n_grad, batch=cfg.batch, eta=cfg.eta,
        qp_tol=cfg.qp_tol, stop_tol=cfg.stop_tol,
    )
    wall = time.perf_counter() - tic
    return {
        "policy": policy,
        "seed": seed,
        "errors": result.errors,
        "ctrl_rate": float(np.sum(result.ctrl_seconds)) / horizon,
        "trial_rate": wall / horizon,
        "energy": float(np.sum(result.energy)),
    }


def run_many(cfg, policy, horizon, seeds, workers=None):
    jobs = [(cfg, policy, horizon, seed) for seed in seeds]
    if workers is None:
        workers = min(2, os.cpu_count() or 1)
    if workers <= 1 or len(jobs) < 4:
        return [run_trial(j) for j in jobs]
    out = []
    with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
        for res in pool.map(run_trial, jobs, chunksize=max(1, len(jobs) // (4 * workers))):
            out.append(res)
    return out

"""Adapters between the compiled kernels and the high-level result types."""

import numpy as np

from . import _greedy as _ext


def _c(a):
    return np.ascontiguousarray(a, dtype=float)


def greedy_run(sys, mode, horizon, noises, gamma, ridge, qp_tol):
    from ..greedy import RunResult

    d, m = sys.d, sys.m
    q = mode.q(d, m)
    errors = np.empty(horizon)
    ctrl = np.empty(horizon)
    energy = np.empty(horizon)
    inputs = np.empty((horizon, m))
    theta = np.empty((d, q))
    _ext.greedy_trial(
        _c(sys.a), _c(sys.b), _c(noises), float(sys.sigma), float(gamma),
        float(ridge), float(qp_tol), mode.is_known_b,
        errors, ctrl, energy, inputs, theta,
    )
    return RunResult(theta, errors, ctrl, energy, inputs)


def random_run(sys, mode, horizon, noises, draws, ridge):
    from ..greedy import RunResult

    d, m = sys.d, sys.m
    q = mode.q(d, m)
    errors = np.empty(horizon)
    ctrl = np.empty(horizon)
    energy = np.empty(horizon)
    theta = np.empty((d, q))
    _ext.random_trial(
        _c(sys.a), _c(sys.b), _c(noises), _c(draws), float(ridge),
        mode.is_known_b, errors, ctrl, energy, theta,
    )
    return RunResult(theta, errors, ctrl, energy, np.array(draws))


def sphere_qp(q, b, gamma, tol):
    return _ext.sphere_qp(_c(q), _c(b), float(gamma), float(tol))

# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled per-step kernels for the greedy and random identification loops.

These mirror the pure-numpy loops step for step: one-step design problem
assembly, the sphere-QP solve (eigendecomposition plus secular equation),
the Sherman-Morrison recursive least-squares update with periodic exact
refreshes, and per-step controller timing. Matrices are tiny (q = d or
d + m), so the win over numpy is interpreter and dispatch overhead, not
BLAS throughput.
"""

from libc.math cimport fabs, isfinite, sqrt
from libc.stdlib cimport calloc, free
from posix.time cimport CLOCK_MONOTONIC, clock_gettime, timespec

import numpy as np

from scipy.linalg.cython_lapack cimport dpotrf, dpotri, dsyev

cdef enum:
    MAX_SECULAR_ITERS = 200
    REFRESH_PERIOD = 64

cdef double REFRESH_DENOMINATOR = 1e4


cdef inline double _now() noexcept nogil:
    cdef timespec ts
    clock_gettime(CLOCK_MONOTONIC, &ts)
    return ts.tv_sec + 1e-9 * ts.tv_nsec


cdef inline double _dot(const double* x, const double* y, int n) noexcept nogil:
    cdef int i
    cdef double acc = 0.0
    for i in range(n):
        acc += x[i] * y[i]
    return acc


cdef inline void _mat_vec(const double* a, const double* x, double* out,
                          int rows, int cols) noexcept nogil:
    cdef int i
    for i in range(rows):
        out[i] = _dot(a + i * cols, x, cols)


cdef int _spd_inverse(const double* m, double* out, int n) noexcept nogil:
    """out = inv(m) for symmetric positive definite row-major m."""
    cdef int i, j, info = 0
    cdef char uplo = b'L'
    for i in range(n * n):
        out[i] = m[i]
    # a row-major symmetric buffer read column-major is the same matrix
    dpotrf(&uplo, &n, out, &n, &info)
    if info != 0:
        return info
    dpotri(&uplo, &n, out, &n, &info)
    if info != 0:
        return info
    # LAPACK filled one triangle (row-major upper); mirror it
    for i in range(n):
        for j in range(i + 1, n):
            out[j * n + i] = out[i * n + j]
    return 0


cdef int _sym_eig(const double* q, double* evals, double* evecs, int n,
                  double* work, int lwork) noexcept nogil:
    """Ascending eigendecomposition of symmetric q; row k of evecs is v_k."""
    cdef int i, info = 0
    cdef char jobz = b'V'
    cdef char uplo = b'L'
    for i in range(n * n):
        evecs[i] = q[i]
    dsyev(&jobz, &uplo, &n, evecs, &n, evals, work, &lwork, &info)
    return info


cdef double _secular_phi(const double* gaps, const double* beta, int m,
                         double s, double g2) noexcept nogil:
    cdef int i
    cdef double r, den, f = -g2
    for i in range(m):
        if beta[i] == 0.0:
            continue
        den = gaps[i] + s
        if den == 0.0:
            return 1e300  # at the pole
        r = beta[i] / den
        f += r * r
    return f


cdef int _secular_root(const double* gaps, const double* beta, int m,
                       double gamma, double tol, double* s_out,
                       bint* hard_out) noexcept nogil:
    """Solve sum beta_i^2/(gaps_i + s)^2 = gamma^2 for s > 0.

    Shifted coordinates (gaps_i = alpha_i - alpha_min, gaps_0 = 0 exactly)
    put the pole at s = 0, so evaluations near it do not cancel. phi is
    strictly decreasing and convex; safeguarded Newton/bisection converges.
    """
    cdef double g2 = gamma * gamma
    cdef double f = _secular_phi(gaps, beta, m, 0.0, g2)
    cdef double hi, lo_b, hi_b, s, d, den, s_next
    cdef int i, it
    if f <= 0.0:
        s_out[0] = 0.0
        hard_out[0] = True
        return 0
    hi = sqrt(_dot(beta, beta, m)) / gamma  # phi(hi) <= 0 by Cauchy-Schwarz
    lo_b = 0.0
    hi_b = hi
    s = hi
    f = _secular_phi(gaps, beta, m, s, g2)
    for it in range(MAX_SECULAR_ITERS):
        if fabs(f) <= tol * g2:
            s_out[0] = s
            hard_out[0] = False
            return 0
        if f > 0.0:
            if s > lo_b:
                lo_b = s
        else:
            if s < hi_b:
                hi_b = s
        d = 0.0
        for i in range(m):
            if beta[i] != 0.0:
                den = gaps[i] + s
                d -= 2.0 * beta[i] * beta[i] / (den * den * den)
        if f < 1e299 and d < 0.0:
            s_next = s - f / d
            if not (lo_b < s_next < hi_b):
                s_next = 0.5 * (lo_b + hi_b)
        else:
            s_next = 0.5 * (lo_b + hi_b)
        s = s_next
        f = _secular_phi(gaps, beta, m, s, g2)
        if hi_b - lo_b <= 1e-17 * (1.0 + fabs(s)):
            if fabs(f) <= g2 * (tol if tol > 1e-7 else 1e-7):
                s_out[0] = s
                hard_out[0] = False
                return 0
            break
    return -1


cdef void _canonical_sign(double* v, int n) noexcept nogil:
    cdef int i, j
    for i in range(n):
        if fabs(v[i]) > 1e-14:
            if v[i] < 0.0:
                for j in range(n):
                    v[j] = -v[j]
            return


cdef void _bottom_direction(const double* evecs, const double* evals, int m,
                            double eig_tol, double* out) noexcept nogil:
    """Deterministic unit vector in the minimal eigenspace.

    Projects the first canonical axis with nonnegligible overlap onto the
    span of the bottom eigenvectors; the projector is basis-independent, so
    repeated eigenvalues tie-break identically across LAPACK drivers.
    """
    cdef int i, j, k
    cdef double coeff, nrm
    cdef double a_min = evals[0]
    for k in range(m):
        for j in range(m):
            out[j] = 0.0
        for i in range(m):
            if evals[i] - a_min <= eig_tol:
                coeff = evecs[i * m + k]
                for j in range(m):
                    out[j] += coeff * evecs[i * m + j]
        nrm = sqrt(_dot(out, out, m))
        if nrm > 1e-8:
            for j in range(m):
                out[j] /= nrm
            return
    for j in range(m):
        out[j] = evecs[j]
    _canonical_sign(out, m)


cdef inline double _qp_objective(const double* q, const double* b,
                                 const double* u, int m) noexcept nogil:
    cdef int i
    cdef double f = 0.0
    for i in range(m):
        f += u[i] * _dot(q + i * m, u, m)
    return f - 2.0 * _dot(b, u, m)


cdef int _sphere_qp(const double* q, const double* b, int m, double gamma,
                    double tol, double* u, double* scratch,
                    int lwork) noexcept nogil:
    """Global minimizer of u^T Q u - 2 b^T u over the radius-gamma sphere.

    scratch must hold at least 2*m*m + 6*m + lwork doubles. Mirrors the pure
    solver: an interior stationary point is accepted when Q is positive
    definite and strictly better; otherwise the boundary solution from the
    secular equation, with the hard-case bottom-eigenvector escape.
    """
    cdef double* sym = scratch
    cdef double* evecs = sym + m * m
    cdef double* evals = evecs + m * m
    cdef double* beta = evals + m
    cdef double* gaps = beta + m
    cdef double* coords = gaps + m
    cdef double* vmin = coords + m
    cdef double* u_int = vmin + m
    cdef double* partial = u_int + m
    cdef double* work = partial + m
    cdef int i, j, info
    cdef double a_min, eig_tol, root, nrm, tau, part2, f_int
    cdef bint hard, have_interior = False

    for i in range(m):
        for j in range(m):
            sym[i * m + j] = 0.5 * (q[i * m + j] + q[j * m + i])
    info = _sym_eig(sym, evals, evecs, m, work, lwork)
    if info != 0:
        return info
    for i in range(m):
        beta[i] = _dot(evecs + i * m, b, m)
    a_min = evals[0]
    # components at construction-roundoff level are exact zeros: near-hard
    # instances then take the deterministic hard-case branch instead of a
    # noise-determined point on the (objective-flat) tie manifold
    nrm = 1e-8 * sqrt(_dot(beta, beta, m))
    for i in range(m):
        if fabs(beta[i]) <= nrm:
            beta[i] = 0.0
        gaps[i] = evals[i] - a_min
    gaps[0] = 0.0
    eig_tol = 1e-12
    if 1e-12 * fabs(evals[0]) > eig_tol:
        eig_tol = 1e-12 * fabs(evals[0])
    if 1e-12 * fabs(evals[m - 1]) > eig_tol:
        eig_tol = 1e-12 * fabs(evals[m - 1])

    if a_min > 0.0:
        nrm = 0.0
        for i in range(m):
            coords[i] = beta[i] / evals[i]
            nrm += coords[i] * coords[i]
        if sqrt(nrm) < gamma:
            for j in range(m):
                u_int[j] = 0.0
            for i in range(m):
                for j in range(m):
                    u_int[j] += evecs[i * m + j] * coords[i]
            have_interior = True

    if _dot(b, b, m) == 0.0:
        _bottom_direction(evecs, evals, m, eig_tol, vmin)
        for i in range(m):
            u[i] = gamma * vmin[i]
    else:
        info = _secular_root(gaps, beta, m, gamma, tol, &root, &hard)
        if info != 0:
            return 1000
        if hard:
            part2 = 0.0
            for i in range(m):
                if gaps[i] <= eig_tol:
                    partial[i] = 0.0
                else:
                    partial[i] = beta[i] / gaps[i]
                    part2 += partial[i] * partial[i]
            tau = gamma * gamma - part2
            tau = sqrt(tau) if tau > 0.0 else 0.0
            _bottom_direction(evecs, evals, m, eig_tol, vmin)
            for j in range(m):
                u[j] = tau * vmin[j]
            for i in range(m):
                for j in range(m):
                    u[j] += evecs[i * m + j] * partial[i]
        else:
            nrm = 0.0
            for i in range(m):
                partial[i] = beta[i] / (gaps[i] + root)
                nrm += partial[i] * partial[i]
            nrm = sqrt(nrm)
            for j in range(m):
                u[j] = 0.0
            for i in range(m):
                for j in range(m):
                    u[j] += evecs[i * m + j] * partial[i]
            if nrm > 0.0:
                for j in range(m):
                    u[j] *= gamma / nrm

    if have_interior:
        f_int = _qp_objective(q, b, u_int, m)
        if f_int < _qp_objective(q, b, u, m):
            for i in range(m):
                u[i] = u_int[i]
    return 0


cdef inline int _qp_scratch_len(int m, int lwork) noexcept nogil:
    return 2 * m * m + 7 * m + lwork


def sphere_qp(const double[:, ::1] q, const double[::1] b, double gamma, double tol):
    """Compiled sphere-QP solve; returns the minimizer as a new array."""
    cdef int m = b.shape[0]
    cdef int lwork = 34 * m + 16
    u = np.empty(m)
    scratch = np.empty(_qp_scratch_len(m, lwork))
    cdef double[::1] u_v = u
    cdef double[::1] s_v = scratch
    cdef int info
    with nogil:
        info = _sphere_qp(&q[0, 0], &b[0], m, gamma, tol, &u_v[0], &s_v[0], lwork)
    if info != 0:
        raise RuntimeError(f"sphere QP kernel failed (code {info})")
    return u


cdef struct RlsState:
    double* m        # q x q moment matrix with ridge floor
    double* m_inv
    double* theta    # d x q
    double* zy_sum   # q x d
    int since_refresh


cdef int _rls_update(RlsState* st, const double* z, const double* y,
                     int q, int d, double* scratch) noexcept nogil:
    """Mirror of the Python update: SM step with exact refreshes."""
    cdef double* mz = scratch            # q
    cdef double* minv_z = scratch + q    # q
    cdef double* resid = scratch + 2 * q  # d
    cdef int i, j, k, info
    cdef double denom, acc

    for i in range(q):
        for j in range(q):
            st.m[i * q + j] += z[i] * z[j]
    for i in range(q):
        for j in range(d):
            st.zy_sum[i * d + j] += z[i] * y[j]

    _mat_vec(st.m_inv, z, mz, q, q)
    denom = 1.0 + _dot(z, mz, q)
    if st.since_refresh + 1 >= REFRESH_PERIOD or denom >= REFRESH_DENOMINATOR:
        info = _spd_inverse(st.m, st.m_inv, q)
        if info != 0:
            return info
        # theta = (m_inv @ zy_sum)^T
        for i in range(d):
            for j in range(q):
                acc = 0.0
                for k in range(q):
                    acc += st.m_inv[j * q + k] * st.zy_sum[k * d + i]
                st.theta[i * q + j] = acc
        st.since_refresh = 0
        return 0
    # Sherman-Morrison, symmetric update direction
    for i in range(q):
        for j in range(q):
            st.m_inv[i * q + j] -= mz[i] * mz[j] / denom
    st.since_refresh += 1
    # innovation form: theta += (y - theta z)(m_inv_new z)^T
    for i in range(d):
        resid[i] = y[i] - _dot(st.theta + i * q, z, q)
    _mat_vec(st.m_inv, z, minv_z, q, q)
    for i in range(d):
        for j in range(q):
            st.theta[i * q + j] += resid[i] * minv_z[j]
    return 0


cdef void _gramian_step(const double* theta, double* g, double* tmp,
                        int d, int q) noexcept nogil:
    """g <- I + A g A^T with A the first d columns of the estimate."""
    cdef int i, j, k
    cdef double acc
    for i in range(d):
        for j in range(d):
            acc = 0.0
            for k in range(d):
                acc += theta[i * q + k] * g[k * d + j]
            tmp[i * d + j] = acc
    for i in range(d):
        for j in range(d):
            acc = 1.0 if i == j else 0.0
            for k in range(d):
                acc += tmp[i * d + k] * theta[j * q + k]
            g[i * d + j] = acc


cdef void _true_step(const double[:, ::1] a_star, const double[:, ::1] b_star,
                     const double* x, const double* u, const double* w,
                     double* x_next, int d, int m) noexcept nogil:
    cdef int i, k
    cdef double acc
    for i in range(d):
        acc = w[i]
        for k in range(d):
            acc += a_star[i, k] * x[k]
        for k in range(m):
            acc += b_star[i, k] * u[k]
        x_next[i] = acc


cdef void _observation_pair(const double[:, ::1] b_star, const double* x,
                            const double* u, const double* x_next,
                            double* z, double* y, int d, int m,
                            bint known_b) noexcept nogil:
    cdef int i, k
    cdef double acc
    for i in range(d):
        z[i] = x[i]
    if known_b:
        for i in range(d):
            acc = x_next[i]
            for k in range(m):
                acc -= b_star[i, k] * u[k]
            y[i] = acc
    else:
        for i in range(m):
            z[d + i] = u[i]
        for i in range(d):
            y[i] = x_next[i]


cdef double _estimate_error(const RlsState* st, const double* theta_star,
                            int n) noexcept nogil:
    cdef int i
    cdef double diff, err = 0.0
    for i in range(n):
        diff = st.theta[i] - theta_star[i]
        err += diff * diff
    return err


def greedy_trial(const double[:, ::1] a_star, const double[:, ::1] b_star,
                 const double[:, ::1] noises, double sigma, double gamma,
                 double ridge, double qp_tol, bint known_b,
                 double[::1] errors, double[::1] ctrl_seconds,
                 double[::1] energy, double[:, ::1] inputs_out,
                 double[:, ::1] theta_out):
    """Full greedy identification loop against the true system.

    Fills the per-step squared parameter error, controller seconds, input
    energy, the played inputs, and the final estimate.
    """
    cdef int d = a_star.shape[0]
    cdef int m = b_star.shape[1]
    cdef int horizon = noises.shape[0]
    cdef int q = d if known_b else d + m
    cdef int lwork = 34 * m + 16
    cdef int i, j, k, t, info = 0
    cdef double tic, acc, sig2 = sigma * sigma

    cdef size_t total = (
        4 * q * q + 2 * d * q + q * d + q * m + m * m
        + 2 * m + 2 * q + 4 * d + 2 * d * d
        + _qp_scratch_len(m, lwork) + 2 * q + d
    )
    cdef double* buf = <double*> calloc(total, sizeof(double))
    if buf is NULL:
        raise MemoryError()

    cdef RlsState st
    cdef double* p = buf
    st.m = p; p += q * q
    st.m_inv = p; p += q * q
    st.theta = p; p += d * q
    st.zy_sum = p; p += q * d
    st.since_refresh = 0
    cdef double* theta_star = p
    p += d * q
    cdef double* m_bar = p
    p += q * q
    cdef double* p_inv = p
    p += q * q
    cdef double* pl = p
    p += q * m
    cdef double* qmat = p
    p += m * m
    cdef double* bvec = p
    p += m
    cdef double* z0 = p
    p += q
    cdef double* u = p
    p += m
    cdef double* x = p
    p += d
    cdef double* x_next = p
    p += d
    cdef double* g = p
    p += d * d
    cdef double* g_tmp = p
    p += d * d
    cdef double* z = p
    p += q
    cdef double* y = p
    p += d
    cdef double* qp_scratch = p
    p += _qp_scratch_len(m, lwork)
    cdef double* rls_scratch = p
    p += 2 * q + d

    for i in range(d):
        for j in range(d):
            theta_star[i * q + j] = a_star[i, j]
        if not known_b:
            for j in range(m):
                theta_star[i * q + d + j] = b_star[i, j]

    with nogil:
        for i in range(q):
            st.m[i * q + i] = ridge
            st.m_inv[i * q + i] = 1.0 / ridge

        for t in range(horizon):
            tic = _now()
            # noise-information recursion at the running estimate: the
            # known-B problem needs G_{t+1}, the joint problem G_t
            if known_b:
                _gramian_step(st.theta, g, g_tmp, d, q)
            for i in range(q * q):
                m_bar[i] = st.m[i]
            for i in range(d):
                for j in range(d):
                    m_bar[i * q + j] += sig2 * g[i * d + j]
            if known_b:
                for i in range(d):
                    for j in range(d):
                        m_bar[i * q + j] += x[i] * x[j]
            info = _spd_inverse(m_bar, p_inv, q)
            if info != 0:
                info += 2000
                break
            if known_b:
                # z0 = A_t x; Q = -B^T P B; b = B^T P z0
                for i in range(d):
                    z0[i] = _dot(st.theta + i * q, x, q)
                for i in range(q):
                    for j in range(m):
                        acc = 0.0
                        for k in range(d):
                            acc += p_inv[i * q + k] * b_star[k, j]
                        pl[i * m + j] = acc
                for i in range(m):
                    for j in range(m):
                        acc = 0.0
                        for k in range(d):
                            acc += b_star[k, i] * pl[k * m + j]
                        qmat[i * m + j] = -acc
                for i in range(m):
                    acc = 0.0
                    for k in range(d):
                        acc += pl[k * m + i] * z0[k]
                    bvec[i] = acc
            else:
                # covariate map stacks (x; u): Q = -P_uu, b = P_ux x
                for i in range(m):
                    for j in range(m):
                        qmat[i * m + j] = -p_inv[(d + i) * q + d + j]
                for i in range(m):
                    bvec[i] = _dot(p_inv + (d + i) * q, x, d)
            for i in range(m):
                for j in range(i + 1, m):
                    acc = 0.5 * (qmat[i * m + j] + qmat[j * m + i])
                    qmat[i * m + j] = acc
                    qmat[j * m + i] = acc
            info = _sphere_qp(qmat, bvec, m, gamma, qp_tol, u, qp_scratch, lwork)
            if info != 0:
                info += 3000
                break
            if not known_b:
                _gramian_step(st.theta, g, g_tmp, d, q)
            _true_step(a_star, b_star, x, u, &noises[t, 0], x_next, d, m)
            _observation_pair(b_star, x, u, x_next, z, y, d, m, known_b)
            info = _rls_update(&st, z, y, q, d, rls_scratch)
            if info != 0:
                info += 4000
                break
            ctrl_seconds[t] = _now() - tic
            errors[t] = _estimate_error(&st, theta_star, d * q)
            energy[t] = _dot(u, u, m)
            for i in range(m):
                inputs_out[t, i] = u[i]
            for i in range(d):
                x[i] = x_next[i]

    if info == 0:
        for i in range(d):
            for j in range(q):
                theta_out[i, j] = st.theta[i * q + j]
    free(buf)
    if info != 0:
        raise RuntimeError(f"greedy kernel failed (code {info})")


def random_trial(const double[:, ::1] a_star, const double[:, ::1] b_star,
                 const double[:, ::1] noises, const double[:, ::1] draws,
                 double ridge, bint known_b,
                 double[::1] errors, double[::1] ctrl_seconds,
                 double[::1] energy, double[:, ::1] theta_out):
    """Random-input baseline loop with the recursive estimator."""
    cdef int d = a_star.shape[0]
    cdef int m = b_star.shape[1]
    cdef int horizon = noises.shape[0]
    cdef int q = d if known_b else d + m
    cdef int i, j, t, info = 0
    cdef double tic

    cdef size_t total = 2 * q * q + 2 * d * q + q * d + 4 * d + 2 * q + m + 2 * q + d
    cdef double* buf = <double*> calloc(total, sizeof(double))
    if buf is NULL:
        raise MemoryError()
    cdef RlsState st
    cdef double* p = buf
    st.m = p; p += q * q
    st.m_inv = p; p += q * q
    st.theta = p; p += d * q
    st.zy_sum = p; p += q * d
    st.since_refresh = 0
    cdef double* theta_star = p
    p += d * q
    cdef double* x = p
    p += d
    cdef double* x_next = p
    p += d
    cdef double* z = p
    p += q
    cdef double* y = p
    p += d
    cdef double* u = p
    p += m
    cdef double* rls_scratch = p
    p += 2 * q + d

    for i in range(d):
        for j in range(d):
            theta_star[i * q + j] = a_star[i, j]
        if not known_b:
            for j in range(m):
                theta_star[i * q + d + j] = b_star[i, j]

    with nogil:
        for i in range(q):
            st.m[i * q + i] = ridge
            st.m_inv[i * q + i] = 1.0 / ridge
        for t in range(horizon):
            tic = _now()
            for i in range(m):
                u[i] = draws[t, i]
            _true_step(a_star, b_star, x, u, &noises[t, 0], x_next, d, m)
            _observation_pair(b_star, x, u, x_next, z, y, d, m, known_b)
            info = _rls_update(&st, z, y, q, d, rls_scratch)
            if info != 0:
                break
            ctrl_seconds[t] = _now() - tic
            errors[t] = _estimate_error(&st, theta_star, d * q)
            energy[t] = _dot(u, u, m)
            for i in range(d):
                x[i] = x_next[i]

    if info == 0:
        for i in range(d):
            for j in range(q):
                theta_out[i, j] = st.theta[i * q + j]
    free(buf)
    if info != 0:
        raise RuntimeError(f"random kernel failed (code {info})")

# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels for the constrained best-response game.

Semantics mirror _fallback.py exactly; only the execution model differs
(tight C loops, GIL released while the game runs).
"""
import numpy as np

cimport numpy as cnp
from libc.math cimport fabs, sqrt
from libc.stdlib cimport qsort

cnp.import_array()

BACKEND = "compiled"

cdef double _INCREASE_SLACK = 1e-12
cdef int _MAX_BAD_STEPS = 10

# scratch rows used by _best_response (each row holds d doubles)
cdef int _CAND = 0, _GRAD = 1, _UVEC = 2, _WNEW = 3
cdef int _BUF_ROWS = 4


cdef int _cmp_desc(const void* a, const void* b) noexcept nogil:
    cdef double x = (<const double*> a)[0]
    cdef double y = (<const double*> b)[0]
    if x < y:
        return 1
    if x > y:
        return -1
    return 0


cdef double _clip(double a, double lo, double hi) noexcept nogil:
    if a < lo:
        return lo
    if a > hi:
        return hi
    return a


cdef void _proj_l1(const double* v, int d, double t, double* scratch, double* out) noexcept nogil:
    cdef int i, rho = -1
    cdef double total = 0.0, css = 0.0, theta = 0.0, a
    for i in range(d):
        scratch[i] = fabs(v[i])
        total += scratch[i]
    if total <= t:
        for i in range(d):
            out[i] = v[i]
        return
    qsort(scratch, d, sizeof(double), _cmp_desc)
    for i in range(d):
        css += scratch[i]
        if scratch[i] * (i + 1) > css - t:
            rho = i
            theta = (css - t) / (i + 1)
    for i in range(d):
        a = fabs(v[i]) - theta
        if a < 0.0:
            a = 0.0
        out[i] = a if v[i] >= 0.0 else -a


cdef double _shifted_l1_at(const double* v, const double* s, int d, double gamma,
                           double lam) noexcept nogil:
    """l1 norm of clip(soft(v + s, lam), box around s) in shifted coordinates."""
    cdef int i
    cdef double l1 = 0.0, z, a, u
    for i in range(d):
        z = v[i] + s[i]
        a = fabs(z) - lam
        if a < 0.0:
            a = 0.0
        u = a if z >= 0.0 else -a
        l1 += fabs(_clip(u, s[i] - gamma, s[i] + gamma))
    return l1


cdef void _exact_box_l1_project(const double* v, const double* s, int d,
                                double gamma, double t, double* out) noexcept nogil:
    """Exact projection onto box(gamma) ∩ {|s + w|_1 <= t} via bisection on
    the l1 multiplier in u = s + w coordinates."""
    cdef int i, it
    cdef double lam, lam_lo = 0.0, lam_hi = 0.0, z, a, u
    if _shifted_l1_at(v, s, d, gamma, 0.0) <= t:
        for i in range(d):
            out[i] = _clip(v[i] + s[i], s[i] - gamma, s[i] + gamma) - s[i]
        return
    for i in range(d):
        a = fabs(v[i] + s[i])
        if a > lam_hi:
            lam_hi = a
    lam_hi += 1.0
    for it in range(80):
        lam = 0.5 * (lam_lo + lam_hi)
        if _shifted_l1_at(v, s, d, gamma, lam) > t:
            lam_lo = lam
        else:
            lam_hi = lam
    for i in range(d):
        z = v[i] + s[i]
        a = fabs(z) - lam_hi
        if a < 0.0:
            a = 0.0
        u = a if z >= 0.0 else -a
        out[i] = _clip(u, s[i] - gamma, s[i] + gamma) - s[i]


cdef void _dykstra(const double* v, const double* s, int d, double gamma, double t,
                   int max_sweeps, double tol, double* x, double* p, double* q,
                   double* y, double* tmp, double* scratch) noexcept nogil:
    """Alternating projections with correction terms; result left in x.

    The iterate x can stall for many sweeps while the correction terms keep
    evolving, so the stop requires stationarity of the whole (x, p, q)
    triple, which certifies the projection; on sweep exhaustion the exact
    projection takes over.
    """
    cdef int i, sweep
    cdef double a, z, move, pn, qn, mx = 0.0, l1 = 0.0
    for i in range(d):
        x[i] = v[i]
        a = fabs(x[i])
        if a > mx:
            mx = a
        l1 += fabs(s[i] + x[i])
    if mx <= gamma and l1 <= t:
        return
    for i in range(d):
        p[i] = 0.0
        q[i] = 0.0
    for sweep in range(max_sweeps):
        move = 0.0
        for i in range(d):
            a = x[i] + p[i]
            y[i] = _clip(a, -gamma, gamma)
            pn = a - y[i]
            a = fabs(pn - p[i])
            if a > move:
                move = a
            p[i] = pn
            tmp[i] = y[i] + q[i] + s[i]
        _proj_l1(tmp, d, t, scratch, tmp)
        for i in range(d):
            z = tmp[i] - s[i]
            qn = y[i] + q[i] - z
            a = fabs(qn - q[i])
            if a > move:
                move = a
            q[i] = qn
            a = fabs(z - x[i])
            if a > move:
                move = a
            x[i] = z
        if move <= tol:
            return
    _exact_box_l1_project(v, s, d, gamma, t, x)


cdef double _objective(const double* G, const double* c, const double* u, int d) noexcept nogil:
    cdef int i, j
    cdef double q = 0.0, row
    for i in range(d):
        row = 0.0
        for j in range(d):
            row += G[i * d + j] * u[j]
        q += u[i] * row - 2.0 * c[i] * u[i]
    return q


cdef void _best_response(const double* G, const double* c, const double* s,
                         const double* w0, int d, double gamma, double t,
                         double step, int max_iters, double tol,
                         double* w_out, int* iters_out, bint* diverged_out,
                         double* buf) noexcept nogil:
    cdef double* cand = buf + _CAND * d
    cdef double* grad = buf + _GRAD * d
    cdef double* u = buf + _UVEC * d
    cdef double* w_new = buf + _WNEW * d
    cdef int i, j, it = 0, bad = 0
    cdef double q_prev, q_new, q_zero, move, a

    _exact_box_l1_project(w0, s, d, gamma, t, w_out)
    for i in range(d):
        cand[i] = 0.0
    _exact_box_l1_project(cand, s, d, gamma, t, cand)
    for i in range(d):
        u[i] = s[i] + w_out[i]
    q_prev = _objective(G, c, u, d)
    for i in range(d):
        u[i] = s[i] + cand[i]
    q_zero = _objective(G, c, u, d)
    if q_zero < q_prev:
        q_prev = q_zero
        for i in range(d):
            w_out[i] = cand[i]

    diverged_out[0] = 0
    for it in range(1, max_iters + 1):
        for i in range(d):
            u[i] = s[i] + w_out[i]
        for i in range(d):
            a = -2.0 * c[i]
            for j in range(d):
                a += 2.0 * G[i * d + j] * u[j]
            grad[i] = w_out[i] - step * a
        _exact_box_l1_project(grad, s, d, gamma, t, w_new)
        move = 0.0
        for i in range(d):
            a = fabs(w_new[i] - w_out[i])
            if a > move:
                move = a
            w_out[i] = w_new[i]
            u[i] = s[i] + w_new[i]
        q_new = _objective(G, c, u, d)
        if q_new > q_prev + _INCREASE_SLACK * (1.0 + fabs(q_prev)):
            bad += 1
        else:
            bad = 0
        q_prev = q_new
        if bad >= _MAX_BAD_STEPS:
            iters_out[0] = it
            diverged_out[0] = 1
            return
        if move <= tol:
            break
    iters_out[0] = it


def lasso_cd_path(Xc, yc, w, alphas, int max_sweeps, double tol):
    """Coordinate-descent lasso along a penalty path, warm-started.

    Inputs are weighted-centered features/targets and normalized weights;
    the objective per point is (1/2S) sum w (yc - Xc b)^2 + alpha |b|_1.
    """
    cdef cnp.ndarray[double, ndim=2] X = np.ascontiguousarray(Xc, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] y = np.ascontiguousarray(yc, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] wa = np.ascontiguousarray(w, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] al = np.ascontiguousarray(alphas, dtype=np.float64)
    cdef int n = X.shape[0]
    cdef int d = X.shape[1]
    cdef int T = al.shape[0]
    cdef cnp.ndarray[double, ndim=2] coefs = np.zeros((T, d))
    cdef cnp.ndarray[double, ndim=2] wX = np.ascontiguousarray(wa[:, None] * X)
    cdef cnp.ndarray[double, ndim=1] z = (wa @ X**2) / wa.sum()
    cdef cnp.ndarray[double, ndim=1] beta = np.zeros(d)
    cdef cnp.ndarray[double, ndim=1] r = y.copy()
    cdef double* Xp = &X[0, 0]
    cdef double* wXp = &wX[0, 0]
    cdef double* zp = &z[0]
    cdef double* bp = &beta[0]
    cdef double* rp = &r[0]
    cdef double* cp = &coefs[0, 0]
    cdef double* ap = &al[0]
    cdef double S = wa.sum()
    cdef int a_i, sweep, i, j
    cdef double alpha, delta, old, rho, new, diff
    with nogil:
        for a_i in range(T):
            alpha = ap[a_i]
            for sweep in range(max_sweeps):
                delta = 0.0
                for j in range(d):
                    if zp[j] == 0.0:
                        continue
                    old = bp[j]
                    rho = 0.0
                    for i in range(n):
                        rho += wXp[i * d + j] * rp[i]
                    rho = rho / S + zp[j] * old
                    if rho > alpha:
                        new = (rho - alpha) / zp[j]
                    elif rho < -alpha:
                        new = (rho + alpha) / zp[j]
                    else:
                        new = 0.0
                    if new != old:
                        diff = old - new
                        for i in range(n):
                            rp[i] += Xp[i * d + j] * diff
                        bp[j] = new
                        diff = fabs(diff)
                        if diff > delta:
                            delta = diff
                if delta <= tol:
                    break
            for j in range(d):
                cp[a_i * d + j] = bp[j]
    return coefs


def project_l1_ball(v, double t):
    """Euclidean projection onto the l1 ball of radius t (sort-and-threshold)."""
    cdef cnp.ndarray[double, ndim=1] va = np.ascontiguousarray(v, dtype=np.float64)
    cdef int d = va.shape[0]
    cdef cnp.ndarray[double, ndim=1] out = np.empty(d)
    cdef cnp.ndarray[double, ndim=1] scratch = np.empty(d)
    _proj_l1(&va[0], d, t, &scratch[0], &out[0])
    return out


def exact_box_l1_project(v, shift, double gamma, double t):
    """Exact projection onto {|w|_inf <= gamma} ∩ {|shift + w|_1 <= t}."""
    cdef cnp.ndarray[double, ndim=1] va = np.ascontiguousarray(v, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] sa = np.ascontiguousarray(shift, dtype=np.float64)
    cdef int d = va.shape[0]
    cdef cnp.ndarray[double, ndim=1] out = np.empty(d)
    _exact_box_l1_project(&va[0], &sa[0], d, gamma, t, &out[0])
    return out


def dykstra_project(v, shift, double gamma, double t, int max_sweeps=50, double tol=1e-9):
    """Project v onto {|w|_inf <= gamma} ∩ {|shift + w|_1 <= t}."""
    cdef cnp.ndarray[double, ndim=1] va = np.ascontiguousarray(v, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] sa = np.ascontiguousarray(shift, dtype=np.float64)
    cdef int d = va.shape[0]
    cdef cnp.ndarray[double, ndim=2] buf = np.empty((6, d))
    _dykstra(&va[0], &sa[0], d, gamma, t, max_sweeps, tol,
             &buf[0, 0], &buf[1, 0], &buf[2, 0], &buf[3, 0], &buf[4, 0], &buf[5, 0])
    return np.asarray(buf[0]).copy()


def best_response(G, c, s, w0, double gamma, double t, double step, int max_iters,
                  double tol):
    cdef cnp.ndarray[double, ndim=2] Ga = np.ascontiguousarray(G, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] ca = np.ascontiguousarray(c, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] sa = np.ascontiguousarray(s, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] wa = np.ascontiguousarray(w0, dtype=np.float64)
    cdef int d = ca.shape[0]
    cdef cnp.ndarray[double, ndim=1] w_out = np.empty(d)
    cdef cnp.ndarray[double, ndim=2] buf = np.empty((_BUF_ROWS, d))
    cdef int iters = 0
    cdef bint diverged = 0
    _best_response(&Ga[0, 0], &ca[0], &sa[0], &wa[0], d, gamma, t, step, max_iters,
                   tol, &w_out[0], &iters, &diverged, &buf[0, 0])
    return w_out, iters, bool(diverged)


def run_game(G, c, steps, double gamma, double t, double eps, int max_rounds,
             int inner_iters, double inner_tol):
    """Sequential round-robin best responses; see _fallback.run_game."""
    cdef cnp.ndarray[double, ndim=3] Ga = np.ascontiguousarray(G, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=2] ca = np.ascontiguousarray(c, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] stepa = np.ascontiguousarray(steps, dtype=np.float64)
    cdef int k = ca.shape[0]
    cdef int d = ca.shape[1]
    cdef cnp.ndarray[double, ndim=2] W = np.zeros((k, d))
    cdef cnp.ndarray[double, ndim=1] deltas = np.empty(max_rounds)
    cdef cnp.ndarray[double, ndim=2] buf = np.empty((_BUF_ROWS, d))
    cdef cnp.ndarray[double, ndim=1] svec = np.empty(d)
    cdef cnp.ndarray[double, ndim=1] w_new = np.empty(d)
    cdef double* Wp = &W[0, 0]
    cdef double* Gp = &Ga[0, 0, 0]
    cdef double* cp = &ca[0, 0]
    cdef double* sp = &svec[0]
    cdef double* wp = &w_new[0]
    cdef double* bufp = &buf[0, 0]
    cdef double* dp = &deltas[0]
    cdef double* stp = &stepa[0]
    cdef int rounds = 0, i, j, col, iters = 0, diverged_env = -1
    cdef bint converged = 0, diverged = 0
    cdef double delta, l2, a
    with nogil:
        for rounds in range(1, max_rounds + 1):
            delta = 0.0
            for i in range(k):
                for col in range(d):
                    a = 0.0
                    for j in range(k):
                        a += Wp[j * d + col]
                    sp[col] = a - Wp[i * d + col]
                _best_response(Gp + i * d * d, cp + i * d, sp, Wp + i * d, d,
                               gamma, t, stp[i], inner_iters, inner_tol,
                               wp, &iters, &diverged, bufp)
                l2 = 0.0
                for col in range(d):
                    a = wp[col] - Wp[i * d + col]
                    l2 += a * a
                    Wp[i * d + col] = wp[col]
                l2 = sqrt(l2)
                if l2 > delta:
                    delta = l2
                if diverged:
                    diverged_env = i
                    break
            if diverged:
                break
            dp[rounds - 1] = delta
            if delta < eps:
                converged = 1
                break
    if diverged_env >= 0:
        return W, rounds, False, np.asarray(deltas[:max(rounds - 1, 0)]).copy(), diverged_env
    return W, rounds, bool(converged), np.asarray(deltas[:rounds]).copy(), -1

"""Compiled coordinate-descent loops.

One loop serves three problems, selected by ``mode``:

* ``LASSO``: ``n^-1 ||y - X b||^2 + 2 lam ||b||_1``
* ``ORGANIC``: ``n^-1 ||y - X b||^2 + 2 lam ||b||_1^2``
* ``SQRT``: ``n^-1/2 ||y - X b|| + lam ||b||_1``, through the jointly convex
  scaled form ``||y - X b||^2 / (2 n s) + s / 2 + lam ||b||_1``. Each sweep
  is a lasso sweep at penalty ``lam * s`` followed by the exact update
  ``s = n^-1/2 ||y - X b||``.

The loop keeps the residual ``r = y - X b`` up to date and alternates full
cyclic sweeps with sweeps over the nonzero coordinates. It declares
convergence only after a full sweep whose largest coordinate move is at most
the move tolerance and whose duality gap passes the relative gap test (for
``SQRT``, the lasso gap at the current ``lam * s``).

Every ``_ANDERSON_K + 1`` active-set sweeps the loop tries two jumps. If
the support and signs held steady over the run, it solves the stationarity
equations restricted to that support, which are linear once the signs are
fixed. Otherwise, or if that fails, it Anderson-extrapolates the stored
iterates. A jump is kept only if it lowers the objective (and, for the
sign-fixed solve, keeps every sign), so the objective sequence stays
monotone. ``X`` is expected in Fortran order.
"""

import numpy as np
from numba import njit

LASSO, ORGANIC, SQRT = 0, 1, 2

# relative rounding floor for the gap test, in units of ||y||^2 / n
_GAP_FLOOR = 1e-14
_ANDERSON_K = 5


@njit(cache=True, nogil=True)
def _soft(a, b):
    if a > b:
        return a - b
    if a < -b:
        return a + b
    return 0.0


@njit(cache=True, nogil=True)
def _col_dot(X, j, r):
    acc = 0.0
    for i in range(X.shape[0]):
        acc += X[i, j] * r[i]
    return acc


@njit(cache=True, nogil=True)
def _residual(X, y, beta, r):
    n, p = X.shape
    for i in range(n):
        r[i] = y[i]
    for j in range(p):
        b = beta[j]
        if b != 0.0:
            for i in range(n):
                r[i] -= X[i, j] * b


@njit(cache=True, nogil=True)
def _rss(r):
    rr = 0.0
    for i in range(r.shape[0]):
        rr += r[i] * r[i]
    return rr


@njit(cache=True, nogil=True)
def _objective(r, beta, lam, mode):
    n = r.shape[0]
    rr = _rss(r)
    l1 = 0.0
    for j in range(beta.shape[0]):
        l1 += abs(beta[j])
    if mode == SQRT:
        return np.sqrt(rr / n) + lam * l1
    pen = l1 * l1 if mode == ORGANIC else l1
    return rr / n + 2.0 * lam * pen


@njit(cache=True, nogil=True)
def _max_corr(X, r, col_sq):
    corr = 0.0
    for j in range(X.shape[1]):
        if col_sq[j] == 0.0:
            continue
        c = abs(_col_dot(X, j, r))
        if c > corr:
            corr = c
    return corr


@njit(cache=True, nogil=True)
def _dual_value(X, y, u, lam, col_sq, squared):
    """Largest dual objective along the ray ``s u``, ``s`` real.

    Lasso dual: ``n^-1 (||y||^2 - ||y - v||^2)`` subject to
    ``||X^T v||_inf <= n lam``. L1-squared dual:
    ``n^-1 (||y||^2 - ||y - v||^2) - (2 lam)^-1 ||X^T v / n||_inf^2``.
    Both are concave quadratics in ``s`` with closed-form maximizers.
    """
    n = X.shape[0]
    yu = 0.0
    uu = 0.0
    for i in range(n):
        yu += y[i] * u[i]
        uu += u[i] * u[i]
    if uu == 0.0:
        return 0.0
    corr = _max_corr(X, u, col_sq)
    if squared:
        c = corr / n
        denom = uu / n + c * c / (2.0 * lam)
        return (yu / n) * (yu / n) / denom
    s = yu / uu
    if corr > 0.0:
        bound = n * lam / corr
        if s > bound:
            s = bound
        elif s < -bound:
            s = -bound
    return (2.0 * s * yu - s * s * uu) / n


@njit(cache=True, nogil=True)
def duality_gap(X, y, r, beta, lam, col_sq, squared):
    """Primal objective and duality gap at ``beta`` (``r`` must be its residual).

    The dual candidate is the best multiple of ``r``; the gap bounds the
    primal suboptimality of ``beta``.
    """
    primal = _objective(r, beta, lam, ORGANIC if squared else LASSO)
    return primal, primal - _dual_value(X, y, r, lam, col_sq, squared)


@njit(cache=True, nogil=True)
def _sweep(X, r, beta, col_sq, lam, squared, full):
    """One cyclic pass; returns the largest absolute coordinate move."""
    n, p = X.shape
    l1 = 0.0
    if squared:
        for j in range(p):
            l1 += abs(beta[j])
    max_change = 0.0
    for j in range(p):
        cj = col_sq[j]
        if cj == 0.0:
            continue
        old = beta[j]
        if not full and old == 0.0:
            continue
        d = cj / n
        z = _col_dot(X, j, r) / n + d * old
        if squared:
            rest = l1 - abs(old)
            if rest < 0.0:
                rest = 0.0
            new = _soft(z, 2.0 * lam * rest) / (2.0 * lam + d)
            l1 = rest + abs(new)
        else:
            new = _soft(z, lam) / d
        if new != old:
            diff = new - old
            for i in range(n):
                r[i] -= X[i, j] * diff
            beta[j] = new
            if abs(diff) > max_change:
                max_change = abs(diff)
    return max_change


@njit(cache=True, nogil=True)
def _extrapolate(hist, K, out):
    """Anderson combination of the last ``K + 1`` iterates stored in ``hist``."""
    p = hist.shape[1]
    U = np.empty((K, p))
    for k in range(K):
        for j in range(p):
            U[k, j] = hist[k + 1, j] - hist[k, j]
    M = U @ U.T
    scale = 0.0
    for k in range(K):
        scale += M[k, k]
    if scale == 0.0:
        return False
    for k in range(K):
        M[k, k] += 1e-12 * scale
    z = np.linalg.solve(M, np.ones(K))
    total = z.sum()
    if total == 0.0 or not np.isfinite(total):
        return False
    c = z / total
    for j in range(p):
        acc = 0.0
        for k in range(K):
            acc += c[k] * hist[k + 1, j]
        out[j] = acc
    return True


@njit(cache=True, nogil=True)
def _same_pattern(hist, K):
    for j in range(hist.shape[1]):
        s0 = np.sign(hist[0, j])
        for k in range(1, K + 1):
            if np.sign(hist[k, j]) != s0:
                return False
    return True


@njit(cache=True, nogil=True)
def _support_solve(X, y, beta, lam, squared, out):
    """Minimizer over the support of ``beta`` with its signs held fixed.

    Lasso: ``X_A^T X_A b = X_A^T y - n lam s``; l1-squared:
    ``(X_A^T X_A / n + 2 lam s s^T) b = X_A^T y / n``. Returns False when the
    system is singular, too large or flips a sign.
    """
    n, p = X.shape
    m = 0
    for j in range(p):
        if beta[j] != 0.0:
            m += 1
    if m == 0 or m >= n:
        return False
    idx = np.empty(m, dtype=np.int64)
    k = 0
    for j in range(p):
        if beta[j] != 0.0:
            idx[k] = j
            k += 1
    XA = np.empty((n, m))
    sgn = np.empty(m)
    for k in range(m):
        sgn[k] = np.sign(beta[idx[k]])
        for i in range(n):
            XA[i, k] = X[i, idx[k]]
    G = XA.T @ XA
    rhs = XA.T @ y
    if squared:
        for a in range(m):
            rhs[a] /= n
            for b in range(m):
                G[a, b] = G[a, b] / n + 2.0 * lam * sgn[a] * sgn[b]
    else:
        for a in range(m):
            rhs[a] -= n * lam * sgn[a]
    try:
        sol = np.linalg.solve(G, rhs)
    except Exception:
        return False
    for j in range(p):
        out[j] = 0.0
    for k in range(m):
        if not np.isfinite(sol[k]) or sol[k] * sgn[k] <= 0.0:
            return False
        out[idx[k]] = sol[k]
    return True


@njit(cache=True, nogil=True)
def coordinate_descent(X, y, col_sq, lam, mode, beta, r, max_sweeps, tol, gap_tol, sigma_floor, trace):
    """Minimize the objective selected by ``mode`` in place.

    Returns ``(sweeps, converged, collapsed, objective, gap, ascents, sigma)``.
    ``ascents`` counts sweeps that raised the objective beyond rounding and
    must be 0. ``collapsed`` is set in ``SQRT`` mode when
    ``n^-1/2 ||r||`` falls to ``sigma_floor``; ``sigma`` is that quantity
    at exit (NaN in the other modes).
    """
    n, p = X.shape
    yy = 0.0
    for i in range(n):
        yy += y[i] * y[i]
    floor = _GAP_FLOOR * yy / n
    record = trace.shape[0] > 0
    squared = mode == ORGANIC
    scaled = mode == SQRT

    K = _ANDERSON_K
    hist = np.empty((K + 1, p))
    nhist = 0
    trial = np.empty(p)
    r_trial = np.empty(n)

    sigma = np.nan
    mu = lam
    if scaled:
        sigma = np.sqrt(_rss(r) / n)
        if sigma <= sigma_floor:
            return 0, False, True, _objective(r, beta, lam, mode), np.nan, 0, sigma
        mu = lam * sigma

    sweeps = 0
    converged = False
    collapsed = False
    full = True
    gap = np.nan
    ascents = 0
    prev = np.inf
    obj = np.inf
    eff_tol = tol
    while sweeps < max_sweeps:
        max_change = _sweep(X, r, beta, col_sq, mu, squared, full)
        sweeps += 1
        obj = _objective(r, beta, lam, mode)

        if full:
            nhist = 0
        else:
            hist[nhist] = beta
            nhist += 1
            if nhist == K + 1:
                nhist = 0
                jumped = False
                if mu > 0.0 and _same_pattern(hist, K) and _support_solve(X, y, beta, mu, squared, trial):
                    _residual(X, y, trial, r_trial)
                    obj_trial = _objective(r_trial, trial, lam, mode)
                    if obj_trial < obj:
                        beta[:] = trial
                        r[:] = r_trial
                        obj = obj_trial
                        jumped = True
                if not jumped and _extrapolate(hist, K, trial):
                    _residual(X, y, trial, r_trial)
                    obj_trial = _objective(r_trial, trial, lam, mode)
                    if obj_trial < obj:
                        beta[:] = trial
                        r[:] = r_trial
                        obj = obj_trial

        if obj > prev + 1e-12 * max(1.0, abs(prev)):
            ascents += 1
        prev = obj
        if record:
            trace[sweeps - 1] = obj

        if scaled:
            new_sigma = np.sqrt(_rss(r) / n)
            if new_sigma <= sigma_floor:
                sigma = new_sigma
                collapsed = True
                break
            # a noise-level move counts as a coordinate move
            move = abs(new_sigma - sigma)
            if move > max_change:
                max_change = move
            sigma = new_sigma
            mu = lam * sigma

        if max_change <= eff_tol:
            if not full:
                full = True
                continue
            if mu == 0.0:
                converged = True
                break
            _residual(X, y, beta, r)
            if scaled:
                sigma = np.sqrt(_rss(r) / n)
                mu = lam * sigma
            inner, gap = duality_gap(X, y, r, beta, mu, col_sq, squared)
            if not scaled:
                obj = inner
            if gap_tol == np.inf or gap <= gap_tol * inner + floor:
                converged = True
                break
            # gap not yet certified: refine on the active set with a finer move tolerance
            eff_tol = max(0.1 * eff_tol, 1e-300)
            full = False
        else:
            full = False
    if scaled:
        obj = _objective(r, beta, lam, mode)
    return sweeps, converged, collapsed, obj, gap, ascents, sigma

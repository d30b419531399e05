"""Lasso path solver: numba coordinate descent plus an exact active-set step.

Works on standardized columns (mean 0, ``z'z / n = 1``) with per-column
penalty scales, so the solution is exact for the unstandardized problem

    n^{-1} ||y - b0 - H beta||^2 + lam * ||beta||_1 .

Coordinate descent converges slowly once the fit is nearly saturated (p > n,
small lambda). After every chunk of sweeps the solver therefore runs a
feature-sign search on the current support. The result never has a larger
objective than the CD iterate; it ends the path point when it solves the
stationarity equations for its signs and every inactive coordinate satisfies
its KKT bound, and otherwise seeds the next chunk of sweeps.
"""

import numpy as np
from numba import njit

CHUNK = 25


@njit(cache=True)
def _corr(Z, r, j):
    n = Z.shape[0]
    acc = 0.0
    for i in range(n):
        acc += Z[i, j] * r[i]
    return acc / n


@njit(cache=True)
def lambda_max_kernel(Z, yc, scale):
    # lambda above which every coefficient is zero: max_j 2 |rho_j| scale_j
    best = 0.0
    for j in range(Z.shape[1]):
        v = 2.0 * abs(_corr(Z, yc, j)) * scale[j]
        if v > best:
            best = v
    return best


@njit(cache=True)
def _update(Z, r, g, j, lam, scale):
    # exact coordinate minimizer; returns the absolute change
    n = Z.shape[0]
    rho = _corr(Z, r, j) + g[j]
    if 2.0 * abs(rho) * scale[j] <= lam:
        new = 0.0
    else:
        thr = lam / (2.0 * scale[j])
        new = rho - thr if rho > 0 else rho + thr
    delta = new - g[j]
    if delta != 0.0:
        for i in range(n):
            r[i] -= delta * Z[i, j]
        g[j] = new
    return abs(delta)


@njit(cache=True)
def cd_sweeps(Z, r, g, active, lam, scale, tol, max_sweeps):
    """Run up to ``max_sweeps`` sweeps in place; returns (converged, sweeps used).

    A full sweep grows ``active``; between full sweeps only active coordinates
    are cycled. Convergence means a full sweep moved no coefficient by ``tol``.
    """
    p = Z.shape[1]
    sweeps = 0
    while sweeps < max_sweeps:
        max_d = 0.0
        for j in range(p):
            d = _update(Z, r, g, j, lam, scale)
            if g[j] != 0.0:
                active[j] = True
            if d > max_d:
                max_d = d
        sweeps += 1
        if max_d < tol:
            return True, sweeps
        while sweeps < max_sweeps:
            max_d = 0.0
            for j in range(p):
                if active[j]:
                    d = _update(Z, r, g, j, lam, scale)
                    if d > max_d:
                        max_d = d
            sweeps += 1
            if max_d < tol:
                break
    return False, sweeps


def _objective(x, G, zty, w):
    # penalized least squares on a support, up to the constant y'y / n
    return x @ G @ x - 2.0 * zty @ x + w @ np.abs(x)


def _solve(G, rhs):
    """Solution of ``G t = rhs``, or None when G is numerically singular."""
    try:
        t = np.linalg.solve(G, rhs)
    except np.linalg.LinAlgError:
        return None
    scale = np.abs(G).max() * np.abs(t).max() + np.abs(rhs).max()
    if not (np.all(np.isfinite(t)) and np.abs(G @ t - rhs).max() <= 1e-9 * scale):
        return None
    return t


def _null_step(x0, G, w, theta):
    evals, evecs = np.linalg.eigh(G)
    if evals[0] > 1e-10 * max(evals[-1], 1e-300):
        return None
    v = evecs[:, 0]
    if w @ (theta * v) > 0:
        v = -v
    toward = theta * v < 0
    if not np.any(toward):
        return None
    t = -x0[toward] / v[toward]
    k = np.flatnonzero(toward)[int(np.argmin(t))]
    new = x0 + t.min() * v
    new[k] = 0.0
    # moving inside the null space leaves the fit unchanged up to rounding
    if np.sign(new[new != 0]).tolist() != theta[new != 0].tolist():
        return None
    return new


def _feature_sign(g, lam_w, gram, zty, n, max_iter=None):
    """Feature-sign search restricted to the support of ``g``.

    Each iteration solves the stationarity equations for the current signs and
    moves to the lowest objective among the solution and the sign-change points
    on the segment towards it, dropping coordinates that reach zero. A singular
    support is first reduced by null-space steps. The objective never increases. Returns ``(x, consistent)``, where ``consistent``
    means the final iterate solves the equations for its own signs.
    """
    x = g.copy()
    S = np.flatnonzero(x)
    if max_iter is None:
        max_iter = 50 + S.size
    for _ in range(max_iter):
        if S.size == 0:
            return x, True
        x0 = x[S]
        theta = np.sign(x0)
        G = gram[np.ix_(S, S)]
        w = lam_w[S]
        rhs = zty[S] - w * theta / 2.0
        target = _solve(G, rhs) if S.size < n else None  # centered columns: rank < n
        if target is None:
            # singular support: slide along a null direction of G (the fit does not
            # change) in the direction that lowers the penalty until a coefficient
            # reaches zero
            step = _null_step(x0, G, w, theta)
            if step is None:
                return x, False
            x[S] = step
            S = np.flatnonzero(x)
            continue
        d = target - x0
        flips = np.flatnonzero(np.sign(target) != theta)
        ts = np.append(x0[flips] / (x0[flips] - target[flips]), 1.0)
        # objective along x0 + t d, up to a constant
        Gd = G @ d
        lin = 2.0 * (x0 @ Gd - zty[S] @ d)
        quad = d @ Gd
        pts = x0[:, None] + d[:, None] * ts[None, :]
        pts[flips, np.arange(len(flips))] = 0.0
        f = lin * ts + quad * ts**2 + w @ np.abs(pts)
        k = int(np.argmin(f))
        new = pts[:, k]
        # accept on the directly evaluated objective, not the expansion above
        if not _objective(new, G, zty[S], w) < _objective(x0, G, zty[S], w):
            return x, False
        x[S] = new
        if k == len(ts) - 1 and flips.size == 0:
            return x, True
        S = np.flatnonzero(x)
    return x, False


def _polish(Z, yc, g, lam, scale, gram, zty):
    """Improved iterate and whether it satisfies every KKT condition."""
    n = Z.shape[0]
    lam_w = lam / scale
    x, consistent = _feature_sign(g, lam_w, gram, zty, n)
    S = np.flatnonzero(x)
    r = yc - Z[:, S] @ x[S]
    if not consistent:
        return x, r, False
    corr = Z.T @ r / n
    off = np.ones(len(g), dtype=bool)
    off[S] = False
    # inactive KKT, with slack for rounding in the correlations
    ok = not np.any(2.0 * np.abs(corr[off]) * scale[off] > lam * (1.0 + 1e-9))
    return x, r, ok


def solve_path(Z, yc, scale, lambdas, tol, max_sweeps, dev_max=None, fdev=1e-5):
    """Warm-started path; returns (coefs L x p, points solved, ok flag).

    ``max_sweeps`` caps the sweeps spent on each path point. With ``dev_max``
    set, the path stops after the first point whose fraction of explained
    variance reaches ``dev_max`` or improves on the previous point by less than
    ``fdev`` (relative); later rows are left at zero.
    """
    n, p = Z.shape
    out = np.zeros((len(lambdas), p))
    g = np.zeros(p)
    r = yc.copy()
    active = np.zeros(p, dtype=np.bool_)
    gram = None
    tss = float(yc @ yc)
    prev_dev = 0.0
    for k, lam in enumerate(lambdas):
        used = 0
        while True:
            done, s = cd_sweeps(Z, r, g, active, lam, scale, tol, min(CHUNK, max_sweeps - used))
            used += s
            if done:
                break
            if gram is None:
                gram = Z.T @ Z / n
                zty = Z.T @ yc / n
            x, x_r, exact = _polish(Z, yc, g, lam, scale, gram, zty)
            g, r = x, np.ascontiguousarray(x_r)
            active |= g != 0
            if exact:
                break
            if used >= max_sweeps:
                return out, k, False
        out[k] = g
        if dev_max is not None and tss > 0:
            dev = 1.0 - float(r @ r) / tss
            if dev >= dev_max or (k > 0 and dev - prev_dev < fdev * dev):
                return out, k + 1, True
            prev_dev = dev
    return out, len(lambdas), True

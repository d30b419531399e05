"""Independent reference implementations used by the tests.

Nothing here imports the package under test: each oracle is a direct,
unoptimized transcription of the definition it checks against.
"""

import itertools
import math

import mpmath
import numpy as np

mpmath.mp.dps = 40


def phi_hp(z) -> float:
    """Standard normal CDF in 40-digit arithmetic."""
    return mpmath.ncdf(mpmath.mpf(z))


def quantile_bisect(p, iters: int = 200):
    """Normal quantile by bisection on the high-precision CDF."""
    p = mpmath.mpf(p)
    lo, hi = mpmath.mpf(-40), mpmath.mpf(40)
    for _ in range(iters):
        mid = (lo + hi) / 2
        if mpmath.ncdf(mid) < p:
            lo = mid
        else:
            hi = mid
    return (lo + hi) / 2


def lasso_objective(H, y, beta, lam):
    Hc = H - H.mean(axis=0)
    yc = y - y.mean()
    r = yc - Hc @ beta
    return float(r @ r) / len(y) + lam * float(np.abs(beta).sum())


def lasso_bruteforce(H, y, lam):
    """Minimize n^-1 ||y - b0 - H beta||^2 + lam ||beta||_1 by sign enumeration.

    For every sign pattern the stationarity equations on its support are
    solved; sign-consistent solutions are candidates and the one with the
    smallest objective wins.
    """
    H = np.asarray(H, dtype=float)
    y = np.asarray(y, dtype=float)
    n, p = H.shape
    Hc = H - H.mean(axis=0)
    yc = y - y.mean()
    best, best_val = np.zeros(p), lasso_objective(H, y, np.zeros(p), lam)
    for signs in itertools.product((-1, 0, 1), repeat=p):
        s = np.array(signs, dtype=float)
        S = np.flatnonzero(s)
        if S.size == 0:
            continue
        A = Hc[:, S].T @ Hc[:, S]
        rhs = Hc[:, S].T @ yc - n * lam * s[S] / 2
        try:
            sol = np.linalg.solve(A, rhs)
        except np.linalg.LinAlgError:
            continue
        if not np.all(np.sign(sol) == s[S]):
            continue
        beta = np.zeros(p)
        beta[S] = sol
        val = lasso_objective(H, y, beta, lam)
        if val < best_val:
            best, best_val = beta, val
    return best


def ecdf(sample, x):
    """Right-continuous empirical CDF, #{v <= x} / n, by direct counting."""
    return sum(1 for v in sample if v <= x) / len(sample)


def legacy_mu_minus(pos, neg, a, b):
    """Straight-line transcription of the legacy Winsorized mean estimator.

    mu = q^-1 [ n-^-1 sum_i h(X_-^i) 1{F+(X_-^i) in (a,b)}
                + phi(Phi^-1(F-(F+^-1(b)))) - phi(Phi^-1(F-(F+^-1(a)))) ]
    with q = n-^-1 sum_i 1{F+(X_-^i) in (a,b)}, F+^-1(u) = min{x in pos : F+(x) >= u}
    and phi(Phi^-1(0)) = phi(Phi^-1(1)) = 0.
    """
    def h(x):
        u = min(max(ecdf(pos, x), a), b)
        return float(quantile_bisect(u))

    def finv(u):
        return min(x for x in pos if ecdf(pos, x) >= u)

    def phi_of_quantile(u):
        if u <= 0.0 or u >= 1.0:
            return 0.0
        z = quantile_bisect(u)
        return float(mpmath.npdf(z))

    inside = [x for x in neg if a < ecdf(pos, x) < b]
    q = len(inside) / len(neg)
    total = sum(h(x) for x in inside) / len(neg)
    total += phi_of_quantile(ecdf(neg, finv(b))) - phi_of_quantile(ecdf(neg, finv(a)))
    return total / q


def bootstrap_median_se(values, B, seed):
    """Second implementation of the bootstrap: explicit loop over resamples."""
    values = list(map(float, values))
    n = len(values)
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, n, size=(B, n))
    meds = []
    for row in idx:
        sample = sorted(values[i] for i in row)
        mid = n // 2
        meds.append(sample[mid] if n % 2 else 0.5 * (sample[mid - 1] + sample[mid]))
    mean = sum(meds) / B
    se = math.sqrt(sum((m - mean) ** 2 for m in meds) / (B - 1))
    values.sort()
    mid = n // 2
    med = values[mid] if n % 2 else 0.5 * (values[mid - 1] + values[mid])
    return med, se

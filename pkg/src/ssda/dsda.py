"""Direct sparse discriminant analysis on (transformed) features.

The direction solves

    min_beta  n^{-1} sum_i (y_i - beta0 - h_i' beta)^2 + lam * ||beta||_1

with ``y`` coded +1 (majority class) / -1. With this scaling the KKT
conditions read ``|n^{-1} <h_j - mean(h_j), r>| = lam / 2`` on the active set
and ``<= lam / 2`` elsewhere, where ``r`` is the residual. The intercept is the
plug-in rule ``-(mu+ + mu-)'beta / 2 + log(pi+ / pi-) beta'S beta / (mu+ - mu-)'beta``.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np

from ._cd import lambda_max_kernel, solve_path
from .data import Dataset, code_binary
from .errors import (
    ConvergenceError,
    DegenerateProjectionError,
    DimensionMismatchError,
    FoldConstructionError,
    ModelFormatError,
)
from .transforms import TransformModel, fit_transform

__all__ = [
    "DsdaFit",
    "Tuning",
    "CvResult",
    "lasso_path",
    "lambda_max",
    "lambda_grid",
    "intercept",
    "cv_tune",
    "fit_dsda",
    "fit_ssda",
    "predict",
    "kkt_residual",
]

FORMAT_NAME = "ssda.dsda"
FORMAT_VERSION = 1
TOL = 1e-7
MAX_SWEEPS = 100_000
# path truncation used inside CV, as in glmnet
DEV_MAX = 0.999


class _Standardized:
    """Centered, unit-variance copy of the non-constant columns of H."""

    def __init__(self, H, y, warn=True):
        H = np.asarray(H, dtype=float)
        y = np.asarray(y, dtype=float)
        if H.ndim != 2 or H.shape[0] != y.shape[0]:
            raise DimensionMismatchError(f"H has shape {H.shape}, y has {y.shape[0]} entries")
        if H.shape[0] < 2:
            raise ValueError("need at least two observations")
        if not (np.all(np.isfinite(H)) and np.all(np.isfinite(y))):
            raise ValueError("H and y must be finite")
        self.n, self.p = H.shape
        self.keep = np.ptp(H, axis=0) > 0
        if warn and not np.all(self.keep):
            warnings.warn(
                f"dropping {int((~self.keep).sum())} zero-variance column(s); "
                "their coefficients are fixed at 0",
                RuntimeWarning,
                stacklevel=3,
            )
        Hk = H[:, self.keep]
        self.mean = Hk.mean(axis=0)
        self.sd = Hk.std(axis=0)
        self.Z = np.asfortranarray((Hk - self.mean) / self.sd)
        self.yc = y - y.mean()
        self.y_sd = float(y.std())

    def lambda_max(self) -> float:
        if self.Z.shape[1] == 0:
            return 0.0
        return float(lambda_max_kernel(self.Z, self.yc, self.sd))

    def path(self, lambdas, dev_max=None):
        """Coefficients on the original scale and the number of points solved."""
        lambdas = np.asarray(lambdas, dtype=float)
        betas = np.zeros((len(lambdas), self.p))
        if self.Z.shape[1] == 0:
            return betas, len(lambdas)
        tol = TOL * self.y_sd if self.y_sd > 0 else TOL
        gam, solved, ok = solve_path(self.Z, self.yc, self.sd, lambdas, tol, MAX_SWEEPS,
                                     dev_max=dev_max)
        if not ok:
            raise ConvergenceError(f"coordinate descent exceeded {MAX_SWEEPS} sweeps")
        betas[:, self.keep] = gam / self.sd
        return betas, solved


def _check_grid(lambdas):
    lambdas = np.atleast_1d(np.asarray(lambdas, dtype=float))
    if lambdas.size == 0:
        raise ValueError("lambda grid is empty")
    if np.any(lambdas <= 0) or np.any(np.diff(lambdas) >= 0):
        raise ValueError("lambda grid must be strictly descending and positive")
    return lambdas


def lasso_path(H, y, lambdas) -> np.ndarray:
    """Lasso solutions along a descending grid, warm-started.

    Returns an ``(len(lambdas), p)`` array; row ``k`` minimizes the penalized
    least-squares objective at ``lambdas[k]`` with the intercept profiled out.
    """
    lambdas = _check_grid(lambdas)
    return _Standardized(H, y).path(lambdas)[0]


def lambda_max(H, y) -> float:
    """Smallest lambda at which the whole solution is zero."""
    return _Standardized(H, y, warn=False).lambda_max()


def lambda_grid(lam_max: float, size: int = 50, min_ratio: float = 1e-3) -> np.ndarray:
    """``size`` log-spaced values from ``lam_max`` down to ``min_ratio * lam_max``."""
    if lam_max <= 0:
        raise ValueError("lambda_max is zero; every column is constant")
    if size == 1:
        return np.array([lam_max])
    return np.geomspace(lam_max, lam_max * min_ratio, size)


def kkt_residual(H, y, beta, lam) -> float:
    """Largest violation of the lasso KKT conditions (0 at an exact optimum)."""
    H = np.asarray(H, dtype=float)
    y = np.asarray(y, dtype=float)
    beta = np.asarray(beta, dtype=float)
    Hc = H - H.mean(axis=0)
    r = (y - y.mean()) - Hc @ beta
    grad = Hc.T @ r / len(y)
    active = beta != 0
    viol = np.zeros_like(grad)
    viol[active] = np.abs(grad[active] - lam / 2 * np.sign(beta[active]))
    viol[~active] = np.maximum(np.abs(grad[~active]) - lam / 2, 0.0)
    return float(viol.max()) if viol.size else 0.0


def _class_moments(H, y, beta):
    active = np.flatnonzero(beta)
    Ha = np.asarray(H, dtype=float)[:, active]
    pos, neg = y > 0, y < 0
    mu_p = Ha[pos].mean(axis=0)
    mu_m = Ha[neg].mean(axis=0)
    resid = np.vstack([Ha[pos] - mu_p, Ha[neg] - mu_m])
    sigma = resid.T @ resid / max(len(y) - 2, 1)
    pi_p = pos.sum() / len(y)
    return active, mu_p, mu_m, sigma, (pi_p, 1.0 - pi_p)


def _intercept(beta, H, y, warn=True):
    beta = np.asarray(beta, dtype=float)
    y = np.asarray(y, dtype=float)
    active, mu_p, mu_m, sigma, (pi_p, pi_m) = _class_moments(H, y, beta)
    log_odds = np.log(pi_p / pi_m)
    if active.size == 0:
        if warn:
            warnings.warn("beta is zero; classifying by the class priors", RuntimeWarning,
                          stacklevel=3)
        return float(log_odds), (active, mu_p, mu_m, sigma, (pi_p, pi_m))
    b = beta[active]
    proj = float((mu_p - mu_m) @ b)
    if proj == 0.0:
        raise DegenerateProjectionError("(mu+ - mu-)' beta is zero")
    beta0 = -float((mu_p + mu_m) @ b) / 2 + log_odds * float(b @ sigma @ b) / proj
    return beta0, (active, mu_p, mu_m, sigma, (pi_p, pi_m))


def intercept(beta, H, y) -> float:
    """Plug-in intercept for direction ``beta`` on features ``H`` and labels ``y`` in {+1, -1}.

    Class means and the pooled within-class covariance (denominator ``n - 2``)
    are computed on the active set only. A zero ``beta`` falls back to the
    prior log-odds with a warning.
    """
    return _intercept(beta, H, y)[0]


@dataclass(frozen=True)
class DsdaFit:
    """Fitted sparse discriminant direction and intercept."""

    beta: np.ndarray = field(repr=False)
    beta0: float
    lam: float
    labels: tuple = ("+", "-")
    lambda_path: np.ndarray | None = field(default=None, repr=False)
    cv_errors: np.ndarray | None = field(default=None, repr=False)
    class_means_hat: tuple | None = field(default=None, repr=False)
    sigma_hat_AA: np.ndarray | None = field(default=None, repr=False)
    priors_hat: tuple = ()
    variant: str = "identity"

    @property
    def active_set(self) -> np.ndarray:
        return np.flatnonzero(self.beta)

    @property
    def n_features(self) -> int:
        return len(self.beta)

    def decision_function(self, H) -> np.ndarray:
        H = np.asarray(H, dtype=float)
        if H.ndim != 2 or H.shape[1] != self.n_features:
            raise DimensionMismatchError(
                f"fit has {self.n_features} feature(s), input has shape {H.shape}"
            )
        return self.beta0 + H @ self.beta

    def to_dict(self) -> dict:
        active = self.active_set
        d = {
            "format": FORMAT_NAME,
            "version": FORMAT_VERSION,
            "variant": self.variant,
            "n_features": self.n_features,
            "beta": [[int(j), float(self.beta[j])] for j in active],
            "beta0": float(self.beta0),
            "lambda": float(self.lam),
            "labels": list(self.labels),
            "priors": [float(v) for v in self.priors_hat],
        }
        if self.lambda_path is not None:
            d["lambda_path"] = self.lambda_path.tolist()
        if self.cv_errors is not None:
            d["cv_errors"] = self.cv_errors.tolist()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "DsdaFit":
        if d.get("format") != FORMAT_NAME:
            raise ModelFormatError(f"not a DSDA fit (format={d.get('format')!r})")
        if d.get("version") != FORMAT_VERSION:
            raise ModelFormatError(f"unsupported DSDA fit version {d.get('version')!r}")
        beta = np.zeros(int(d["n_features"]))
        for j, v in d["beta"]:
            beta[int(j)] = v
        return cls(
            beta=beta,
            beta0=float(d["beta0"]),
            lam=float(d["lambda"]),
            labels=tuple(d["labels"]),
            lambda_path=None if "lambda_path" not in d else np.asarray(d["lambda_path"]),
            cv_errors=None if "cv_errors" not in d else np.asarray(d["cv_errors"]),
            priors_hat=tuple(d.get("priors", ())),
            variant=d.get("variant", "identity"),
        )


@dataclass(frozen=True)
class Tuning:
    """How lambda is chosen: fixed ``lam`` or stratified ``folds``-fold CV."""

    folds: int = 5
    grid_size: int = 50
    min_ratio: float = 1e-3
    seed: int = 0
    lam: float | None = None


@dataclass(frozen=True)
class CvResult:
    lam: float
    lambdas: np.ndarray
    cv_errors: np.ndarray


def stratified_folds(y, folds: int, seed: int = 0) -> np.ndarray:
    """Fold id per observation; each class is shuffled and dealt round-robin."""
    if folds < 2:
        raise ValueError("need at least 2 folds")
    y = np.asarray(y)
    rng = np.random.default_rng(seed)
    fold_id = np.empty(len(y), dtype=int)
    for sign in (1.0, -1.0):
        idx = np.flatnonzero(y == sign)
        if len(idx) < folds:
            raise FoldConstructionError(
                f"class {int(sign):+d} has {len(idx)} observation(s), fewer than {folds} folds"
            )
        fold_id[rng.permutation(idx)] = np.arange(len(idx)) % folds
    return fold_id


def _classify(scores):
    return np.where(scores >= 0, 1.0, -1.0)


def cv_tune(H, y, folds: int = 5, grid_size: int = 50, seed: int = 0,
            lambdas=None, min_ratio: float = 1e-3) -> CvResult:
    """Choose lambda by stratified cross-validated misclassification rate.

    The grid defaults to :func:`lambda_grid` anchored at the full-data
    ``lambda_max``. The intercept is recomputed on every training fold, and
    ties go to the largest lambda. A fold path stops early once its training
    fit explains 99.9% of the label variance (or stops improving); grid points
    past the shortest fold path get a NaN error and are not candidates.
    """
    H = np.asarray(H, dtype=float)
    y = np.asarray(y, dtype=float)
    if lambdas is None:
        lambdas = lambda_grid(lambda_max(H, y), grid_size, min_ratio)
    lambdas = _check_grid(lambdas)
    fold_id = stratified_folds(y, folds, seed)
    wrong = np.zeros(len(lambdas))
    reach = len(lambdas)
    for f in range(folds):
        train, test = fold_id != f, fold_id == f
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            betas, solved = _Standardized(H[train], y[train], warn=False).path(
                lambdas[:reach], dev_max=DEV_MAX)
            reach = min(reach, solved)
            for k, beta in enumerate(betas[:reach]):
                try:
                    b0 = _intercept(beta, H[train], y[train], warn=False)[0]
                except DegenerateProjectionError:
                    beta = np.zeros_like(beta)
                    b0 = _intercept(beta, H[train], y[train], warn=False)[0]
                pred = _classify(b0 + H[test] @ beta)
                wrong[k] += np.sum(pred != y[test])
    errors = wrong / len(y)
    errors[reach:] = np.nan
    best = int(np.flatnonzero(errors == np.nanmin(errors))[0])
    return CvResult(float(lambdas[best]), lambdas, errors)


def fit_dsda(H, y, tuning: Tuning = Tuning(), labels=("+", "-"), variant="identity") -> DsdaFit:
    """Fit the direction and intercept on features ``H`` and labels ``y`` in {+1, -1}."""
    H = np.asarray(H, dtype=float)
    y = np.asarray(y, dtype=float)
    std = _Standardized(H, y)
    cv_errors = None
    if tuning.lam is not None:
        lam = float(tuning.lam)
        grid = np.array([lam])
        lam_max = std.lambda_max()
        path_grid = grid if lam >= lam_max else np.array([lam_max, lam])
    else:
        grid = lambda_grid(std.lambda_max(), tuning.grid_size, tuning.min_ratio)
        cv = cv_tune(H, y, tuning.folds, lambdas=grid, seed=tuning.seed)
        lam, cv_errors = cv.lam, cv.cv_errors
        path_grid = grid[: int(np.flatnonzero(grid == lam)[0]) + 1]
    beta = std.path(path_grid)[0][-1]
    try:
        beta0, (active, mu_p, mu_m, sigma, priors) = _intercept(beta, H, y)
    except DegenerateProjectionError:
        warnings.warn("degenerate projection; falling back to the zero direction", RuntimeWarning,
                      stacklevel=2)
        beta = np.zeros_like(beta)
        beta0, (active, mu_p, mu_m, sigma, priors) = _intercept(beta, H, y, warn=False)
    return DsdaFit(
        beta=beta,
        beta0=beta0,
        lam=lam,
        labels=tuple(labels),
        lambda_path=grid,
        cv_errors=cv_errors,
        class_means_hat=(mu_p, mu_m),
        sigma_hat_AA=sigma,
        priors_hat=tuple(float(v) for v in priors),
        variant=variant,
    )


def fit_ssda(data: Dataset, variant: str = "naive", tuning: Tuning = Tuning(),
             a: float | None = None, b: float | None = None):
    """Estimate the transform, then fit DSDA on the transformed data.

    ``variant="identity"`` gives plain DSDA on the raw features. Returns
    ``(TransformModel, DsdaFit)``.
    """
    y_pm, pos, neg = code_binary(data.y)
    transform = fit_transform(data, variant, a=a, b=b)
    H = transform.apply(data.X)
    fit = fit_dsda(H, y_pm, tuning, labels=(pos, neg), variant=variant)
    return transform, fit


def predict(fit: DsdaFit, transform: TransformModel, X):
    """Labels and scores ``beta0 + h(x)' beta``; a zero score goes to the "+" class.

    Returns ``(labels, scores)`` with labels drawn from ``fit.labels``.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise DimensionMismatchError(f"X must be 2-D, got shape {X.shape}")
    if X.shape[1] != fit.n_features:
        raise DimensionMismatchError(
            f"fit has {fit.n_features} feature(s), input has {X.shape[1]}"
        )
    scores = fit.decision_function(transform.apply(X))
    pos, neg = fit.labels
    labels = np.where(scores >= 0, np.array(pos, dtype=object), np.array(neg, dtype=object))
    return labels, scores

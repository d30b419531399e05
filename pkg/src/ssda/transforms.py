"""Monotone marginal transformations h_j = Phi^{-1} o F_j estimated from data.

Every fitted transform is a right-continuous step function of the training
values, so it depends on the data only through within-feature ranks: fitting
on ``g(X)`` and querying at ``g(x)`` gives bitwise the same output as fitting
on ``X`` and querying at ``x`` for any strictly increasing ``g``.

Variants
--------
naive
    Winsorized ECDF of the majority ("+") class at ``(1/n+^2, 1 - 1/n+^2)``.
pooled
    Prior-weighted average of the "+" map and the shifted "-" map, with the
    shift estimated from both classes. With more than two classes this is the
    multiclass pooled map, the largest class acting as the reference.
legacy
    Fixed user-supplied Winsorization ``(a, b)`` on the "+" class plus the
    truncated-normal estimate of the "-" class mean.
oracle
    Known inverse distortions (simulation only).
identity
    ``x -> x``; turns SSDA into plain DSDA.
"""

from dataclasses import dataclass, field

import numpy as np

from .data import Dataset, class_order, code_binary
from .distortions import DISTORTIONS, undistort
from .errors import (
    DimensionMismatchError,
    InsufficientClassDataError,
    LegacyDegenerateError,
    ModelFormatError,
)
from .normal import inv_norm_cdf, norm_pdf

__all__ = [
    "EcdfTable",
    "StepMap",
    "TransformModel",
    "fit_ecdf",
    "fit_naive",
    "fit_pooled",
    "fit_legacy",
    "fit_multiclass_pooled",
    "identity_transform",
    "apply_transform",
    "generalized_inverse",
    "VARIANTS",
]

VARIANTS = ("naive", "pooled", "legacy", "oracle", "identity")
FORMAT_NAME = "ssda.transform"
FORMAT_VERSION = 1


@dataclass(frozen=True)
class EcdfTable:
    """Empirical CDF of one feature in one class, Winsorized at ``[a, b]``.

    A table built from constant values is degenerate and evaluates to ``b``
    everywhere.
    """

    sorted_values: np.ndarray
    a: float
    b: float

    @property
    def n_class(self) -> int:
        return len(self.sorted_values)

    @property
    def degenerate(self) -> bool:
        return bool(self.sorted_values[0] == self.sorted_values[-1])

    def raw(self, x):
        """Unclipped right-continuous ECDF, ``#{v <= x} / n``."""
        counts = np.searchsorted(self.sorted_values, np.asarray(x, dtype=float), side="right")
        return counts / self.n_class

    def evaluate(self, x):
        x = np.asarray(x, dtype=float)
        if self.degenerate:
            return np.full(x.shape, self.b)
        return np.clip(self.raw(x), self.a, self.b)


def fit_ecdf(values, a: float, b: float) -> EcdfTable:
    """Build a Winsorized ECDF from the class-conditional sample ``values``."""
    values = np.asarray(values, dtype=float).ravel()
    if len(values) < 2:
        raise InsufficientClassDataError(f"need >= 2 values to fit an ECDF, got {len(values)}")
    if not 0.0 < a < b < 1.0:
        raise ValueError(f"Winsorization bounds must satisfy 0 < a < b < 1, got ({a}, {b})")
    return EcdfTable(np.sort(values), float(a), float(b))


def generalized_inverse(table: EcdfTable, u: float) -> float:
    """``min{x in sorted_values : F(x) >= u}`` for the unclipped ECDF."""
    levels = table.raw(table.sorted_values)
    idx = int(np.searchsorted(levels, u, side="left"))
    return float(table.sorted_values[min(idx, table.n_class - 1)])


@dataclass(frozen=True)
class StepMap:
    """Right-continuous step function: ``values[k]`` on ``[breaks[k], breaks[k+1])``.

    Queries below ``breaks[0]`` return ``left``; queries above the last break
    keep the last value.
    """

    breaks: np.ndarray
    values: np.ndarray
    left: float

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        k = np.searchsorted(self.breaks, x, side="right") - 1
        out = self.values[np.maximum(k, 0)]
        return np.where(k < 0, self.left, out)

    def is_constant(self) -> bool:
        return bool(np.all(self.values == self.left))


def _normal_scores(table: EcdfTable, x):
    return inv_norm_cdf(table.evaluate(x))


def _bounds(n: int):
    a = 1.0 / n**2
    return a, 1.0 - a


@dataclass(frozen=True)
class TransformModel:
    """Fitted per-feature monotone maps.

    Attributes
    ----------
    variant : str
        One of :data:`VARIANTS`.
    n_features : int
    labels : tuple
        Class labels in coding order; ``labels[0]`` is the "+" (reference) class.
    priors : tuple of float
        Estimated class proportions, aligned with ``labels``.
    steps : list of StepMap, optional
        One map per feature for the data-driven variants.
    inverses : list of str, optional
        Distortion names per feature for the oracle variant.
    mu_minus_hat : ndarray, optional
        Estimated "-" class mean on the transformed scale (pooled / legacy).
    class_shifts : ndarray, optional
        ``(K, p)`` pooled class means for a multiclass fit; row 0 is zero.
    degenerate : ndarray of bool
        Features whose contributing class sample was constant.
    """

    variant: str
    n_features: int
    labels: tuple = ()
    priors: tuple = ()
    steps: list | None = field(default=None, repr=False)
    inverses: list | None = None
    mu_minus_hat: np.ndarray | None = field(default=None, repr=False)
    class_shifts: np.ndarray | None = field(default=None, repr=False)
    degenerate: np.ndarray | None = field(default=None, repr=False)

    def apply(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X.reshape(-1, 1) if self.n_features == 1 else X.reshape(1, -1)
        if X.shape[1] != self.n_features:
            raise DimensionMismatchError(
                f"model has {self.n_features} feature(s), input has {X.shape[1]}"
            )
        if self.variant == "identity":
            return X.copy()
        out = np.empty_like(X)
        if self.variant == "oracle":
            for j, name in enumerate(self.inverses):
                out[:, j] = undistort(name, X[:, j])
            return out
        for j, step in enumerate(self.steps):
            out[:, j] = step(X[:, j])
        return out

    # serialization -------------------------------------------------------

    def to_dict(self) -> dict:
        d = {
            "format": FORMAT_NAME,
            "version": FORMAT_VERSION,
            "variant": self.variant,
            "n_features": self.n_features,
            "labels": list(self.labels),
            "priors": [float(v) for v in self.priors],
        }
        if self.steps is not None:
            d["features"] = [
                {"breaks": s.breaks.tolist(), "values": s.values.tolist(), "left": float(s.left)}
                for s in self.steps
            ]
        if self.inverses is not None:
            d["inverses"] = list(self.inverses)
        if self.mu_minus_hat is not None:
            d["mu_minus_hat"] = self.mu_minus_hat.tolist()
        if self.class_shifts is not None:
            d["class_shifts"] = self.class_shifts.tolist()
        if self.degenerate is not None:
            d["degenerate"] = np.flatnonzero(self.degenerate).tolist()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TransformModel":
        if d.get("format") != FORMAT_NAME:
            raise ModelFormatError(f"not a transform model (format={d.get('format')!r})")
        if d.get("version") != FORMAT_VERSION:
            raise ModelFormatError(f"unsupported transform model version {d.get('version')!r}")
        if d["variant"] not in VARIANTS:
            raise ModelFormatError(f"unknown variant {d['variant']!r}")
        p = int(d["n_features"])
        steps = None
        if "features" in d:
            steps = [
                StepMap(np.asarray(f["breaks"], dtype=float), np.asarray(f["values"], dtype=float),
                        float(f["left"]))
                for f in d["features"]
            ]
        degenerate = None
        if "degenerate" in d:
            degenerate = np.zeros(p, dtype=bool)
            degenerate[d["degenerate"]] = True
        return cls(
            variant=d["variant"],
            n_features=p,
            labels=tuple(d.get("labels", ())),
            priors=tuple(d.get("priors", ())),
            steps=steps,
            inverses=d.get("inverses"),
            mu_minus_hat=None if "mu_minus_hat" not in d else np.asarray(d["mu_minus_hat"]),
            class_shifts=None if "class_shifts" not in d else np.asarray(d["class_shifts"]),
            degenerate=degenerate,
        )


def apply_transform(model: TransformModel, X) -> np.ndarray:
    """Evaluate the fitted maps column by column."""
    return model.apply(X)


def identity_transform(p: int, labels=(), priors=()) -> TransformModel:
    return TransformModel("identity", p, tuple(labels), tuple(priors))


def _split_binary(data: Dataset):
    y_pm, pos, neg = code_binary(data.y)
    n_pos = int(np.sum(y_pm > 0))
    n_neg = data.n - n_pos
    priors = (n_pos / data.n, n_neg / data.n)
    return data.X[y_pm > 0], data.X[y_pm < 0], (pos, neg), priors


def _step_from_tables(breaks, fn, degenerate):
    """Step map taking the value ``fn(x)`` on each break; constant if degenerate."""
    breaks = np.unique(breaks)
    values = fn(breaks)
    left = float(fn(np.array([-np.inf]))[0])
    if degenerate:
        left = float(values[-1])
        values = np.full_like(values, left)
    return StepMap(breaks, values, left)


def fit_naive(data: Dataset) -> TransformModel:
    """Transform estimated from the majority class only."""
    Xp, _, labels, priors = _split_binary(data)
    a, b = _bounds(len(Xp))
    steps, degenerate = [], np.zeros(data.p, dtype=bool)
    for j in range(data.p):
        table = fit_ecdf(Xp[:, j], a, b)
        degenerate[j] = table.degenerate
        steps.append(_step_from_tables(table.sorted_values,
                                       lambda x, t=table: _normal_scores(t, x), table.degenerate))
    return TransformModel("naive", data.p, labels, priors, steps=steps, degenerate=degenerate)


def fit_pooled(data: Dataset) -> TransformModel:
    """Transform pooling both classes through the estimated "-" class shift."""
    Xp, Xm, labels, priors = _split_binary(data)
    pi_p, pi_m = priors
    a_p, b_p = _bounds(len(Xp))
    a_m, b_m = _bounds(len(Xm))
    steps = []
    mu = np.empty(data.p)
    degenerate = np.zeros(data.p, dtype=bool)
    for j in range(data.p):
        tp = fit_ecdf(Xp[:, j], a_p, b_p)
        tm = fit_ecdf(Xm[:, j], a_m, b_m)
        mu_from_plus = np.mean(_normal_scores(tp, Xm[:, j]))
        mu_from_minus = -np.mean(_normal_scores(tm, Xp[:, j]))
        mu[j] = pi_p * mu_from_plus + pi_m * mu_from_minus
        degenerate[j] = tp.degenerate or tm.degenerate

        def pooled(x, tp=tp, tm=tm, shift=mu[j]):
            return pi_p * _normal_scores(tp, x) + pi_m * (_normal_scores(tm, x) + shift)

        breaks = np.concatenate([tp.sorted_values, tm.sorted_values])
        steps.append(_step_from_tables(breaks, pooled, tp.degenerate and tm.degenerate))
    return TransformModel("pooled", data.p, labels, priors, steps=steps,
                          mu_minus_hat=mu, degenerate=degenerate)


def _phi_at_quantile(u: float) -> float:
    # phi(Phi^{-1}(u)), with the limits phi(+-inf) = 0
    if u <= 0.0 or u >= 1.0:
        return 0.0
    return float(norm_pdf(inv_norm_cdf(u)))


def fit_legacy(data: Dataset, a: float, b: float) -> TransformModel:
    """Fixed-bound Winsorized transform with the truncated-normal "-" mean estimate.

    Raises
    ------
    LegacyDegenerateError
        If no negative-class value of some feature falls strictly inside (a, b)
        under the "+" class ECDF.
    """
    Xp, Xm, labels, priors = _split_binary(data)
    n_m = len(Xm)
    steps, mu = [], np.empty(data.p)
    degenerate = np.zeros(data.p, dtype=bool)
    for j in range(data.p):
        tp = fit_ecdf(Xp[:, j], a, b)
        tm = fit_ecdf(Xm[:, j], a, b)
        degenerate[j] = tp.degenerate
        f_plus = tp.raw(Xm[:, j])
        inside = (f_plus > a) & (f_plus < b)
        q = inside.sum() / n_m
        if q == 0:
            raise LegacyDegenerateError(j)
        h_minus = _normal_scores(tp, Xm[:, j])
        upper = _phi_at_quantile(float(tm.raw(generalized_inverse(tp, b))))
        lower = _phi_at_quantile(float(tm.raw(generalized_inverse(tp, a))))
        mu[j] = (np.sum(h_minus * inside) / n_m + upper - lower) / q
        steps.append(_step_from_tables(tp.sorted_values,
                                       lambda x, t=tp: _normal_scores(t, x), tp.degenerate))
    return TransformModel("legacy", data.p, labels, priors, steps=steps,
                          mu_minus_hat=mu, degenerate=degenerate)


def fit_multiclass_pooled(data: Dataset) -> TransformModel:
    """Pooled transform for K >= 2 classes.

    The largest class is the reference (mean zero). For class ``k`` and each
    reference map ``l`` the shift estimate is
    ``mean_{Y=k} Phi^{-1} F_l - mean_{Y=ref} Phi^{-1} F_l``; these are averaged
    with weights ``pi_l`` and the final map is ``sum_k pi_k (Phi^{-1} F_k + mu_k)``.
    """
    labels = class_order(data.y)
    ylist = np.asarray(data.y).tolist()
    members = [np.array([v == lab for v in ylist]) for lab in labels]
    counts = [int(m.sum()) for m in members]
    if len(labels) < 2:
        raise InsufficientClassDataError(f"need at least two classes, found {len(labels)}")
    for lab, c in zip(labels, counts):
        if c < 2:
            raise InsufficientClassDataError(f"class {lab!r} has {c} observation(s); need >= 2")
    K, p = len(labels), data.p
    priors = np.array(counts, dtype=float) / data.n
    shifts = np.zeros((K, p))
    steps = []
    degenerate = np.zeros(p, dtype=bool)
    for j in range(p):
        cols = [data.X[m, j] for m in members]
        tables = [fit_ecdf(c, *_bounds(len(c))) for c in cols]
        degenerate[j] = any(t.degenerate for t in tables)
        # scores[l][k] = mean over class k of Phi^{-1} F_l
        scores = np.array([[np.mean(_normal_scores(t, c)) for c in cols] for t in tables])
        for k in range(1, K):
            shifts[k, j] = np.sum(priors * (scores[:, k] - scores[:, 0]))

        def pooled(x, tables=tables, shift=shifts[:, j]):
            total = np.zeros(np.shape(x))
            for w, t, s in zip(priors, tables, shift):
                total = total + w * (_normal_scores(t, x) + s)
            return total

        breaks = np.concatenate([t.sorted_values for t in tables])
        steps.append(_step_from_tables(breaks, pooled, all(t.degenerate for t in tables)))
    return TransformModel("pooled", p, tuple(labels), tuple(priors.tolist()), steps=steps,
                          class_shifts=shifts, degenerate=degenerate)


def oracle_from_names(names, labels=(), priors=()) -> TransformModel:
    """Oracle transform applying the named exact inverses per feature."""
    unknown = [nm for nm in names if nm not in DISTORTIONS]
    if unknown:
        raise ValueError(f"unknown distortion(s): {sorted(set(unknown))}")
    return TransformModel("oracle", len(names), tuple(labels), tuple(priors), inverses=list(names))


def fit_transform(data: Dataset, variant: str, a: float | None = None, b: float | None = None):
    """Dispatch on ``variant`` for the data-driven and identity transforms."""
    if variant == "naive":
        return fit_naive(data)
    if variant == "pooled":
        return fit_pooled(data)
    if variant == "legacy":
        if a is None or b is None:
            raise ValueError("legacy variant needs Winsorization bounds a and b")
        return fit_legacy(data, a, b)
    if variant == "identity":
        _, pos, neg = code_binary(data.y)
        n_pos = int(np.sum(np.asarray(data.y) == pos))
        return identity_transform(data.p, (pos, neg), (n_pos / data.n, 1 - n_pos / data.n))
    raise ValueError(f"cannot fit variant {variant!r} from data")

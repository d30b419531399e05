"""Dataset container and class-label coding."""

from dataclasses import dataclass, field

import numpy as np

from .errors import InsufficientClassDataError


@dataclass
class Dataset:
    """Feature matrix with one label per row.

    ``y`` holds the original labels (numbers or strings). ``latent`` is the
    undistorted Gaussian draw when the data came from the simulator.
    """

    X: np.ndarray
    y: np.ndarray
    feature_names: list | None = None
    latent: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=float)
        if self.X.ndim != 2:
            raise ValueError(f"X must be 2-D, got shape {self.X.shape}")
        self.y = np.asarray(self.y)
        if self.y.shape != (self.X.shape[0],):
            raise ValueError(f"y has shape {self.y.shape}, expected ({self.X.shape[0]},)")

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]


def _label_key(label):
    try:
        return (0, float(label), "")
    except (TypeError, ValueError):
        return (1, 0.0, str(label))


def sorted_labels(y) -> list:
    """Distinct labels ordered numerically when every label is numeric, else lexically."""
    uniq = list(dict.fromkeys(np.asarray(y).tolist()))
    keys = [_label_key(u) for u in uniq]
    if all(k[0] == 0 for k in keys):
        return [u for _, u in sorted(zip(keys, uniq), key=lambda t: t[0][1])]
    return sorted(uniq, key=str)


def class_order(y) -> list:
    """Labels by decreasing class size; ties resolved by :func:`sorted_labels` order."""
    labels = sorted_labels(y)
    ylist = np.asarray(y).tolist()
    counts = {lab: ylist.count(lab) for lab in labels}
    return sorted(labels, key=lambda lab: (-counts[lab], labels.index(lab)))


def code_binary(y, min_count: int = 2):
    """Code a two-class label vector as +1 (majority) / -1 (minority).

    Returns ``(y_pm, positive_label, negative_label)``. With equal class sizes
    the label that sorts first is coded +1.
    """
    y = np.asarray(y)
    order = class_order(y)
    if len(order) < 2:
        raise InsufficientClassDataError(f"need two classes, found {len(order)}")
    if len(order) > 2:
        raise InsufficientClassDataError(
            f"binary classifier needs exactly two classes, found {len(order)}"
        )
    pos, neg = order
    ylist = y.tolist()
    y_pm = np.array([1.0 if v == pos else -1.0 for v in ylist])
    for lab, sign in ((pos, 1.0), (neg, -1.0)):
        if np.sum(y_pm == sign) < min_count:
            raise InsufficientClassDataError(
                f"class {lab!r} has {int(np.sum(y_pm == sign))} observation(s); need >= {min_count}"
            )
    return y_pm, pos, neg

"""Strictly increasing marginal distortions g and their exact inverses."""

import warnings

import numpy as np

from .normal import inv_norm_cdf, norm_cdf

_HALF_PI = np.pi / 2


def _clamp_open(x, lo, hi, name):
    x = np.asarray(x, dtype=float)
    bad = (x <= lo) | (x >= hi)
    if np.any(bad):
        warnings.warn(
            f"{int(bad.sum())} value(s) outside the range of {name}; clamped",
            RuntimeWarning,
            stacklevel=3,
        )
        x = np.clip(x, np.nextafter(lo, hi), np.nextafter(hi, lo))
    return x


def _inv_exp(x):
    return np.log(_clamp_open(x, 0.0, np.inf, "exp"))


def _inv_atan(x):
    return np.tan(_clamp_open(x, -_HALF_PI, _HALF_PI, "arctan"))


def _inv_atan2(x):
    return np.tan(_clamp_open(x, -_HALF_PI, _HALF_PI, "arctan(2v)")) / 2.0


def _inv_ncdf(x):
    return inv_norm_cdf(_clamp_open(x, 0.0, 1.0, "Phi"))


# name -> (g, g^{-1})
DISTORTIONS = {
    "identity": (lambda v: np.asarray(v, dtype=float), lambda x: np.asarray(x, dtype=float)),
    "cube": (lambda v: np.asarray(v, dtype=float) ** 3, np.cbrt),
    "exp": (np.exp, _inv_exp),
    "arctan": (np.arctan, _inv_atan),
    "ncdf": (norm_cdf, _inv_ncdf),
    "shifted_cube": (lambda v: (np.asarray(v, dtype=float) + 1.0) ** 3, lambda x: np.cbrt(x) - 1.0),
    "arctan2": (lambda v: np.arctan(2.0 * np.asarray(v, dtype=float)), _inv_atan2),
}


def distort(name: str, v):
    return DISTORTIONS[name][0](v)


def undistort(name: str, x):
    return DISTORTIONS[name][1](x)

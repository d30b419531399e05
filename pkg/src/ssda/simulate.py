"""Benchmark models: Gaussian classes with structured covariance, sparse Bayes
directions and monotone marginal distortions (series b).

Normal draws are produced by inverse-CDF sampling from a Philox counter-based
uniform stream keyed by the seed tuple, so a replication is reproducible from
``(master seed, model, replication, stream)`` alone. The series is not part of
the key: series a and b of one replication share the same latent draws.
"""

import functools
import re
import warnings
from dataclasses import dataclass, field

import numpy as np

from .data import Dataset
from .distortions import DISTORTIONS, distort
from .normal import inv_norm_cdf, norm_cdf
from .transforms import TransformModel, oracle_from_names

__all__ = [
    "CovarianceSpec",
    "SimulationSpec",
    "build_covariance",
    "make_spec",
    "sample_model",
    "bayes_error",
    "bayes_error_mc",
    "bayes_scores",
    "oracle_transform",
    "parse_index_set",
    "uniform_stream",
    "normal_stream",
]


@dataclass(frozen=True)
class CovarianceSpec:
    """``kind`` is ``"ar"`` (rho^|i-j|), ``"cs"`` (constant rho off the diagonal)
    or ``"block_cs"`` (``blocks`` CS(rho) blocks of size ``block_dim``)."""

    kind: str
    p: int
    rho: float
    blocks: int = 1

    @property
    def block_dim(self) -> int:
        return self.p // self.blocks


def _validate_cov(spec: CovarianceSpec):
    if spec.kind not in ("ar", "cs", "block_cs"):
        raise ValueError(f"unknown covariance kind {spec.kind!r}")
    if spec.p < 1:
        raise ValueError("p must be positive")
    if not -1 < spec.rho < 1:
        raise ValueError(f"|rho| must be < 1, got {spec.rho}")
    dim = spec.p
    if spec.kind == "block_cs":
        if spec.blocks < 1 or spec.p % spec.blocks:
            raise ValueError(f"p={spec.p} is not divisible into {spec.blocks} blocks")
        dim = spec.block_dim
    if spec.kind in ("cs", "block_cs") and dim > 1 and spec.rho <= -1.0 / (dim - 1):
        raise ValueError(f"CS({spec.rho}) of dimension {dim} is not positive definite")


@functools.lru_cache(maxsize=16)
def _cached_covariance(spec: CovarianceSpec):
    _validate_cov(spec)
    idx = np.arange(spec.p)
    if spec.kind == "ar":
        sigma = spec.rho ** np.abs(idx[:, None] - idx[None, :]).astype(float)
    elif spec.kind == "cs":
        sigma = np.full((spec.p, spec.p), spec.rho)
    else:
        block = idx // spec.block_dim
        sigma = np.where(block[:, None] == block[None, :], spec.rho, 0.0)
    np.fill_diagonal(sigma, 1.0)
    try:
        chol = np.linalg.cholesky(sigma)
    except np.linalg.LinAlgError as exc:
        raise ValueError(f"{spec} is not positive definite") from exc
    sigma.setflags(write=False)
    chol.setflags(write=False)
    return sigma, chol


def build_covariance(spec: CovarianceSpec):
    """Dense covariance and its lower Cholesky factor (read-only arrays)."""
    return _cached_covariance(spec)


# Series-b distortion assignment per model column. "a, b, ..., c" means {a} plus b..c;
# "a, ..., c" means a..c. Indices are 1-based.
_DISTORTION_ROWS = {
    (1, 2): [
        ("cube", "1, 101, ..., 150"),
        ("exp", "2, 151, ..., 200"),
        ("arctan", "3, 201, ..., 300"),
        ("cube", "4, ..., 50"),
        ("ncdf", "51, ..., 100"),
        ("shifted_cube", "301, ..., 350"),
        ("arctan2", "351, ..., 400"),
    ],
    (3,): [
        ("cube", "1, 201, ..., 300"),
        ("exp", "2, 301, ..., 400"),
        ("arctan", "3, 401, ..., 500"),
        ("cube", "4, 6, ..., 100"),
        ("ncdf", "5, 101, ..., 200"),
        ("shifted_cube", "501, ..., 600"),
        ("arctan2", "601, ..., 800"),
    ],
    (4,): [
        ("cube", "3, 201, ..., 300"),
        ("exp", "4, 301, ..., 400"),
        ("arctan", "5, 401, ..., 500"),
        ("cube", "1, 8, ..., 100"),
        ("ncdf", "2, 101, ..., 200"),
        ("shifted_cube", "6, 501, ..., 600"),
        ("arctan2", "7, 601, ..., 800"),
    ],
}

_MODELS = {
    1: dict(n=150, p=400, cov=("ar", 0.5, 1), scale=0.556, coef=(3, 1.5, 0, 0, 2)),
    2: dict(n=200, p=400, cov=("ar", 0.5, 1), scale=0.582, coef=(3, 2.5, -2.8)),
    3: dict(n=400, p=800, cov=("cs", 0.5, 1), scale=0.395, coef=(3, 1.7, -2.2, -2.1, 2.55)),
    4: dict(n=300, p=800, cov=("block_cs", 0.6, 5), scale=0.916,
            coef=(1.2, -1.4, 1.15, -1.64, 1.5, -1, 2)),
}


def parse_index_set(text: str) -> list:
    """1-based indices from an index-set string such as ``"4, 6, ..., 100"``."""
    tokens = [t.strip() for t in text.split(",")]
    if "..." not in tokens:
        return [int(t) for t in tokens]
    k = tokens.index("...")
    if k == 0 or k != len(tokens) - 2:
        raise ValueError(f"cannot parse index set {text!r}")
    singles = [int(t) for t in tokens[: k - 1]]
    start, stop = int(tokens[k - 1]), int(tokens[k + 1])
    if stop < start:
        raise ValueError(f"empty range in {text!r}")
    return singles + list(range(start, stop + 1))


def distortion_assignment(model_id: int, p: int) -> list:
    """Distortion name for every feature (0-based) of series b of ``model_id``.

    Raises ``ValueError`` if the transcribed index sets overlap or do not
    cover exactly ``1..p``.
    """
    rows = next(v for k, v in _DISTORTION_ROWS.items() if model_id in k)
    names = [None] * p
    for name, cell in rows:
        for j in parse_index_set(cell):
            if not 1 <= j <= p:
                raise ValueError(f"model {model_id}b: index {j} outside 1..{p}")
            if names[j - 1] is not None:
                raise ValueError(f"model {model_id}b: index {j} assigned twice")
            names[j - 1] = name
    missing = [j + 1 for j, nm in enumerate(names) if nm is None]
    if missing:
        raise ValueError(f"model {model_id}b: indices {missing[:5]}... have no distortion")
    return names


@dataclass(frozen=True)
class SimulationSpec:
    """One benchmark configuration. ``mu_minus = 0`` and ``mu_plus = Sigma beta_bayes``."""

    model_id: int
    series: str
    n: int
    p: int
    cov: CovarianceSpec
    beta_bayes: np.ndarray = field(repr=False)
    g_names: tuple = field(repr=False)
    priors: tuple = (0.5, 0.5)

    @property
    def support(self) -> np.ndarray:
        return np.flatnonzero(self.beta_bayes)

    @property
    def sigma(self) -> np.ndarray:
        return build_covariance(self.cov)[0]

    @property
    def mu_plus(self) -> np.ndarray:
        return self.sigma @ self.beta_bayes

    @property
    def mu_minus(self) -> np.ndarray:
        return np.zeros(self.p)

    @property
    def name(self) -> str:
        return f"{self.model_id}{self.series}"


def make_spec(model_id: int, series: str = "a", n: int | None = None, p: int | None = None,
              rho: float | None = None) -> SimulationSpec:
    """Benchmark model ``model_id`` (1-4), series ``"a"`` (Gaussian) or ``"b"`` (distorted)."""
    if model_id not in _MODELS:
        raise ValueError(f"model must be 1-4, got {model_id!r}")
    if series not in ("a", "b"):
        raise ValueError(f"series must be 'a' or 'b', got {series!r}")
    m = _MODELS[model_id]
    n = m["n"] if n is None else int(n)
    p = m["p"] if p is None else int(p)
    kind, default_rho, blocks = m["cov"]
    coef = np.asarray(m["coef"], dtype=float) * m["scale"]
    if p < len(coef):
        raise ValueError(f"p={p} is smaller than the Bayes support of model {model_id}")
    if n < 2:
        raise ValueError("n must be at least 2")
    cov = CovarianceSpec(kind, p, default_rho if rho is None else float(rho), blocks)
    _validate_cov(cov)
    beta = np.zeros(p)
    beta[: len(coef)] = coef
    beta.setflags(write=False)
    if series == "a":
        names = ("identity",) * p
    else:
        names = tuple(distortion_assignment(model_id, p))
    return SimulationSpec(model_id, series, n, p, cov, beta, names)


def _seed_key(seed):
    if isinstance(seed, (tuple, list)):
        return [int(s) for s in seed]
    return [int(seed)]


def uniform_stream(seed, size) -> np.ndarray:
    """``size`` uniforms in the open interval (0, 1) from a Philox stream."""
    gen = np.random.Philox(np.random.SeedSequence(_seed_key(seed)))
    bits = gen.random_raw(int(np.prod(size)))
    u = ((bits >> np.uint64(11)).astype(float) + 0.5) / 2.0**53
    return u.reshape(size)


def normal_stream(seed, size) -> np.ndarray:
    """Standard normals by inverse-CDF transform of :func:`uniform_stream`."""
    return inv_norm_cdf(uniform_stream(seed, size))


def sample_model(spec: SimulationSpec, n_draw: int | None = None, seed=0) -> Dataset:
    """Draw ``(X = g(V), Y)`` with ``Y`` uniform on {+1, -1} and ``V | Y ~ N(mu_Y, Sigma)``.

    ``seed`` may be an int or a tuple of ints. The latent ``V`` is kept on the
    returned dataset.
    """
    n = spec.n if n_draw is None else int(n_draw)
    key = _seed_key(seed)
    y = np.where(uniform_stream(key + [0], n) < spec.priors[0], 1, -1)
    _, chol = build_covariance(spec.cov)
    V = normal_stream(key + [1], (n, spec.p)) @ chol.T
    V[y == 1] += spec.mu_plus
    X = np.empty_like(V)
    for name in set(spec.g_names):
        cols = [j for j, nm in enumerate(spec.g_names) if nm == name]
        X[:, cols] = distort(name, V[:, cols])
    return Dataset(X, y, latent=V)


def bayes_scores(spec: SimulationSpec, V) -> np.ndarray:
    """Bayes discriminant ``(v - (mu+ + mu-)/2)' beta + log(pi+/pi-)`` on latent draws."""
    V = np.asarray(V, dtype=float)
    mid = (spec.mu_plus + spec.mu_minus) / 2
    return (V - mid) @ spec.beta_bayes + np.log(spec.priors[0] / spec.priors[1])


def bayes_error(spec: SimulationSpec) -> float:
    """Closed-form Bayes error ``Phi(-delta / 2)`` for equal priors, delta^2 = beta' Sigma beta."""
    if spec.priors[0] != spec.priors[1]:
        raise NotImplementedError("closed form implemented for equal priors")
    delta2 = float(spec.beta_bayes @ spec.sigma @ spec.beta_bayes)
    return float(norm_cdf(-0.5 * np.sqrt(delta2)))


def bayes_error_mc(spec: SimulationSpec, draws: int = 1_000_000, seed=0,
                   chunk: int = 200_000) -> float:
    """Monte Carlo error of the Bayes rule on fresh draws.

    The rule only reads the coordinates in the support of ``beta_bayes``, so only
    that Gaussian sub-vector is sampled (same distribution, far cheaper).
    """
    A = spec.support
    sigma_A = spec.sigma[np.ix_(A, A)]
    chol_A = np.linalg.cholesky(sigma_A)
    mu_A = spec.mu_plus[A]
    b = spec.beta_bayes[A]
    offset = -(mu_A / 2) @ b + np.log(spec.priors[0] / spec.priors[1])
    wrong = 0
    key = _seed_key(seed)
    for c, start in enumerate(range(0, draws, chunk)):
        m = min(chunk, draws - start)
        y = np.where(uniform_stream(key + [c, 0], m) < spec.priors[0], 1, -1)
        V = normal_stream(key + [c, 1], (m, len(A))) @ chol_A.T
        V[y == 1] += mu_A
        pred = np.where(V @ b + offset >= 0, 1, -1)
        wrong += int(np.sum(pred != y))
    return wrong / draws


def oracle_transform(spec: SimulationSpec) -> TransformModel:
    """Exact inverse distortion per feature (identity for series a)."""
    return oracle_from_names(spec.g_names)
